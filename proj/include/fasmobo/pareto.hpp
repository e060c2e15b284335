#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fasmobo/config_space.hpp"
#include "fasmobo/isac_physics.hpp"
#include "fasmobo/rng.hpp"

namespace fasmobo {

/// Component-wise >= with at least one strict inequality.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

struct ArchiveEntry {
  ObjectiveVector f;
  std::int64_t config_id = -1;
  std::int64_t eval_idx = -1;
};

struct InsertResult {
  bool inserted = false;
  double hvi = 0.0;
};

/// Non-dominated set with an exact bi-objective hypervolume sweep. Entries
/// weakly dominated by the reference point are rejected outright; surviving
/// entries keep their insertion order.
class ParetoArchive {
 public:
  ParetoArchive() = default;
  explicit ParetoArchive(const ObjectiveVector& reference) : ref_(reference) {}

  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  const ObjectiveVector& reference() const { return ref_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  /// Dominated newcomers are rejected with hvi 0; otherwise the newcomer is
  /// added, dominated incumbents drop out, and hvi = HV(after) - HV(before).
  InsertResult insert(const ObjectiveVector& f, std::int64_t config_id, std::int64_t eval_idx);

  double hypervolume() const;

  /// Hypervolume improvement if f were inserted; 0 for dominated points.
  double hvi(const ObjectiveVector& f) const;

  /// Leave-one-out hypervolume contribution of entry i.
  double exclusive_contribution(std::size_t i) const;

 private:
  void rebuild_stairs();

  std::vector<ArchiveEntry> entries_;
  ObjectiveVector ref_{0.0, 0.0};
  // maximal staircase of reference-clipped coordinates: x descending,
  // y strictly ascending; only strictly positive points carry area
  std::vector<std::pair<double, double>> stairs_;
};

inline double hypervolume_2d(const ParetoArchive& archive) { return archive.hypervolume(); }

/// Index of the restart center: maximal exclusive contribution, ties broken
/// by most recent evaluation index, then by the rng stream.
std::size_t restart_center_index(const ParetoArchive& archive, Rng& rng);

/// Fresh trust region at the strongest archive member with side length l_max.
/// config_by_eval maps an entry's eval_idx to its configuration. Throws
/// FasError("restart-empty-archive") on an empty archive.
TrustRegion tr_restart(const ParetoArchive& archive,
                       const std::vector<Configuration>& config_by_eval, double l_max, Rng& rng);

/// Monte-Carlo draw material shared across all candidates of one acquisition
/// round (common random numbers).
struct SampleBatch {
  Mat eps;                    // n_mc x latent_dim standard normals
  std::vector<int> tree_idx;  // n_mc ensemble-member indices

  int n_mc() const { return static_cast<int>(eps.rows()); }

  static SampleBatch draw(int n_mc, int latent_dim, int n_trees, Rng& rng);
};

/// Per-candidate posterior snapshot. Gaussian route uses mean + stddev with
/// the batch's normals; the ensemble route returns one member's prediction.
struct PreparedPosterior {
  Vec mean;
  Vec stddev;
  std::vector<Vec> member_preds;  // non-empty selects the ensemble route
  bool clip_nonneg = true;

  Vec draw(int j, const SampleBatch& batch) const;
};

using ObjectiveMap = std::function<ObjectiveVector(const Vec&)>;

/// Sample-average EHVI: mean hypervolume improvement of g(posterior sample)
/// against the archive. Deterministic given the batch.
double ehvi_mc(const PreparedPosterior& posterior, const SampleBatch& batch,
               const ParetoArchive& archive, const ObjectiveMap& g);

/// Hard-rejection acquisition: zero utility for infeasible configurations.
double constrained_acq(const Configuration& cfg, const SpaceSpec& space, double raw_ehvi);

}  // namespace fasmobo
