#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fasmobo/dynamics.hpp"
#include "fasmobo/pareto.hpp"
#include "fasmobo/surrogate.hpp"

namespace fasmobo {

enum class SurrogateKind { kRf, kGp };
enum class ModelMode { kGrey, kBlack };

struct OptimizerParams {
  int budget = 300;       // total true evaluations, including the initial design
  int init_samples = 64;  // N_0
  int n_mc = 128;
  int n_candidates = 512;
  TrustRegionParams tr;
  bool use_trust_region = true;  // off: global candidate sampling
  SurrogateKind surrogate = SurrogateKind::kRf;
  ModelMode mode = ModelMode::kGrey;
  Embedding embedding = Embedding::kOrdinal;
  RfParams rf;                           // per-round seeds are derived internally
  std::optional<double> gp_time_scale;   // tau for dynamic GP kernels
  ObjectiveVector ref_point{0.0, 0.0};
  double obs_noise_std = 0.0;
  std::uint64_t seed = 0;
};

void check_params(const OptimizerParams& params);

struct TraceRow {
  std::int64_t eval_idx = 0;  // global, 0-based
  std::int64_t slot = 0;      // 0 in static mode
  Configuration config;
  ObjectiveVector f;
  double hvi = 0.0;
  double running_hv = 0.0;
  double tr_side = 0.0;
  int restarts = 0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  ParetoArchive archive;
  int restarts = 0;
};

/// Counts true objective evaluations; surrogate predictions never pass here.
class BudgetedEvaluator {
 public:
  BudgetedEvaluator(const SceneEvaluator* scene_eval, double obs_noise_std, Rng noise_rng)
      : scene_eval_(scene_eval), obs_noise_std_(obs_noise_std), noise_rng_(noise_rng) {}

  void set_scene(const SceneEvaluator* scene_eval) { scene_eval_ = scene_eval; }

  Evaluation evaluate(const Configuration& cfg) {
    ++used_;
    return scene_eval_->evaluate(cfg, obs_noise_std_, noise_rng_);
  }

  std::int64_t used() const { return used_; }

 private:
  const SceneEvaluator* scene_eval_;
  double obs_noise_std_;
  Rng noise_rng_;
  std::int64_t used_ = 0;
};

/// The deterministic tail of the grey-box composite: latent sample -> f.
ObjectiveMap grey_objective_map(int n_users, int n_rx, double noise_comm);

/// Black-box route: the surrogate regresses f directly.
ObjectiveMap black_objective_map();

using PosteriorFn = std::function<PreparedPosterior(const EncodedPoint&, double)>;

/// One fitted surrogate of either kind behind the posterior interface.
struct FittedSurrogate {
  std::optional<GpModel> gp;
  std::optional<RfModel> rf;

  PreparedPosterior prepare(const EncodedPoint& pt, double t, bool clip) const {
    return rf ? rf->prepare(pt, t, clip) : gp->prepare(pt, t, clip);
  }
  int n_trees() const { return rf ? rf->n_trees() : 0; }
};

/// Refit on the current data; dynamic mode adds the time feature (RF) or the
/// temporal kernel (GP). `round` salts the per-fit rng stream.
FittedSurrogate fit_surrogate(const TrainingSet& data, const SpaceSpec& space,
                              const OptimizerParams& params, std::int64_t round, bool dynamic);

/// Draws a candidate pool inside the trust region (or globally), scores each
/// with the constrained Monte-Carlo EHVI under common random numbers, and
/// returns the argmax; exact ties break uniformly at random, and an all-zero
/// score row falls back to a uniform pool member (pure exploration).
Configuration select_candidate(const PosteriorFn& posterior, const ParetoArchive& archive,
                               const TrustRegion& tr, const SpaceSpec& space,
                               const OptimizerParams& params, const ObjectiveMap& g,
                               double time_idx, int n_trees_for_batch, Rng& rng);

/// Static loop: N_0 uniform evaluations, then fit / acquire / evaluate /
/// update until the budget is spent. Deterministic given params.seed.
RunTrace run_static(const SceneEvaluator& scene_eval, const OptimizerParams& params);

struct DynamicRunResult {
  std::vector<RunTrace> slots;           // per-slot rows and archive
  std::size_t final_dataset_size = 0;
  int total_restarts = 0;
};

/// Dynamic loop over precomputed slot scenes: sliding-window dataset,
/// spatio-temporal surrogate refits, trust region re-centered each slot on
/// the previous Pareto set with side length reset to l_max, per-slot budget
/// of exactly `per_slot_budget` true evaluations.
DynamicRunResult run_dynamic(const std::vector<Scene>& slot_scenes, const SpaceSpec& space,
                             const OptimizerParams& params, int per_slot_budget,
                             std::size_t window);

}  // namespace fasmobo
