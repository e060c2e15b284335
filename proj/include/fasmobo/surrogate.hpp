#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>

#include "fasmobo/config_space.hpp"
#include "fasmobo/pareto.hpp"
#include "fasmobo/rng.hpp"

namespace fasmobo {

enum class Embedding { kOrdinal, kOneHot };

int embedded_dim(const std::vector<Bounds>& bounds, Embedding emb);
Vec embed_coords(const std::vector<int>& coords, const std::vector<Bounds>& bounds, Embedding emb);
inline Vec embed_point(const EncodedPoint& pt, Embedding emb) {
  return embed_coords(pt.coords, pt.bounds, emb);
}

/// Rolling design matrix: (encoded input, time index) -> target vector, with
/// an optional sliding-window capacity that evicts oldest-first.
class TrainingSet {
 public:
  TrainingSet() = default;
  explicit TrainingSet(std::size_t capacity) : capacity_(capacity) {}

  void add(const EncodedPoint& pt, double time_idx, const Vec& target);

  std::size_t size() const { return targets_.size(); }
  bool empty() const { return targets_.empty(); }
  std::size_t capacity() const { return capacity_; }
  int target_dim() const { return targets_.empty() ? 0 : static_cast<int>(targets_[0].size()); }

  const EncodedPoint& input(std::size_t i) const { return inputs_[i]; }
  double time(std::size_t i) const { return times_[i]; }
  const Vec& target(std::size_t i) const { return targets_[i]; }

  Mat embedded_inputs(Embedding emb) const;  // n x d
  Vec times() const;
  Mat target_matrix() const;  // n x K_h

 private:
  std::size_t capacity_ = 0;  // 0 = unbounded
  std::vector<EncodedPoint> inputs_;
  std::vector<double> times_;
  std::vector<Vec> targets_;
};

enum class KernelFamily { kRbf, kMatern52 };

struct KernelSpec {
  KernelFamily family = KernelFamily::kRbf;
  Vec lengthscales;  // one per embedded input dimension
  double signal_var = 1.0;
  double noise_var = 1e-6;
  std::optional<double> time_scale;  // exponential temporal decay when set
};

/// Stationary spatial kernel on lengthscale-normalized coordinates, times
/// exp(-|t - t'| / tau) when a time scale is set. k(x, x) = signal variance.
double kernel_eval(const KernelSpec& spec, const Vec& x, double t, const Vec& x2, double t2);

/// Half-coordinate-range lengthscales; unit signal with relative noise.
KernelSpec default_kernel(const std::vector<Bounds>& bounds, Embedding emb,
                          std::optional<double> time_scale = std::nullopt);

struct GpOptions {
  bool standardize = false;  // z-score each output before fitting
};

/// Exact GP with independent per-output posteriors sharing one Cholesky
/// factor of (K + noise I). Jitter grows until the factorization succeeds,
/// capped at 1e-4 * signal; beyond that fit throws "kernel-ill-conditioned".
class GpModel {
 public:
  struct Prediction {
    Vec mean;
    Vec variance;
  };

  static GpModel fit(const TrainingSet& data, const KernelSpec& spec, Embedding emb,
                     const GpOptions& opts = {});

  Prediction predict(const EncodedPoint& pt, double time_idx) const;
  Prediction predict_embedded(const Vec& x, double t) const;

  PreparedPosterior prepare(const EncodedPoint& pt, double time_idx, bool clip_nonneg) const;

  int n_train() const { return static_cast<int>(x_.rows()); }
  int n_outputs() const { return static_cast<int>(alpha_.cols()); }
  const KernelSpec& spec() const { return spec_; }

 private:
  KernelSpec spec_;
  Embedding emb_ = Embedding::kOrdinal;
  Mat x_;      // n x d embedded training inputs
  Vec t_;      // n time indices
  Mat l_;      // lower Cholesky of K + noise I (+ jitter)
  Mat alpha_;  // n x K_h, (K + noise I)^-1 Y_normalized
  Vec out_mean_;
  Vec out_scale_;
};

struct RfParams {
  int n_trees = 50;
  int min_leaf = 2;
  int max_depth = 24;
  int mtry = 0;           // features per split; 0 = all
  bool bootstrap = true;  // resample-with-replacement per tree
  bool include_time = false;
  std::uint64_t seed = 0;
};

/// Random-forest regressor over the encoded coordinates (plus the time index
/// in dynamic mode): CART variance-reduction splits summed across outputs,
/// leaf sample-mean vectors, ensemble mean / unbiased across-tree variance.
class RfModel {
 public:
  struct Prediction {
    Vec mean;
    Vec variance;
  };

  static RfModel fit(const TrainingSet& data, const RfParams& params, Embedding emb);

  Prediction predict(const EncodedPoint& pt, double time_idx) const;
  Prediction predict_embedded(const Vec& x, double t) const;

  /// Per-tree predictions at one input, in tree order.
  std::vector<Vec> member_predictions(const EncodedPoint& pt, double time_idx) const;

  PreparedPosterior prepare(const EncodedPoint& pt, double time_idx, bool clip_nonneg) const;

  /// Ensemble moments of given member outputs: mean and the unbiased
  /// across-member variance (divisor M - 1).
  static Prediction aggregate_members(const std::vector<Vec>& members);

  int n_trees() const { return static_cast<int>(trees_.size()); }

  /// Human-readable structure dump for debugging.
  std::string dump() const;

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    Vec leaf_mean;
    int count = 0;
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  Vec tree_predict(const Tree& tree, const Vec& features) const;

  std::vector<Tree> trees_;
  Embedding emb_ = Embedding::kOrdinal;
  bool include_time_ = false;
};

}  // namespace fasmobo
