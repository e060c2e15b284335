#include "fasmobo/surrogate.hpp"

#include <algorithm>
#include <sstream>

namespace fasmobo {

int embedded_dim(const std::vector<Bounds>& bounds, Embedding emb) {
  if (emb == Embedding::kOrdinal) return static_cast<int>(bounds.size());
  int d = 0;
  for (const auto& b : bounds) d += b.range() + 1;
  return d;
}

Vec embed_coords(const std::vector<int>& coords, const std::vector<Bounds>& bounds,
                 Embedding emb) {
  if (coords.size() != bounds.size()) throw FasError("embed-dimension");
  if (emb == Embedding::kOrdinal) {
    Vec x(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) x[static_cast<Eigen::Index>(i)] = coords[i];
    return x;
  }
  Vec x = Vec::Zero(embedded_dim(bounds, emb));
  Eigen::Index off = 0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    x[off + (coords[i] - bounds[i].lo)] = 1.0;
    off += bounds[i].range() + 1;
  }
  return x;
}

void TrainingSet::add(const EncodedPoint& pt, double time_idx, const Vec& target) {
  if (!targets_.empty() && target.size() != targets_[0].size())
    throw FasError("training-set-dimension");
  inputs_.push_back(pt);
  times_.push_back(time_idx);
  targets_.push_back(target);
  if (capacity_ > 0 && targets_.size() > capacity_) {
    inputs_.erase(inputs_.begin());
    times_.erase(times_.begin());
    targets_.erase(targets_.begin());
  }
}

Mat TrainingSet::embedded_inputs(Embedding emb) const {
  if (inputs_.empty()) return Mat();
  const int d = embedded_dim(inputs_[0].bounds, emb);
  Mat x(static_cast<Eigen::Index>(inputs_.size()), d);
  for (std::size_t i = 0; i < inputs_.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = embed_point(inputs_[i], emb).transpose();
  return x;
}

Vec TrainingSet::times() const {
  Vec t(static_cast<Eigen::Index>(times_.size()));
  for (std::size_t i = 0; i < times_.size(); ++i) t[static_cast<Eigen::Index>(i)] = times_[i];
  return t;
}

Mat TrainingSet::target_matrix() const {
  if (targets_.empty()) return Mat();
  Mat y(static_cast<Eigen::Index>(targets_.size()), targets_[0].size());
  for (std::size_t i = 0; i < targets_.size(); ++i)
    y.row(static_cast<Eigen::Index>(i)) = targets_[i].transpose();
  return y;
}

double kernel_eval(const KernelSpec& spec, const Vec& x, double t, const Vec& x2, double t2) {
  if (x.size() != x2.size() || x.size() != spec.lengthscales.size())
    throw FasError("kernel-dimension");
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = (x[i] - x2[i]) / spec.lengthscales[i];
    r2 += d * d;
  }
  double k = 0.0;
  if (spec.family == KernelFamily::kRbf) {
    k = spec.signal_var * std::exp(-0.5 * r2);
  } else {
    const double r = std::sqrt(r2);
    const double s5r = std::sqrt(5.0) * r;
    k = spec.signal_var * (1.0 + s5r + 5.0 * r2 / 3.0) * std::exp(-s5r);
  }
  if (spec.time_scale) k *= std::exp(-std::abs(t - t2) / *spec.time_scale);
  return k;
}

KernelSpec default_kernel(const std::vector<Bounds>& bounds, Embedding emb,
                          std::optional<double> time_scale) {
  KernelSpec spec;
  const int d = embedded_dim(bounds, emb);
  spec.lengthscales.resize(d);
  if (emb == Embedding::kOrdinal) {
    for (int i = 0; i < d; ++i)
      spec.lengthscales[i] = std::max(0.5, bounds[static_cast<std::size_t>(i)].range() / 2.0);
  } else {
    spec.lengthscales.setConstant(0.5);
  }
  spec.signal_var = 1.0;
  spec.noise_var = 1e-6;
  spec.time_scale = time_scale;
  return spec;
}

GpModel GpModel::fit(const TrainingSet& data, const KernelSpec& spec, Embedding emb,
                     const GpOptions& opts) {
  if (data.empty()) throw FasError("gp-empty-training-set");
  GpModel m;
  m.spec_ = spec;
  m.emb_ = emb;
  m.x_ = data.embedded_inputs(emb);
  m.t_ = data.times();
  Mat y = data.target_matrix();
  const Eigen::Index n = m.x_.rows();
  const Eigen::Index k_out = y.cols();

  m.out_mean_ = Vec::Zero(k_out);
  m.out_scale_ = Vec::Ones(k_out);
  if (opts.standardize) {
    for (Eigen::Index o = 0; o < k_out; ++o) {
      m.out_mean_[o] = y.col(o).mean();
      const double var = (y.col(o).array() - m.out_mean_[o]).square().sum() /
                         std::max<Eigen::Index>(1, n - 1);
      m.out_scale_[o] = var > 0.0 ? std::sqrt(var) : 1.0;
      y.col(o) = (y.col(o).array() - m.out_mean_[o]) / m.out_scale_[o];
    }
  }

  Mat gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v =
          kernel_eval(spec, m.x_.row(i).transpose(), m.t_[i], m.x_.row(j).transpose(), m.t_[j]);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  gram.diagonal().array() += spec.noise_var;

  double jitter = 0.0;
  const double jitter_cap = 1e-4 * std::max(spec.signal_var, 1e-30);
  while (true) {
    Eigen::LLT<Mat> llt(gram);
    if (llt.info() == Eigen::Success) {
      m.l_ = llt.matrixL();
      break;
    }
    jitter = jitter == 0.0 ? 1e-12 * std::max(spec.signal_var, 1e-30) : jitter * 10.0;
    if (jitter > jitter_cap) throw FasError("kernel-ill-conditioned");
    gram.diagonal().array() += jitter;
  }

  // alpha = (K + sigma_n^2 I)^-1 Y via two triangular solves
  m.alpha_ = m.l_.triangularView<Eigen::Lower>().solve(y);
  m.l_.triangularView<Eigen::Lower>().transpose().solveInPlace(m.alpha_);
  return m;
}

GpModel::Prediction GpModel::predict_embedded(const Vec& x, double t) const {
  const Eigen::Index n = x_.rows();
  Vec k(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k[i] = kernel_eval(spec_, x_.row(i).transpose(), t_[i], x, t);
  const Vec mean_norm = alpha_.transpose() * k;
  const Vec v = l_.triangularView<Eigen::Lower>().solve(k);
  const double var_norm =
      std::max(0.0, kernel_eval(spec_, x, t, x, t) - v.squaredNorm());

  Prediction p;
  p.mean = out_mean_ + out_scale_.cwiseProduct(mean_norm);
  p.variance = out_scale_.cwiseProduct(out_scale_) * var_norm;
  return p;
}

GpModel::Prediction GpModel::predict(const EncodedPoint& pt, double time_idx) const {
  return predict_embedded(embed_point(pt, emb_), time_idx);
}

PreparedPosterior GpModel::prepare(const EncodedPoint& pt, double time_idx,
                                   bool clip_nonneg) const {
  const Prediction p = predict(pt, time_idx);
  PreparedPosterior post;
  post.mean = p.mean;
  post.stddev = p.variance.cwiseSqrt();
  post.clip_nonneg = clip_nonneg;
  return post;
}

namespace {

struct SplitScratch {
  std::vector<int> order;  // sample indices sorted by the active feature
};

// Greedy CART split: maximize total SSE reduction summed across outputs,
// ties resolved toward the lowest feature index then lowest threshold.
struct BestSplit {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

}  // namespace

RfModel RfModel::fit(const TrainingSet& data, const RfParams& params, Embedding emb) {
  if (data.size() < 2) throw FasError("rf-too-few-samples");
  if (params.n_trees < 2) throw FasError("rf-too-few-trees");
  RfModel m;
  m.emb_ = emb;
  m.include_time_ = params.include_time;

  const Mat x_space = data.embedded_inputs(emb);
  const Vec times = data.times();
  const Mat y = data.target_matrix();
  const int n = static_cast<int>(x_space.rows());
  const int d_space = static_cast<int>(x_space.cols());
  const int d = d_space + (params.include_time ? 1 : 0);
  const int k_out = static_cast<int>(y.cols());

  Mat x(n, d);
  x.leftCols(d_space) = x_space;
  if (params.include_time) x.col(d_space) = times;

  m.trees_.resize(static_cast<std::size_t>(params.n_trees));
  for (int b = 0; b < params.n_trees; ++b) {
    Rng rng(params.seed ^ static_cast<std::uint64_t>(b));
    std::vector<int> sample;
    sample.reserve(static_cast<std::size_t>(n));
    if (params.bootstrap) {
      for (int i = 0; i < n; ++i)
        sample.push_back(static_cast<int>(rng.uniform_int(0, n - 1)));
    } else {
      for (int i = 0; i < n; ++i) sample.push_back(i);
    }

    Tree& tree = m.trees_[static_cast<std::size_t>(b)];

    // recursive growth over index ranges of `sample`
    struct Frame {
      int begin, end, depth, node;
    };
    const auto make_leaf = [&](int begin, int end) {
      Node node;
      node.leaf_mean = Vec::Zero(k_out);
      for (int i = begin; i < end; ++i)
        node.leaf_mean += y.row(sample[static_cast<std::size_t>(i)]).transpose();
      node.count = end - begin;
      node.leaf_mean /= node.count;
      return node;
    };

    std::vector<Frame> stack;
    tree.nodes.push_back(Node{});
    stack.push_back({0, n, 0, 0});
    while (!stack.empty()) {
      const Frame fr = stack.back();
      stack.pop_back();
      const int count = fr.end - fr.begin;

      bool force_leaf = fr.depth >= params.max_depth || count < 2 * params.min_leaf;
      if (!force_leaf) {
        bool all_same = true;
        for (int i = fr.begin + 1; i < fr.end && all_same; ++i)
          all_same = (y.row(sample[static_cast<std::size_t>(i)]).array() ==
                      y.row(sample[static_cast<std::size_t>(fr.begin)]).array())
                         .all();
        force_leaf = all_same;
      }

      BestSplit best;
      if (!force_leaf) {
        std::vector<int> features;
        if (params.mtry > 0 && params.mtry < d) {
          features = rng.sample_distinct(d, params.mtry);
          std::sort(features.begin(), features.end());
        } else {
          features.resize(static_cast<std::size_t>(d));
          std::iota(features.begin(), features.end(), 0);
        }

        std::vector<int> idx(sample.begin() + fr.begin, sample.begin() + fr.end);
        // parent sum of squares is constant across features; gains compare by
        // left+right SSE, so track the minimum child SSE instead
        Vec total = Vec::Zero(k_out), total2 = Vec::Zero(k_out);
        for (int i : idx) {
          total += y.row(i).transpose();
          total2 += y.row(i).transpose().cwiseProduct(y.row(i).transpose());
        }
        const double parent_sse =
            (total2 - total.cwiseProduct(total) / count).sum();

        for (int f : features) {
          std::sort(idx.begin(), idx.end(), [&](int a, int c) {
            if (x(a, f) != x(c, f)) return x(a, f) < x(c, f);
            return a < c;
          });
          Vec left = Vec::Zero(k_out), left2 = Vec::Zero(k_out);
          for (int i = 0; i + 1 < count; ++i) {
            const int row = idx[static_cast<std::size_t>(i)];
            left += y.row(row).transpose();
            left2 += y.row(row).transpose().cwiseProduct(y.row(row).transpose());
            const double xi = x(row, f);
            const double xj = x(idx[static_cast<std::size_t>(i + 1)], f);
            if (xi == xj) continue;
            const int nl = i + 1;
            const int nr = count - nl;
            if (nl < params.min_leaf || nr < params.min_leaf) continue;
            const Vec right = total - left;
            const Vec right2 = total2 - left2;
            const double sse = (left2 - left.cwiseProduct(left) / nl).sum() +
                               (right2 - right.cwiseProduct(right) / nr).sum();
            const double gain = parent_sse - sse;
            if (gain > best.gain + 1e-12) {
              best.gain = gain;
              best.feature = f;
              best.threshold = 0.5 * (xi + xj);
            }
          }
        }
      }

      if (best.feature < 0) {
        tree.nodes[static_cast<std::size_t>(fr.node)] = make_leaf(fr.begin, fr.end);
        continue;
      }

      const auto mid_it = std::partition(
          sample.begin() + fr.begin, sample.begin() + fr.end,
          [&](int i) { return x(i, best.feature) <= best.threshold; });
      const int mid = static_cast<int>(mid_it - sample.begin());

      const int left_node = static_cast<int>(tree.nodes.size());
      const int right_node = left_node + 1;
      tree.nodes.push_back(Node{});
      tree.nodes.push_back(Node{});
      Node& node = tree.nodes[static_cast<std::size_t>(fr.node)];
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.count = count;
      node.left = left_node;
      node.right = right_node;
      stack.push_back({mid, fr.end, fr.depth + 1, right_node});
      stack.push_back({fr.begin, mid, fr.depth + 1, left_node});
    }
  }
  return m;
}

Vec RfModel::tree_predict(const Tree& tree, const Vec& features) const {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const Node& nd = tree.nodes[static_cast<std::size_t>(node)];
    node = features[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].leaf_mean;
}

RfModel::Prediction RfModel::aggregate_members(const std::vector<Vec>& members) {
  if (members.size() < 2) throw FasError("rf-too-few-trees");
  const Eigen::Index k = members[0].size();
  Prediction p;
  p.mean = Vec::Zero(k);
  for (const auto& m : members) p.mean += m;
  p.mean /= static_cast<double>(members.size());
  p.variance = Vec::Zero(k);
  for (const auto& m : members) {
    const Vec d = m - p.mean;
    p.variance += d.cwiseProduct(d);
  }
  p.variance /= static_cast<double>(members.size() - 1);
  return p;
}

std::vector<Vec> RfModel::member_predictions(const EncodedPoint& pt, double time_idx) const {
  Vec features = embed_point(pt, emb_);
  if (include_time_) {
    Vec with_time(features.size() + 1);
    with_time << features, time_idx;
    features = with_time;
  }
  std::vector<Vec> preds;
  preds.reserve(trees_.size());
  for (const auto& tree : trees_) preds.push_back(tree_predict(tree, features));
  return preds;
}

RfModel::Prediction RfModel::predict(const EncodedPoint& pt, double time_idx) const {
  return aggregate_members(member_predictions(pt, time_idx));
}

RfModel::Prediction RfModel::predict_embedded(const Vec& x, double t) const {
  Vec features = x;
  if (include_time_) {
    Vec with_time(features.size() + 1);
    with_time << features, t;
    features = with_time;
  }
  std::vector<Vec> preds;
  preds.reserve(trees_.size());
  for (const auto& tree : trees_) preds.push_back(tree_predict(tree, features));
  return aggregate_members(preds);
}

PreparedPosterior RfModel::prepare(const EncodedPoint& pt, double time_idx,
                                   bool clip_nonneg) const {
  PreparedPosterior post;
  post.member_preds = member_predictions(pt, time_idx);
  post.clip_nonneg = clip_nonneg;
  return post;
}

std::string RfModel::dump() const {
  std::ostringstream os;
  for (std::size_t b = 0; b < trees_.size(); ++b) {
    os << "tree " << b << "\n";
    for (std::size_t i = 0; i < trees_[b].nodes.size(); ++i) {
      const Node& nd = trees_[b].nodes[i];
      if (nd.feature < 0)
        os << "  node " << i << ": leaf n=" << nd.count << " mean=["
           << nd.leaf_mean.transpose() << "]\n";
      else
        os << "  node " << i << ": x[" << nd.feature << "] <= " << nd.threshold << " -> ("
           << nd.left << ", " << nd.right << ")\n";
    }
  }
  return os.str();
}

}  // namespace fasmobo
