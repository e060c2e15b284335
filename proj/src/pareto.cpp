#include "fasmobo/pareto.hpp"

#include <algorithm>

namespace fasmobo {

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  return a.rc >= b.rc && a.rs >= b.rs && (a.rc > b.rc || a.rs > b.rs);
}

void ParetoArchive::rebuild_stairs() {
  stairs_.clear();
  std::vector<std::pair<double, double>> pts;
  for (const auto& e : entries_) {
    const double x = e.f.rc - ref_.rc;
    const double y = e.f.rs - ref_.rs;
    if (x > 0.0 && y > 0.0) pts.push_back({x, y});
  }
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second > b.second;
  });
  double ymax = 0.0;
  for (const auto& p : pts) {
    if (p.second > ymax) {
      stairs_.push_back(p);
      ymax = p.second;
    }
  }
}

double ParetoArchive::hypervolume() const {
  // exact sweep: descending x with the running maximum of y
  double hv = 0.0;
  double prev_x = stairs_.empty() ? 0.0 : stairs_.front().first;
  double env = 0.0;
  for (const auto& [x, y] : stairs_) {
    if (x < prev_x) {
      hv += (prev_x - x) * env;
      prev_x = x;
    }
    env = std::max(env, y);
  }
  hv += prev_x * env;  // last block down to the reference
  return hv;
}

double ParetoArchive::hvi(const ObjectiveVector& f) const {
  const double fx = f.rc - ref_.rc;
  const double fy = f.rs - ref_.rs;
  if (fx <= 0.0 || fy <= 0.0) return 0.0;
  double area = 0.0;
  // strip right of all stairs, env = 0
  const double x_first = stairs_.empty() ? 0.0 : stairs_.front().first;
  if (fx > x_first) area += (fx - x_first) * fy;
  // staircase segments: env over (x_{k+1}, x_k] is y_k, ascending in k
  const std::size_t n = stairs_.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double env = stairs_[k].second;
    if (fy <= env) break;
    const double left = (k + 1 < n) ? stairs_[k + 1].first : 0.0;
    const double right = std::min(stairs_[k].first, fx);
    if (right > left) area += (right - left) * (fy - env);
  }
  return area;
}

InsertResult ParetoArchive::insert(const ObjectiveVector& f, std::int64_t config_id,
                                   std::int64_t eval_idx) {
  if (!std::isfinite(f.rc) || !std::isfinite(f.rs)) throw FasError("archive-nonfinite");
  if (f.rc <= ref_.rc && f.rs <= ref_.rs) return {false, 0.0};
  for (const auto& e : entries_)
    if (dominates(e.f, f)) return {false, 0.0};
  const double gain = hvi(f);
  std::erase_if(entries_, [&f](const ArchiveEntry& e) { return dominates(f, e.f); });
  entries_.push_back({f, config_id, eval_idx});
  rebuild_stairs();
  return {true, gain};
}

double ParetoArchive::exclusive_contribution(std::size_t i) const {
  ParetoArchive rest(ref_);
  for (std::size_t j = 0; j < entries_.size(); ++j) {
    if (j == i) continue;
    rest.entries_.push_back(entries_[j]);
  }
  rest.rebuild_stairs();
  return hypervolume() - rest.hypervolume();
}

std::size_t restart_center_index(const ParetoArchive& archive, Rng& rng) {
  if (archive.empty()) throw FasError("restart-empty-archive");
  std::vector<std::size_t> best;
  double best_contrib = -1.0;
  for (std::size_t i = 0; i < archive.size(); ++i) {
    const double c = archive.exclusive_contribution(i);
    if (c > best_contrib) {
      best_contrib = c;
      best = {i};
    } else if (c == best_contrib) {
      best.push_back(i);
    }
  }
  std::int64_t newest = -1;
  std::vector<std::size_t> recent;
  for (std::size_t i : best) {
    const std::int64_t idx = archive.entries()[i].eval_idx;
    if (idx > newest) {
      newest = idx;
      recent = {i};
    } else if (idx == newest) {
      recent.push_back(i);
    }
  }
  if (recent.size() == 1) return recent.front();
  return recent[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(recent.size()) - 1))];
}

TrustRegion tr_restart(const ParetoArchive& archive,
                       const std::vector<Configuration>& config_by_eval, double l_max, Rng& rng) {
  const std::size_t i = restart_center_index(archive, rng);
  const std::int64_t eval_idx = archive.entries()[i].eval_idx;
  if (eval_idx < 0 || eval_idx >= static_cast<std::int64_t>(config_by_eval.size()))
    throw FasError("restart-missing-config", std::to_string(eval_idx));
  TrustRegion tr;
  tr.center = config_by_eval[static_cast<std::size_t>(eval_idx)];
  tr.side_len = l_max;
  tr.success_count = 0;
  tr.failure_count = 0;
  return tr;
}

SampleBatch SampleBatch::draw(int n_mc, int latent_dim, int n_trees, Rng& rng) {
  SampleBatch b;
  b.eps.resize(n_mc, latent_dim);
  for (int j = 0; j < n_mc; ++j)
    for (int d = 0; d < latent_dim; ++d) b.eps(j, d) = rng.normal();
  b.tree_idx.resize(static_cast<std::size_t>(n_mc), 0);
  if (n_trees > 0)
    for (int j = 0; j < n_mc; ++j)
      b.tree_idx[static_cast<std::size_t>(j)] = static_cast<int>(rng.uniform_int(0, n_trees - 1));
  return b;
}

Vec PreparedPosterior::draw(int j, const SampleBatch& batch) const {
  Vec v;
  if (!member_preds.empty()) {
    const int idx =
        batch.tree_idx[static_cast<std::size_t>(j)] % static_cast<int>(member_preds.size());
    v = member_preds[static_cast<std::size_t>(idx)];
  } else {
    v = mean + stddev.cwiseProduct(batch.eps.row(j).transpose());
  }
  if (clip_nonneg) v = v.cwiseMax(0.0);
  return v;
}

double ehvi_mc(const PreparedPosterior& posterior, const SampleBatch& batch,
               const ParetoArchive& archive, const ObjectiveMap& g) {
  const int n = batch.n_mc();
  if (n < 1) throw FasError("ehvi-empty-batch");
  double acc = 0.0;
  for (int j = 0; j < n; ++j) acc += archive.hvi(g(posterior.draw(j, batch)));
  return acc / n;
}

double constrained_acq(const Configuration& cfg, const SpaceSpec& space, double raw_ehvi) {
  return validate(cfg, space).feasible ? raw_ehvi : 0.0;
}

}  // namespace fasmobo
