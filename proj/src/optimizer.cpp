#include "fasmobo/optimizer.hpp"

#include <algorithm>

namespace fasmobo {

void check_params(const OptimizerParams& params) {
  if (params.init_samples < 1) throw FasError("invalid-params", "init_samples must be >= 1");
  if (params.init_samples >= params.budget)
    throw FasError("invalid-params", "init_samples must be below the budget");
  if (params.n_candidates < 1) throw FasError("invalid-params", "n_candidates must be >= 1");
  if (params.n_mc < 1) throw FasError("invalid-params", "n_mc must be >= 1");
  check_tr_params(params.tr);
}

ObjectiveMap grey_objective_map(int n_users, int n_rx, double noise_comm) {
  return [n_users, n_rx, noise_comm](const Vec& h) {
    return known_map_g(h, n_users, n_rx, noise_comm);
  };
}

ObjectiveMap black_objective_map() {
  return [](const Vec& v) { return ObjectiveVector{v[0], v[1]}; };
}

FittedSurrogate fit_surrogate(const TrainingSet& data, const SpaceSpec& space,
                              const OptimizerParams& params, std::int64_t round, bool dynamic) {
  FittedSurrogate model;
  if (params.surrogate == SurrogateKind::kRf) {
    RfParams rf = params.rf;
    rf.seed = substream_seed(params.seed, "rf-fit", static_cast<std::uint64_t>(round));
    rf.include_time = dynamic;
    model.rf = RfModel::fit(data, rf, params.embedding);
  } else {
    KernelSpec spec = default_kernel(
        encoding_bounds(space), params.embedding,
        dynamic ? std::optional<double>(params.gp_time_scale.value_or(10.0)) : std::nullopt);
    GpOptions opts;
    opts.standardize = true;
    model.gp = GpModel::fit(data, spec, params.embedding, opts);
  }
  return model;
}

Configuration select_candidate(const PosteriorFn& posterior, const ParetoArchive& archive,
                               const TrustRegion& tr, const SpaceSpec& space,
                               const OptimizerParams& params, const ObjectiveMap& g,
                               double time_idx, int n_trees_for_batch, Rng& rng) {
  std::vector<Configuration> pool;
  if (params.use_trust_region) {
    pool = sample_in_region(space, tr, params.n_candidates, rng);
  } else {
    pool.reserve(static_cast<std::size_t>(params.n_candidates));
    for (int i = 0; i < params.n_candidates; ++i) pool.push_back(sample_uniform(space, rng));
  }

  const PreparedPosterior probe = posterior(encode(pool[0], space), time_idx);
  const int latent_dim = probe.member_preds.empty() ? static_cast<int>(probe.mean.size())
                                                    : static_cast<int>(probe.member_preds[0].size());
  const SampleBatch batch = SampleBatch::draw(params.n_mc, latent_dim, n_trees_for_batch, rng);

  double best = -1.0;
  std::vector<std::size_t> argmax;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const PreparedPosterior post = posterior(encode(pool[i], space), time_idx);
    const double score = constrained_acq(pool[i], space, ehvi_mc(post, batch, archive, g));
    if (score > best) {
      best = score;
      argmax = {i};
    } else if (score == best) {
      argmax.push_back(i);
    }
  }
  if (best <= 0.0) {
    // nothing promising anywhere in the pool: explore uniformly within it
    return pool[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
  }
  if (argmax.size() == 1) return pool[argmax.front()];
  return pool[argmax[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(argmax.size()) - 1))]];
}

namespace {

Vec training_target(const Evaluation& ev, ModelMode mode) {
  if (mode == ModelMode::kGrey) return ev.h_observed;
  Vec f(2);
  f << ev.objective.rc, ev.objective.rs;
  return f;
}

struct TrustRegionStep {
  TrustRegion tr;
  bool restart = false;
};

// Counter update plus the restart trigger: a contraction that would cross
// below l_min restarts instead of clipping there forever.
TrustRegionStep step_trust_region(const TrustRegion& tr, bool hvi_positive,
                                  const TrustRegionParams& p) {
  const bool contraction_due = !hvi_positive && tr.failure_count + 1 >= p.failure_tol;
  if (contraction_due && tr.side_len * p.gamma_dec < p.l_min) return {tr, true};
  return {tr_update(tr, hvi_positive, p), false};
}

TrustRegion restart_or_recenter(const ParetoArchive& archive,
                                const std::vector<Configuration>& configs, double l_max,
                                const Configuration& fallback_center, Rng& rng) {
  if (!archive.empty()) return tr_restart(archive, configs, l_max, rng);
  TrustRegion tr;
  tr.center = fallback_center;
  tr.side_len = l_max;
  return tr;
}

}  // namespace

RunTrace run_static(const SceneEvaluator& scene_eval, const OptimizerParams& params) {
  check_params(params);
  const SpaceSpec& space = scene_eval.space();
  const Scene& scene = scene_eval.scene();

  Rng init_rng(substream_seed(params.seed, "init"));
  Rng acq_rng(substream_seed(params.seed, "acquisition"));
  BudgetedEvaluator evaluator(&scene_eval, params.obs_noise_std,
                              Rng(substream_seed(params.seed, "obs-noise")));

  const ObjectiveMap g = params.mode == ModelMode::kGrey
                             ? grey_objective_map(space.n_users, space.n_rx, scene.noise_comm)
                             : black_objective_map();

  RunTrace trace;
  trace.archive = ParetoArchive(params.ref_point);
  TrainingSet data;
  std::vector<Configuration> configs;

  const auto record = [&](const Configuration& cfg, const Evaluation& ev, double hvi,
                          double tr_side) {
    trace.rows.push_back({static_cast<std::int64_t>(trace.rows.size()), 0, cfg, ev.objective,
                          hvi, trace.archive.hypervolume(), tr_side, trace.restarts});
  };

  for (int i = 0; i < params.init_samples; ++i) {
    const Configuration cfg = sample_uniform(space, init_rng);
    const Evaluation ev = evaluator.evaluate(cfg);
    data.add(encode(cfg, space), 0.0, training_target(ev, params.mode));
    configs.push_back(cfg);
    const InsertResult ins = trace.archive.insert(ev.objective, i, i);
    record(cfg, ev, ins.hvi, params.tr.l_max);
  }

  TrustRegion tr =
      restart_or_recenter(trace.archive, configs, params.tr.l_max, configs.back(), acq_rng);

  while (evaluator.used() < params.budget) {
    const FittedSurrogate model =
        fit_surrogate(data, space, params, evaluator.used(), /*dynamic=*/false);
    const PosteriorFn posterior = [&model](const EncodedPoint& pt, double t) {
      return model.prepare(pt, t, /*clip_nonneg=*/true);
    };
    const Configuration cand = select_candidate(posterior, trace.archive, tr, space, params, g,
                                                0.0, model.n_trees(), acq_rng);
    const Evaluation ev = evaluator.evaluate(cand);
    const std::int64_t idx = evaluator.used() - 1;
    data.add(encode(cand, space), 0.0, training_target(ev, params.mode));
    configs.push_back(cand);
    const InsertResult ins = trace.archive.insert(ev.objective, idx, idx);

    if (params.use_trust_region) {
      const TrustRegionStep step = step_trust_region(tr, ins.hvi > 0.0, params.tr);
      if (step.restart) {
        tr = restart_or_recenter(trace.archive, configs, params.tr.l_max, cand, acq_rng);
        trace.restarts += 1;
      } else {
        tr = step.tr;
      }
    }
    record(cand, ev, ins.hvi, tr.side_len);
  }
  return trace;
}

DynamicRunResult run_dynamic(const std::vector<Scene>& slot_scenes, const SpaceSpec& space,
                             const OptimizerParams& params, int per_slot_budget,
                             std::size_t window) {
  check_tr_params(params.tr);
  if (slot_scenes.empty()) throw FasError("invalid-params", "no slot scenes");
  if (per_slot_budget < 1) throw FasError("invalid-params", "per-slot budget must be >= 1");

  Rng init_rng(substream_seed(params.seed, "init"));
  Rng acq_rng(substream_seed(params.seed, "acquisition"));
  BudgetedEvaluator evaluator(nullptr, params.obs_noise_std,
                              Rng(substream_seed(params.seed, "obs-noise")));

  DynamicRunResult result;
  TrainingSet data(window);
  std::vector<Configuration> configs;
  ParetoArchive prev_archive(params.ref_point);
  std::int64_t fit_round = 0;

  for (std::size_t t = 0; t < slot_scenes.size(); ++t) {
    const SceneEvaluator scene_eval(slot_scenes[t], space);
    evaluator.set_scene(&scene_eval);
    const ObjectiveMap g =
        params.mode == ModelMode::kGrey
            ? grey_objective_map(space.n_users, space.n_rx, slot_scenes[t].noise_comm)
            : black_objective_map();

    RunTrace slot_trace;
    slot_trace.archive = ParetoArchive(params.ref_point);
    const double time_idx = static_cast<double>(t);

    const auto record = [&](const Configuration& cfg, const Evaluation& ev, double hvi,
                            double tr_side) {
      slot_trace.rows.push_back({evaluator.used() - 1, static_cast<std::int64_t>(t), cfg,
                                 ev.objective, hvi, slot_trace.archive.hypervolume(), tr_side,
                                 result.total_restarts});
    };

    int remaining = per_slot_budget;
    TrustRegion tr;
    if (t == 0) {
      const int n_init = std::min(params.init_samples, per_slot_budget);
      for (int i = 0; i < n_init; ++i) {
        const Configuration cfg = sample_uniform(space, init_rng);
        const Evaluation ev = evaluator.evaluate(cfg);
        const std::int64_t idx = evaluator.used() - 1;
        data.add(encode(cfg, space), time_idx, training_target(ev, params.mode));
        configs.push_back(cfg);
        const InsertResult ins = slot_trace.archive.insert(ev.objective, idx, idx);
        record(cfg, ev, ins.hvi, params.tr.l_max);
      }
      remaining -= n_init;
      tr = restart_or_recenter(slot_trace.archive, configs, params.tr.l_max, configs.back(),
                               acq_rng);
    } else {
      // inter-slot reset: center on the previous Pareto set, full side length
      tr = restart_or_recenter(prev_archive, configs, params.tr.l_max, configs.back(), acq_rng);
    }

    for (int m = 0; m < remaining; ++m) {
      const FittedSurrogate model =
          fit_surrogate(data, space, params, fit_round++, /*dynamic=*/true);
      const PosteriorFn posterior = [&model](const EncodedPoint& pt, double tt) {
        return model.prepare(pt, tt, /*clip_nonneg=*/true);
      };
      const Configuration cand = select_candidate(posterior, slot_trace.archive, tr, space,
                                                  params, g, time_idx, model.n_trees(), acq_rng);
      const Evaluation ev = evaluator.evaluate(cand);
      const std::int64_t idx = evaluator.used() - 1;
      data.add(encode(cand, space), time_idx, training_target(ev, params.mode));
      configs.push_back(cand);
      const InsertResult ins = slot_trace.archive.insert(ev.objective, idx, idx);

      if (params.use_trust_region) {
        const TrustRegionStep step = step_trust_region(tr, ins.hvi > 0.0, params.tr);
        if (step.restart) {
          const ParetoArchive& source =
              slot_trace.archive.empty() ? prev_archive : slot_trace.archive;
          tr = restart_or_recenter(source, configs, params.tr.l_max, cand, acq_rng);
          result.total_restarts += 1;
          slot_trace.restarts += 1;
        } else {
          tr = step.tr;
        }
      }
      record(cand, ev, ins.hvi, tr.side_len);
    }

    if (!slot_trace.archive.empty()) prev_archive = slot_trace.archive;
    result.slots.push_back(std::move(slot_trace));
  }
  result.final_dataset_size = data.size();
  return result;
}

}  // namespace fasmobo
