#include "fasmobo/isac_physics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace fasmobo {

namespace {

Mat3 rotation_from_angles(double theta, double phi) {
  Mat3 rz, ry;
  rz << std::cos(phi), -std::sin(phi), 0.0,
        std::sin(phi),  std::cos(phi), 0.0,
        0.0,            0.0,           1.0;
  ry << std::cos(theta), 0.0, std::sin(theta),
        0.0,             1.0, 0.0,
       -std::sin(theta), 0.0, std::cos(theta);
  return rz * ry;
}

constexpr Complex kJ{0.0, 1.0};

}  // namespace

ArrayGeometry build_geometry(const SpaceSpec& space, int orientation_idx, double wavelength,
                             const Vec3& bs_position) {
  const auto [theta, phi] = orientation_angle(space, orientation_idx);
  ArrayGeometry geom;
  geom.rotation = rotation_from_angles(theta, phi);
  geom.bs_position = bs_position;
  geom.wavelength = wavelength;
  geom.spacing = space.port_spacing * wavelength;
  geom.grid_rows = space.grid_rows;
  geom.grid_cols = space.grid_cols;
  geom.rel_positions.reserve(static_cast<std::size_t>(space.n_ports()));
  const double row_mid = (space.grid_rows - 1) / 2.0;
  const double col_mid = (space.grid_cols - 1) / 2.0;
  for (int r = 0; r < space.grid_rows; ++r) {
    for (int c = 0; c < space.grid_cols; ++c) {
      const Vec3 local{(c - col_mid) * geom.spacing, (r - row_mid) * geom.spacing, 0.0};
      geom.rel_positions.push_back(geom.rotation * local);
    }
  }
  return geom;
}

void check_scene(const Scene& scene) {
  const auto fail = [](const std::string& what) { throw FasError("invalid-scene", what); };
  for (const auto& u : scene.users)
    if (u.paths.empty()) fail("every user needs at least one path");
  if (scene.noise_comm <= 0.0 || scene.noise_sense <= 0.0) fail("noise powers must be > 0");
  if (scene.si_atten < 0.0) fail("si_atten must be >= 0");
  if (scene.tx_power <= 0.0) fail("tx_power must be > 0");
  if (scene.wavelength <= 0.0) fail("wavelength must be > 0");
}

CVec steering_vector(const std::vector<Vec3>& positions, double elevation, double azimuth,
                     double wavelength) {
  const Vec3 u = unit_direction(elevation, azimuth);
  const double k = 2.0 * kPi / wavelength;
  CVec v(static_cast<Eigen::Index>(positions.size()));
  for (std::size_t m = 0; m < positions.size(); ++m)
    v[static_cast<Eigen::Index>(m)] = std::exp(-kJ * (k * positions[m].dot(u)));
  return v;
}

std::vector<Vec3> gather_positions(const ArrayGeometry& geom, const std::vector<GridCell>& cells) {
  std::vector<Vec3> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(geom.relative(c));
  return out;
}

CVec comm_channel(const ArrayGeometry& geom, const std::vector<GridCell>& tx_ports,
                  const std::vector<PathComponent>& paths) {
  const std::vector<Vec3> pos = gather_positions(geom, tx_ports);
  CVec h = CVec::Zero(static_cast<Eigen::Index>(pos.size()));
  for (const auto& p : paths)
    h += p.gain * steering_vector(pos, p.elevation, p.azimuth, geom.wavelength);
  return h;
}

CMat target_channel(const ArrayGeometry& geom, const std::vector<GridCell>& rx_ports,
                    const std::vector<GridCell>& tx_ports,
                    const std::vector<TargetRecord>& targets) {
  const std::vector<Vec3> rx = gather_positions(geom, rx_ports);
  const std::vector<Vec3> tx = gather_positions(geom, tx_ports);
  CMat g = CMat::Zero(static_cast<Eigen::Index>(rx.size()), static_cast<Eigen::Index>(tx.size()));
  for (const auto& t : targets) {
    const CVec b = steering_vector(rx, t.elevation, t.azimuth, geom.wavelength);
    const CVec a = steering_vector(tx, t.elevation, t.azimuth, geom.wavelength);
    g += t.reflection * (b * a.adjoint());
  }
  return g;
}

CMat si_channel(const ArrayGeometry& geom, const std::vector<GridCell>& rx_ports,
                const std::vector<GridCell>& tx_ports, double si_atten) {
  const std::vector<Vec3> rx = gather_positions(geom, rx_ports);
  const std::vector<Vec3> tx = gather_positions(geom, tx_ports);
  CMat g(static_cast<Eigen::Index>(rx.size()), static_cast<Eigen::Index>(tx.size()));
  const double k = 2.0 * kPi / geom.wavelength;
  for (std::size_t n = 0; n < rx.size(); ++n) {
    for (std::size_t m = 0; m < tx.size(); ++m) {
      const double d = (rx[n] - tx[m]).norm();
      if (d <= 0.0) throw FasError("si-zero-distance");
      g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) =
          (si_atten / d) * std::exp(-kJ * (k * d));
    }
  }
  return g;
}

CMat clutter_channel(const ArrayGeometry& geom, const std::vector<GridCell>& rx_ports,
                     const std::vector<GridCell>& tx_ports,
                     const std::vector<ClutterRecord>& clutter) {
  const std::vector<Vec3> rx = gather_positions(geom, rx_ports);
  const std::vector<Vec3> tx = gather_positions(geom, tx_ports);
  CMat g = CMat::Zero(static_cast<Eigen::Index>(rx.size()), static_cast<Eigen::Index>(tx.size()));
  for (const auto& c : clutter) {
    const CVec b = steering_vector(rx, c.elevation, c.azimuth, geom.wavelength);
    const CVec a = steering_vector(tx, c.elevation, c.azimuth, geom.wavelength);
    g += c.gain * (b * a.adjoint());
  }
  return g;
}

CVec quantize_phases(const CVec& v, int bits) {
  const double step = 2.0 * kPi / static_cast<double>(1 << bits);
  CVec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    const double phase = step * std::round(std::arg(v[i]) / step);
    out[i] = mag * std::exp(kJ * phase);
  }
  return out;
}

CMat build_precoder(const Configuration& cfg, const ArrayGeometry& geom, const SpaceSpec& space,
                    double tx_power) {
  const std::vector<Vec3> tx = gather_positions(geom, cfg.tx_ports);
  const int n_tx = static_cast<int>(tx.size());
  const int k_users = static_cast<int>(cfg.beam_idx.size());
  CMat f(n_tx, k_users);
  const double scale = std::sqrt(tx_power / k_users) / std::sqrt(static_cast<double>(n_tx));
  for (int k = 0; k < k_users; ++k) {
    const int beam = cfg.beam_idx[static_cast<std::size_t>(k)];
    if (beam < 0 || beam >= space.n_beams) throw FasError("beam-out-of-range");
    const double az = 2.0 * kPi * beam / space.n_beams;
    const CVec steer = steering_vector(tx, space.beam_elevation, az, geom.wavelength);
    f.col(k) = scale * quantize_phases(steer, space.phase_bits);
  }
  return f;
}

Vec LatentConstituents::as_vector() const {
  const int k = static_cast<int>(pair_powers.rows());
  Vec v(k * k + sensing_eigs.size());
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) v[i * k + j] = pair_powers(i, j);
  v.tail(sensing_eigs.size()) = sensing_eigs;
  return v;
}

LatentConstituents LatentConstituents::from_vector(const Vec& v, int n_users, int n_rx) {
  if (v.size() != dim(n_users, n_rx)) throw FasError("latent-dimension");
  LatentConstituents h;
  h.pair_powers.resize(n_users, n_users);
  for (int i = 0; i < n_users; ++i)
    for (int j = 0; j < n_users; ++j) h.pair_powers(i, j) = v[i * n_users + j];
  h.sensing_eigs = v.tail(n_rx);
  return h;
}

namespace {

// Shared tail of the latent extraction: pairwise powers from (h_k, F) plus
// whitened sensing eigenvalues from the channel matrices.
LatentConstituents latent_from_channels(const CMat& user_channels /*K x Nt*/, const CMat& f,
                                        const CMat& g_t, const CMat& g_clu, const CMat& g_si,
                                        double noise_sense) {
  const int k_users = static_cast<int>(user_channels.rows());
  const int n_rx = static_cast<int>(g_t.rows());
  LatentConstituents h;
  h.pair_powers.resize(k_users, k_users);
  for (int k = 0; k < k_users; ++k) {
    for (int q = 0; q < k_users; ++q) {
      const Complex inner = user_channels.row(k) * f.col(q);  // h_k^T f_q, no conjugation
      h.pair_powers(k, q) = std::norm(inner);
    }
  }

  const CMat clu_f = g_clu * f;
  const CMat si_f = g_si * f;
  CMat r_i = clu_f * clu_f.adjoint() + si_f * si_f.adjoint();
  r_i += noise_sense * CMat::Identity(n_rx, n_rx);

  const Eigen::LLT<CMat> llt(r_i);
  if (llt.info() != Eigen::Success) throw FasError("covariance-degenerate");
  const CMat target_f = g_t * f;  // G_t F, so G_t R_x G_t^H = (G_t F)(G_t F)^H
  const CMat whitened = llt.matrixL().solve(target_f) / std::sqrt(noise_sense);
  const CMat w = whitened * whitened.adjoint();

  Eigen::SelfAdjointEigenSolver<CMat> eig(w);
  if (eig.info() != Eigen::Success) throw FasError("covariance-degenerate", "eigensolver failed");
  Vec vals = eig.eigenvalues().reverse();
  for (Eigen::Index i = 0; i < vals.size(); ++i) vals[i] = std::max(0.0, vals[i]);
  h.sensing_eigs = vals;
  return h;
}

Evaluation finish_evaluation(LatentConstituents&& h_true, double noise_comm, double obs_noise_std,
                             Rng* rng) {
  Evaluation ev;
  ev.objective = known_map_g(h_true, noise_comm);
  ev.h_true = h_true.as_vector();
  ev.h_observed = ev.h_true;
  if (obs_noise_std > 0.0 && rng != nullptr) {
    for (Eigen::Index i = 0; i < ev.h_observed.size(); ++i)
      ev.h_observed[i] = std::max(0.0, ev.h_observed[i] + obs_noise_std * rng->normal());
  }
  return ev;
}

}  // namespace

LatentConstituents latent_constituents(const Configuration& cfg, const Scene& scene,
                                       const SpaceSpec& space) {
  const Feasibility ok = validate(cfg, space);
  if (!ok) throw FasError("encode-infeasible", ok.violation);
  if (static_cast<int>(scene.users.size()) != space.n_users)
    throw FasError("invalid-scene", "user count does not match space n_users");
  const ArrayGeometry geom =
      build_geometry(space, cfg.orientation_idx, scene.wavelength, scene.bs_position);

  CMat user_channels(static_cast<Eigen::Index>(scene.users.size()), space.n_tx);
  for (std::size_t k = 0; k < scene.users.size(); ++k)
    user_channels.row(static_cast<Eigen::Index>(k)) =
        comm_channel(geom, cfg.tx_ports, scene.users[k].paths).transpose();

  const CMat f = build_precoder(cfg, geom, space, scene.tx_power);
  const CMat g_t = target_channel(geom, cfg.rx_ports, cfg.tx_ports, scene.targets);
  const CMat g_clu = clutter_channel(geom, cfg.rx_ports, cfg.tx_ports, scene.clutter);
  const CMat g_si = si_channel(geom, cfg.rx_ports, cfg.tx_ports, scene.si_atten);
  return latent_from_channels(user_channels, f, g_t, g_clu, g_si, scene.noise_sense);
}

ObjectiveVector known_map_g(const LatentConstituents& h, double noise_comm) {
  const int k_users = static_cast<int>(h.pair_powers.rows());
  ObjectiveVector f;
  for (int k = 0; k < k_users; ++k) {
    double interference = noise_comm;
    for (int q = 0; q < k_users; ++q)
      if (q != k) interference += h.pair_powers(k, q);
    f.rc += log2_1p(h.pair_powers(k, k) / interference);
  }
  for (Eigen::Index i = 0; i < h.sensing_eigs.size(); ++i) f.rs += log2_1p(h.sensing_eigs[i]);
  return f;
}

ObjectiveVector known_map_g(const Vec& h, int n_users, int n_rx, double noise_comm) {
  return known_map_g(LatentConstituents::from_vector(h, n_users, n_rx), noise_comm);
}

Evaluation evaluate(const Configuration& cfg, const Scene& scene, const SpaceSpec& space,
                    double obs_noise_std, Rng& rng) {
  return finish_evaluation(latent_constituents(cfg, scene, space), scene.noise_comm,
                           obs_noise_std, &rng);
}

SceneEvaluator::SceneEvaluator(const Scene& scene, const SpaceSpec& space)
    : scene_(scene), space_(space) {
  check_space(space_);
  check_scene(scene_);
  if (static_cast<int>(scene_.users.size()) != space_.n_users)
    throw FasError("invalid-scene", "user count does not match space n_users");
  const int p = space_.n_ports();
  std::vector<GridCell> all_cells;
  all_cells.reserve(static_cast<std::size_t>(p));
  for (int r = 0; r < space_.grid_rows; ++r)
    for (int c = 0; c < space_.grid_cols; ++c) all_cells.push_back({r, c});

  // SI depends on port distances only, which rotations preserve.
  const ArrayGeometry geom0 = build_geometry(space_, 0, scene_.wavelength, scene_.bs_position);
  si_cell_.resize(p, p);
  const double k = 2.0 * kPi / scene_.wavelength;
  for (int n = 0; n < p; ++n) {
    for (int m = 0; m < p; ++m) {
      if (n == m) {
        si_cell_(n, m) = Complex(0.0, 0.0);  // coincident cells are infeasible anyway
        continue;
      }
      const double d = (geom0.rel_positions[static_cast<std::size_t>(n)] -
                        geom0.rel_positions[static_cast<std::size_t>(m)])
                           .norm();
      si_cell_(n, m) = (scene_.si_atten / d) * std::exp(-kJ * (k * d));
    }
  }

  per_orientation_.resize(static_cast<std::size_t>(space_.n_orientations));
  for (int o = 0; o < space_.n_orientations; ++o) {
    const ArrayGeometry geom = build_geometry(space_, o, scene_.wavelength, scene_.bs_position);
    OrientationCache& cache = per_orientation_[static_cast<std::size_t>(o)];

    cache.user_cell.resize(static_cast<Eigen::Index>(scene_.users.size()), p);
    for (std::size_t u = 0; u < scene_.users.size(); ++u)
      cache.user_cell.row(static_cast<Eigen::Index>(u)) =
          comm_channel(geom, all_cells, scene_.users[u].paths).transpose();

    cache.target_cell.resize(static_cast<Eigen::Index>(scene_.targets.size()), p);
    for (std::size_t t = 0; t < scene_.targets.size(); ++t) {
      const auto& tr = scene_.targets[t];
      cache.target_cell.row(static_cast<Eigen::Index>(t)) =
          steering_vector(geom.rel_positions, tr.elevation, tr.azimuth, scene_.wavelength)
              .transpose();
    }

    cache.clutter_cell.resize(static_cast<Eigen::Index>(scene_.clutter.size()), p);
    for (std::size_t c = 0; c < scene_.clutter.size(); ++c) {
      const auto& cl = scene_.clutter[c];
      cache.clutter_cell.row(static_cast<Eigen::Index>(c)) =
          steering_vector(geom.rel_positions, cl.elevation, cl.azimuth, scene_.wavelength)
              .transpose();
    }

    cache.beam_cell.resize(space_.n_beams, p);
    for (int b = 0; b < space_.n_beams; ++b) {
      const double az = 2.0 * kPi * b / space_.n_beams;
      const CVec steer =
          steering_vector(geom.rel_positions, space_.beam_elevation, az, scene_.wavelength);
      cache.beam_cell.row(b) = quantize_phases(steer, space_.phase_bits).transpose();
    }
  }
}

Evaluation SceneEvaluator::evaluate(const Configuration& cfg) const {
  const Feasibility ok = validate(cfg, space_);
  if (!ok) throw FasError("encode-infeasible", ok.violation);
  const OrientationCache& cache = per_orientation_[static_cast<std::size_t>(cfg.orientation_idx)];
  const int n_tx = space_.n_tx;
  const int n_rx = space_.n_rx;
  const int k_users = static_cast<int>(scene_.users.size());

  std::vector<int> tx_ids, rx_ids;
  tx_ids.reserve(static_cast<std::size_t>(n_tx));
  rx_ids.reserve(static_cast<std::size_t>(n_rx));
  for (const auto& c : cfg.tx_ports) tx_ids.push_back(c.row * space_.grid_cols + c.col);
  for (const auto& c : cfg.rx_ports) rx_ids.push_back(c.row * space_.grid_cols + c.col);

  CMat user_channels(k_users, n_tx);
  for (int k = 0; k < k_users; ++k)
    for (int m = 0; m < n_tx; ++m)
      user_channels(k, m) = cache.user_cell(k, tx_ids[static_cast<std::size_t>(m)]);

  const double scale =
      std::sqrt(scene_.tx_power / space_.n_users) / std::sqrt(static_cast<double>(n_tx));
  CMat f(n_tx, space_.n_users);
  for (int k = 0; k < space_.n_users; ++k)
    for (int m = 0; m < n_tx; ++m)
      f(m, k) = scale * cache.beam_cell(cfg.beam_idx[static_cast<std::size_t>(k)],
                                        tx_ids[static_cast<std::size_t>(m)]);

  const auto bilinear = [&](const CMat& cell_rows, const CVec& gains) {
    CMat g = CMat::Zero(n_rx, n_tx);
    for (Eigen::Index s = 0; s < gains.size(); ++s) {
      for (int n = 0; n < n_rx; ++n) {
        const Complex b = gains[s] * cell_rows(s, rx_ids[static_cast<std::size_t>(n)]);
        for (int m = 0; m < n_tx; ++m)
          g(n, m) += b * std::conj(cell_rows(s, tx_ids[static_cast<std::size_t>(m)]));
      }
    }
    return g;
  };

  CVec target_gains(static_cast<Eigen::Index>(scene_.targets.size()));
  for (std::size_t t = 0; t < scene_.targets.size(); ++t)
    target_gains[static_cast<Eigen::Index>(t)] = scene_.targets[t].reflection;
  CVec clutter_gains(static_cast<Eigen::Index>(scene_.clutter.size()));
  for (std::size_t c = 0; c < scene_.clutter.size(); ++c)
    clutter_gains[static_cast<Eigen::Index>(c)] = scene_.clutter[c].gain;

  const CMat g_t = bilinear(cache.target_cell, target_gains);
  const CMat g_clu = bilinear(cache.clutter_cell, clutter_gains);
  CMat g_si(n_rx, n_tx);
  for (int n = 0; n < n_rx; ++n)
    for (int m = 0; m < n_tx; ++m)
      g_si(n, m) = si_cell_(rx_ids[static_cast<std::size_t>(n)], tx_ids[static_cast<std::size_t>(m)]);

  LatentConstituents h = latent_from_channels(user_channels, f, g_t, g_clu, g_si, scene_.noise_sense);
  return finish_evaluation(std::move(h), scene_.noise_comm, 0.0, nullptr);
}

Evaluation SceneEvaluator::evaluate(const Configuration& cfg, double obs_noise_std,
                                    Rng& rng) const {
  Evaluation ev = evaluate(cfg);
  if (obs_noise_std > 0.0) {
    for (Eigen::Index i = 0; i < ev.h_observed.size(); ++i)
      ev.h_observed[i] = std::max(0.0, ev.h_true[i] + obs_noise_std * rng.normal());
  }
  return ev;
}

}  // namespace fasmobo
