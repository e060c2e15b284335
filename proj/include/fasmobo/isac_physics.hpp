#pragma once

#include <vector>

#include "fasmobo/common.hpp"
#include "fasmobo/config_space.hpp"
#include "fasmobo/rng.hpp"

namespace fasmobo {

/// Physical aperture realization for one orientation: rotated port grid
/// anchored at the BS. Steering phases are referenced to the BS position so
/// rigid rotations of the whole scene leave both objectives unchanged.
struct ArrayGeometry {
  Mat3 rotation = Mat3::Identity();
  Vec3 bs_position = Vec3::Zero();
  double wavelength = 0.0;
  double spacing = 0.0;  // meters between adjacent ports
  int grid_rows = 0;
  int grid_cols = 0;
  std::vector<Vec3> rel_positions;  // cell id (row-major) -> position minus BS

  const Vec3& relative(const GridCell& c) const {
    return rel_positions[static_cast<std::size_t>(c.row * grid_cols + c.col)];
  }
  Vec3 position(const GridCell& c) const { return bs_position + relative(c); }
};

ArrayGeometry build_geometry(const SpaceSpec& space, int orientation_idx, double wavelength,
                             const Vec3& bs_position);

struct PathComponent {
  Complex gain{0.0, 0.0};
  double elevation = 0.0;  // polar angle from the BS z-axis
  double azimuth = 0.0;
};

struct UserRecord {
  Vec3 position = Vec3::Zero();
  std::vector<PathComponent> paths;  // paths[0] is the LoS component
};

struct TargetRecord {
  Vec3 position = Vec3::Zero();
  Complex reflection{0.0, 0.0};
  double elevation = 0.0;
  double azimuth = 0.0;
};

struct ClutterRecord {
  Complex gain{0.0, 0.0};
  double elevation = 0.0;
  double azimuth = 0.0;
};

/// Ground truth the simulator owns and the optimizer never reads directly.
struct Scene {
  std::vector<UserRecord> users;
  std::vector<TargetRecord> targets;
  std::vector<ClutterRecord> clutter;
  double noise_comm = 1e-12;   // W
  double noise_sense = 1e-12;  // W
  double si_atten = 1e-5;      // linear amplitude, e.g. -100 dB -> 1e-5
  double tx_power = 1.0;       // W
  double wavelength = kSpeedOfLight / 28e9;  // m
  Vec3 bs_position{0.0, 0.0, 30.0};
};

void check_scene(const Scene& scene);

/// Unit propagation direction for (elevation, azimuth), elevation measured
/// from the z-axis so 0 is broadside to an unrotated x-y aperture.
inline Vec3 unit_direction(double elevation, double azimuth) {
  const double s = std::sin(elevation);
  return {s * std::cos(azimuth), s * std::sin(azimuth), std::cos(elevation)};
}

/// Entry m = exp(-j 2 pi / lambda * p_m . u(theta, phi)); unit modulus.
CVec steering_vector(const std::vector<Vec3>& positions, double elevation, double azimuth,
                     double wavelength);

std::vector<Vec3> gather_positions(const ArrayGeometry& geom, const std::vector<GridCell>& cells);

/// Multipath downlink channel h_k over the selected transmit ports.
CVec comm_channel(const ArrayGeometry& geom, const std::vector<GridCell>& tx_ports,
                  const std::vector<PathComponent>& paths);

/// Far-field two-way target response, rank <= number of targets.
CMat target_channel(const ArrayGeometry& geom, const std::vector<GridCell>& rx_ports,
                    const std::vector<GridCell>& tx_ports,
                    const std::vector<TargetRecord>& targets);

/// Spherical-wave self-interference leakage: entry (n, m) is
/// beta / d * exp(-j 2 pi d / lambda) over the rx->tx port distance d.
/// Throws FasError("si-zero-distance") on coincident ports.
CMat si_channel(const ArrayGeometry& geom, const std::vector<GridCell>& rx_ports,
                const std::vector<GridCell>& tx_ports, double si_atten);

/// Same bilinear far-field form as the target response, with clutter gains.
CMat clutter_channel(const ArrayGeometry& geom, const std::vector<GridCell>& rx_ports,
                     const std::vector<GridCell>& tx_ports,
                     const std::vector<ClutterRecord>& clutter);

/// Rounds each entry's phase onto the 2^bits uniform grid, preserving modulus.
CVec quantize_phases(const CVec& v, int bits);

/// Per-user phase-quantized steered beams with equal power split;
/// Tr(F F^H) = tx_power exactly.
CMat build_precoder(const Configuration& cfg, const ArrayGeometry& geom, const SpaceSpec& space,
                    double tx_power);

/// The grey-box intermediate vector h(z): pairwise beam powers plus whitened
/// sensing eigenvalues (descending, clipped at zero).
struct LatentConstituents {
  Mat pair_powers;   // K x K, entry (k, q) = |h_k^T f_q|^2
  Vec sensing_eigs;  // N_r, descending

  Vec as_vector() const;
  static LatentConstituents from_vector(const Vec& v, int n_users, int n_rx);
  static int dim(int n_users, int n_rx) { return n_users * n_users + n_rx; }
};

struct ObjectiveVector {
  double rc = 0.0;  // communication sum rate, bits/s/Hz
  double rs = 0.0;  // sensing mutual information, bits/s/Hz

  bool operator==(const ObjectiveVector&) const = default;
};

/// Builds all channels for cfg and extracts h(z). Throws
/// FasError("covariance-degenerate") if the interference covariance loses
/// positive definiteness (cannot happen while noise_sense > 0).
LatentConstituents latent_constituents(const Configuration& cfg, const Scene& scene,
                                       const SpaceSpec& space);

/// The explicitly known deterministic map g(h) -> [R_c, R_s].
ObjectiveVector known_map_g(const LatentConstituents& h, double noise_comm);
ObjectiveVector known_map_g(const Vec& h, int n_users, int n_rx, double noise_comm);

struct Evaluation {
  ObjectiveVector objective;
  Vec h_observed;  // drives surrogate training
  Vec h_true;      // drives metrics
};

/// Ground-truth objective plus a noisy latent observation (std 0 = exact),
/// clipped to the nonnegative domain of LatentConstituents.
Evaluation evaluate(const Configuration& cfg, const Scene& scene, const SpaceSpec& space,
                    double obs_noise_std, Rng& rng);

/// Caching evaluator: per-orientation per-cell channel phasors and the
/// port-pair SI table are precomputed once, so exhaustive sweeps and long
/// optimizer runs evaluate configurations in microseconds. Math is identical
/// to the free functions above.
class SceneEvaluator {
 public:
  SceneEvaluator(const Scene& scene, const SpaceSpec& space);

  const Scene& scene() const { return scene_; }
  const SpaceSpec& space() const { return space_; }

  Evaluation evaluate(const Configuration& cfg) const;  // noiseless
  Evaluation evaluate(const Configuration& cfg, double obs_noise_std, Rng& rng) const;

 private:
  struct OrientationCache {
    CMat user_cell;    // K x P: per-cell aggregated downlink response
    CMat target_cell;  // Q x P: per-cell steering phasor per target
    CMat clutter_cell; // Qc x P
    CMat beam_cell;    // Qb x P: quantized per-cell beam phasors
  };

  Scene scene_;
  SpaceSpec space_;
  CMat si_cell_;  // P x P self-interference table (orientation independent)
  std::vector<OrientationCache> per_orientation_;
};

}  // namespace fasmobo
