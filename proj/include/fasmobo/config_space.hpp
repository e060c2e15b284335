#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fasmobo/common.hpp"
#include "fasmobo/rng.hpp"

namespace fasmobo {

struct GridCell {
  int row = 0;
  int col = 0;
  auto operator<=>(const GridCell&) const = default;
};

/// Static description of the combinatorial decision space: the candidate
/// port grid, active antenna counts, and the discrete codebook sizes.
struct SpaceSpec {
  int grid_rows = 9;
  int grid_cols = 9;
  int n_tx = 4;
  int n_rx = 4;
  int n_users = 2;
  int n_orientations = 8;
  int n_beams = 8;           // codebook size per user
  double port_spacing = 0.5; // in wavelengths
  int phase_bits = 3;        // precoder phase resolution

  // Beam codebook geometry: n_beams azimuths evenly spaced at this polar angle.
  double beam_elevation = 2.0 * kPi / 3.0;

  // Orientation codebook; filled with a default (elevation, azimuth) lattice
  // when left empty. See orientation_angle().
  std::vector<std::pair<double, double>> orientation_angles;

  int n_ports() const { return grid_rows * grid_cols; }
  int n_active() const { return n_tx + n_rx; }
};

/// Throws FasError("invalid-space") if counts or capacity constraints fail.
void check_space(const SpaceSpec& space);

/// (elevation, azimuth) for an orientation index, using the spec's explicit
/// list or the default lattice {0, pi/4} x evenly spaced azimuths.
std::pair<double, double> orientation_angle(const SpaceSpec& space, int orientation_idx);

/// One point of the decision space: active port cells, orientation index and
/// per-user beam indices. Port lists are kept row-major sorted in canonical
/// form so permutation-equivalent selections collapse to one point.
struct Configuration {
  std::vector<GridCell> tx_ports;
  std::vector<GridCell> rx_ports;
  int orientation_idx = 0;
  std::vector<int> beam_idx;

  bool operator==(const Configuration&) const = default;
};

Configuration canonicalized(Configuration cfg);

/// Compact stable identifier (hyphen-joined encoded coordinates).
std::string config_id(const Configuration& cfg);

struct Feasibility {
  bool feasible = true;
  std::string violation;  // first violated constraint, empty when feasible

  explicit operator bool() const { return feasible; }
};

/// Checks cardinalities, grid membership, in-group distinctness, tx/rx
/// disjointness and index ranges. Infeasibility is a value, not an error.
Feasibility validate(const Configuration& cfg, const SpaceSpec& space);

struct Bounds {
  int lo = 0;
  int hi = 0;
  int range() const { return hi - lo; }
};

/// Ordinal integer embedding of a configuration: per-antenna (row, col)
/// pairs, the orientation index, then per-user beam indices.
struct EncodedPoint {
  std::vector<int> coords;
  std::vector<Bounds> bounds;

  Vec as_real() const {
    Vec v(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) v[static_cast<Eigen::Index>(i)] = coords[i];
    return v;
  }
};

int encoded_dim(const SpaceSpec& space);
std::vector<Bounds> encoding_bounds(const SpaceSpec& space);

/// Canonicalizes then encodes; throws FasError("encode-infeasible") when the
/// configuration does not validate against the space.
EncodedPoint encode(const Configuration& cfg, const SpaceSpec& space);

Configuration decode(const std::vector<int>& coords, const SpaceSpec& space);
inline Configuration decode(const EncodedPoint& pt, const SpaceSpec& space) {
  return decode(pt.coords, space);
}

/// Uniform feasible draw: ports without replacement over the grid, uniform
/// orientation and beam indices. Returned configuration is canonical.
Configuration sample_uniform(const SpaceSpec& space, Rng& rng);

/// Local search region in encoded space. side_len is normalized to (0, 1];
/// at 1 the region degenerates to the full space.
struct TrustRegion {
  Configuration center;
  double side_len = 1.0;
  int success_count = 0;
  int failure_count = 0;
};

struct TrustRegionParams {
  double gamma_inc = 1.5;
  double gamma_dec = 0.5;
  int success_tol = 1;
  int failure_tol = 3;
  double l_min = 0.03125;
  double l_max = 1.0;
};

/// Throws FasError("invalid-tr-params") unless gamma_inc > 1,
/// 0 < gamma_dec < 1 and l_min < l_max.
void check_tr_params(const TrustRegionParams& p);

/// Pure counter/side-length transition: a success resets the failure counter
/// and vice versa; the side length only moves once a tolerance is hit, and is
/// always clipped into [l_min, l_max].
TrustRegion tr_update(TrustRegion tr, bool hvi_positive, const TrustRegionParams& p);

/// Per-dimension half-width of the trust-region box. At least one grid step;
/// at side_len = 1 the interval covers the full bounds regardless of center.
Bounds tr_interval(const Bounds& b, int center, double side_len);

/// Draws n feasible configurations whose encoded coordinates lie inside the
/// trust-region box around encode(tr.center). Collisions between port draws
/// are repaired by re-drawing inside the box with a bounded retry count and
/// then falling back to the nearest feasible cell in the box. Throws
/// FasError("empty-trust-region") when no feasible configuration exists in
/// the box (which requires an infeasible center).
std::vector<Configuration> sample_in_region(const SpaceSpec& space, const TrustRegion& tr,
                                            int n, Rng& rng);

/// Total number of feasible configurations; saturates at UINT64_MAX.
std::uint64_t count_configurations(const SpaceSpec& space);

/// Deterministic exhaustive generator over the feasible set. The constructor
/// throws SpaceTooLargeError when the space exceeds cap.
class ConfigEnumerator {
 public:
  ConfigEnumerator(const SpaceSpec& space, std::uint64_t cap);

  std::optional<Configuration> next();

  std::uint64_t total() const { return total_; }

 private:
  bool advance_beams();
  bool advance_rx();
  bool advance_tx();
  void rebuild_complement();

  SpaceSpec space_;
  std::uint64_t total_ = 0;
  bool done_ = false;
  std::vector<int> tx_combo_;    // ascending cell ids
  std::vector<int> rx_combo_;    // ascending indices into complement_
  std::vector<int> complement_;  // cell ids not used by tx, ascending
  int orientation_ = 0;
  std::vector<int> beams_;
};

}  // namespace fasmobo
