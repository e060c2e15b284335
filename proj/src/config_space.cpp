#include "fasmobo/config_space.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

namespace fasmobo {

void check_space(const SpaceSpec& space) {
  const auto fail = [](const std::string& what) { throw FasError("invalid-space", what); };
  if (space.grid_rows < 1 || space.grid_cols < 1) fail("grid dimensions must be >= 1");
  if (space.n_tx < 1 || space.n_rx < 1) fail("antenna counts must be >= 1");
  if (space.n_users < 1) fail("n_users must be >= 1");
  if (space.n_orientations < 1) fail("n_orientations must be >= 1");
  if (space.n_beams < 1) fail("n_beams must be >= 1");
  if (space.n_tx + space.n_rx > space.n_ports()) fail("active antennas exceed grid capacity");
  if (space.n_tx < space.n_users) fail("n_tx must be >= n_users");
  if (space.port_spacing <= 0.0) fail("port_spacing must be > 0");
  if (space.phase_bits < 1 || space.phase_bits > 30) fail("phase_bits out of range");
  if (!space.orientation_angles.empty() &&
      static_cast<int>(space.orientation_angles.size()) < space.n_orientations)
    fail("orientation_angles shorter than n_orientations");
}

std::pair<double, double> orientation_angle(const SpaceSpec& space, int orientation_idx) {
  if (orientation_idx < 0 || orientation_idx >= space.n_orientations)
    throw FasError("invalid-orientation", std::to_string(orientation_idx));
  if (!space.orientation_angles.empty())
    return space.orientation_angles[static_cast<std::size_t>(orientation_idx)];
  const int n_elev = std::min(2, space.n_orientations);
  const int n_az = (space.n_orientations + n_elev - 1) / n_elev;
  const int e = orientation_idx / n_az;
  const int a = orientation_idx % n_az;
  const double theta = (e == 0) ? 0.0 : kPi / 4.0;
  const double phi = 2.0 * kPi * a / n_az;
  return {theta, phi};
}

Configuration canonicalized(Configuration cfg) {
  std::sort(cfg.tx_ports.begin(), cfg.tx_ports.end());
  std::sort(cfg.rx_ports.begin(), cfg.rx_ports.end());
  return cfg;
}

std::string config_id(const Configuration& cfg) {
  std::string id;
  const Configuration c = canonicalized(cfg);
  const auto append = [&id](int v) {
    if (!id.empty()) id += '-';
    id += std::to_string(v);
  };
  for (const auto& p : c.tx_ports) {
    append(p.row);
    append(p.col);
  }
  for (const auto& p : c.rx_ports) {
    append(p.row);
    append(p.col);
  }
  append(c.orientation_idx);
  for (int b : c.beam_idx) append(b);
  return id;
}

Feasibility validate(const Configuration& cfg, const SpaceSpec& space) {
  const auto bad = [](const std::string& v) { return Feasibility{false, v}; };
  if (static_cast<int>(cfg.tx_ports.size()) != space.n_tx) return bad("tx-cardinality");
  if (static_cast<int>(cfg.rx_ports.size()) != space.n_rx) return bad("rx-cardinality");
  const auto in_grid = [&space](const GridCell& c) {
    return c.row >= 0 && c.row < space.grid_rows && c.col >= 0 && c.col < space.grid_cols;
  };
  for (const auto& c : cfg.tx_ports)
    if (!in_grid(c)) return bad("tx-port-out-of-grid");
  for (const auto& c : cfg.rx_ports)
    if (!in_grid(c)) return bad("rx-port-out-of-grid");
  std::set<GridCell> tx(cfg.tx_ports.begin(), cfg.tx_ports.end());
  if (tx.size() != cfg.tx_ports.size()) return bad("duplicate-tx-port");
  std::set<GridCell> rx(cfg.rx_ports.begin(), cfg.rx_ports.end());
  if (rx.size() != cfg.rx_ports.size()) return bad("duplicate-rx-port");
  for (const auto& c : rx)
    if (tx.count(c)) return bad("tx-rx-overlap");
  if (cfg.orientation_idx < 0 || cfg.orientation_idx >= space.n_orientations)
    return bad("orientation-out-of-range");
  if (static_cast<int>(cfg.beam_idx.size()) != space.n_users) return bad("beam-cardinality");
  for (int b : cfg.beam_idx)
    if (b < 0 || b >= space.n_beams) return bad("beam-out-of-range");
  return {};
}

int encoded_dim(const SpaceSpec& space) {
  return 2 * (space.n_tx + space.n_rx) + 1 + space.n_users;
}

std::vector<Bounds> encoding_bounds(const SpaceSpec& space) {
  std::vector<Bounds> b;
  b.reserve(static_cast<std::size_t>(encoded_dim(space)));
  for (int i = 0; i < space.n_tx + space.n_rx; ++i) {
    b.push_back({0, space.grid_rows - 1});
    b.push_back({0, space.grid_cols - 1});
  }
  b.push_back({0, space.n_orientations - 1});
  for (int k = 0; k < space.n_users; ++k) b.push_back({0, space.n_beams - 1});
  return b;
}

EncodedPoint encode(const Configuration& cfg, const SpaceSpec& space) {
  const Feasibility ok = validate(cfg, space);
  if (!ok) throw FasError("encode-infeasible", ok.violation);
  const Configuration c = canonicalized(cfg);
  EncodedPoint pt;
  pt.bounds = encoding_bounds(space);
  pt.coords.reserve(pt.bounds.size());
  for (const auto& p : c.tx_ports) {
    pt.coords.push_back(p.row);
    pt.coords.push_back(p.col);
  }
  for (const auto& p : c.rx_ports) {
    pt.coords.push_back(p.row);
    pt.coords.push_back(p.col);
  }
  pt.coords.push_back(c.orientation_idx);
  for (int b : c.beam_idx) pt.coords.push_back(b);
  return pt;
}

Configuration decode(const std::vector<int>& coords, const SpaceSpec& space) {
  if (static_cast<int>(coords.size()) != encoded_dim(space))
    throw FasError("decode-dimension", std::to_string(coords.size()));
  Configuration cfg;
  std::size_t i = 0;
  for (int t = 0; t < space.n_tx; ++t) {
    cfg.tx_ports.push_back({coords[i], coords[i + 1]});
    i += 2;
  }
  for (int r = 0; r < space.n_rx; ++r) {
    cfg.rx_ports.push_back({coords[i], coords[i + 1]});
    i += 2;
  }
  cfg.orientation_idx = coords[i++];
  for (int k = 0; k < space.n_users; ++k) cfg.beam_idx.push_back(coords[i++]);
  return cfg;
}

namespace {

GridCell cell_of(int id, const SpaceSpec& space) {
  return {id / space.grid_cols, id % space.grid_cols};
}

}  // namespace

Configuration sample_uniform(const SpaceSpec& space, Rng& rng) {
  Configuration cfg;
  const std::vector<int> cells = rng.sample_distinct(space.n_ports(), space.n_active());
  for (int i = 0; i < space.n_tx; ++i) cfg.tx_ports.push_back(cell_of(cells[i], space));
  for (int i = space.n_tx; i < space.n_active(); ++i)
    cfg.rx_ports.push_back(cell_of(cells[i], space));
  cfg.orientation_idx = static_cast<int>(rng.uniform_int(0, space.n_orientations - 1));
  for (int k = 0; k < space.n_users; ++k)
    cfg.beam_idx.push_back(static_cast<int>(rng.uniform_int(0, space.n_beams - 1)));
  return canonicalized(cfg);
}

void check_tr_params(const TrustRegionParams& p) {
  if (!(p.gamma_inc > 1.0) || !(p.gamma_dec > 0.0 && p.gamma_dec < 1.0) ||
      !(p.l_min < p.l_max) || p.success_tol < 1 || p.failure_tol < 1)
    throw FasError("invalid-tr-params");
}

TrustRegion tr_update(TrustRegion tr, bool hvi_positive, const TrustRegionParams& p) {
  check_tr_params(p);
  if (hvi_positive) {
    tr.success_count += 1;
    tr.failure_count = 0;
  } else {
    tr.failure_count += 1;
    tr.success_count = 0;
  }
  if (tr.success_count >= p.success_tol) {
    tr.side_len = std::min(tr.side_len * p.gamma_inc, p.l_max);
    tr.success_count = 0;
  }
  if (tr.failure_count >= p.failure_tol) {
    tr.side_len = std::max(tr.side_len * p.gamma_dec, p.l_min);
    tr.failure_count = 0;
  }
  return tr;
}

Bounds tr_interval(const Bounds& b, int center, double side_len) {
  const int range = b.range();
  const int w = std::max<int>(1, static_cast<int>(std::llround(side_len * range / 2.0)));
  if (2 * w >= range) return b;  // degenerate full-bounds box
  return {std::max(b.lo, center - w), std::min(b.hi, center + w)};
}

namespace {

struct PortBox {
  Bounds rows;
  Bounds cols;

  bool contains(const GridCell& c) const {
    return c.row >= rows.lo && c.row <= rows.hi && c.col >= cols.lo && c.col <= cols.hi;
  }
};

// Nearest unused cell inside the box, by L1 distance to `want`, ties row-major.
std::optional<GridCell> nearest_free_in_box(const PortBox& box, const GridCell& want,
                                            const std::set<GridCell>& used) {
  std::optional<GridCell> best;
  int best_dist = INT_MAX;
  for (int r = box.rows.lo; r <= box.rows.hi; ++r) {
    for (int c = box.cols.lo; c <= box.cols.hi; ++c) {
      const GridCell cell{r, c};
      if (used.count(cell)) continue;
      const int dist = std::abs(r - want.row) + std::abs(c - want.col);
      if (dist < best_dist) {
        best_dist = dist;
        best = cell;
      }
    }
  }
  return best;
}

}  // namespace

std::vector<Configuration> sample_in_region(const SpaceSpec& space, const TrustRegion& tr,
                                            int n, Rng& rng) {
  if (!validate(tr.center, space))
    throw FasError("empty-trust-region", "trust-region center is infeasible");

  const EncodedPoint center = encode(tr.center, space);
  const int n_port = space.n_active();
  std::vector<PortBox> boxes(static_cast<std::size_t>(n_port));
  bool ports_full = true;
  for (int s = 0; s < n_port; ++s) {
    boxes[s].rows = tr_interval(center.bounds[2 * s], center.coords[2 * s], tr.side_len);
    boxes[s].cols = tr_interval(center.bounds[2 * s + 1], center.coords[2 * s + 1], tr.side_len);
    ports_full = ports_full && boxes[s].rows.lo == 0 && boxes[s].rows.hi == space.grid_rows - 1 &&
                 boxes[s].cols.lo == 0 && boxes[s].cols.hi == space.grid_cols - 1;
  }
  const std::size_t d_orient = static_cast<std::size_t>(2 * n_port);
  const Bounds orient_iv =
      tr_interval(center.bounds[d_orient], center.coords[d_orient], tr.side_len);
  std::vector<Bounds> beam_iv;
  for (int k = 0; k < space.n_users; ++k)
    beam_iv.push_back(
        tr_interval(center.bounds[d_orient + 1 + k], center.coords[d_orient + 1 + k], tr.side_len));

  constexpr int kPortRetries = 32;
  constexpr int kCandidateRetries = 32;

  const auto in_slot_boxes = [&](const Configuration& c) {
    for (int s = 0; s < space.n_tx; ++s)
      if (!boxes[static_cast<std::size_t>(s)].contains(c.tx_ports[static_cast<std::size_t>(s)]))
        return false;
    for (int s = 0; s < space.n_rx; ++s)
      if (!boxes[static_cast<std::size_t>(space.n_tx + s)].contains(
              c.rx_ports[static_cast<std::size_t>(s)]))
        return false;
    return true;
  };

  std::vector<Configuration> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Configuration cand;
    bool found = false;
    for (int attempt = 0; attempt < kCandidateRetries && !found; ++attempt) {
      cand = Configuration{};
      if (ports_full) {
        const std::vector<int> cells = rng.sample_distinct(space.n_ports(), n_port);
        for (int s = 0; s < space.n_tx; ++s) cand.tx_ports.push_back(cell_of(cells[s], space));
        for (int s = space.n_tx; s < n_port; ++s) cand.rx_ports.push_back(cell_of(cells[s], space));
        cand = canonicalized(cand);
        found = true;
      } else {
        std::set<GridCell> used;
        bool slots_ok = true;
        for (int s = 0; s < n_port && slots_ok; ++s) {
          const PortBox& box = boxes[static_cast<std::size_t>(s)];
          GridCell cell{};
          bool placed = false;
          for (int t = 0; t < kPortRetries && !placed; ++t) {
            cell = {static_cast<int>(rng.uniform_int(box.rows.lo, box.rows.hi)),
                    static_cast<int>(rng.uniform_int(box.cols.lo, box.cols.hi))};
            placed = used.insert(cell).second;
          }
          if (!placed) {
            const auto repaired = nearest_free_in_box(box, cell, used);
            if (repaired) {
              used.insert(*repaired);
              cell = *repaired;
              placed = true;
            }
          }
          if (!placed) {
            slots_ok = false;
            break;
          }
          if (s < space.n_tx)
            cand.tx_ports.push_back(cell);
          else
            cand.rx_ports.push_back(cell);
        }
        if (!slots_ok) continue;
        cand = canonicalized(cand);
        // Sorting can migrate a draw across slots; keep only in-box results.
        found = in_slot_boxes(cand);
      }
    }
    if (!found) {
      // Degenerate box: fall back to the center's (feasible, in-box) ports.
      cand.tx_ports = tr.center.tx_ports;
      cand.rx_ports = tr.center.rx_ports;
      cand = canonicalized(cand);
    }
    cand.orientation_idx = static_cast<int>(rng.uniform_int(orient_iv.lo, orient_iv.hi));
    cand.beam_idx.clear();
    for (int k = 0; k < space.n_users; ++k)
      cand.beam_idx.push_back(static_cast<int>(
          rng.uniform_int(beam_iv[static_cast<std::size_t>(k)].lo,
                          beam_iv[static_cast<std::size_t>(k)].hi)));
    out.push_back(std::move(cand));
  }
  return out;
}

namespace {

// Saturating helpers for the configuration count.
std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) return UINT64_MAX;
  return r;
}

std::uint64_t binom_sat(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // r * (n - k + i) / i is integral at every step
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    if (r > UINT64_MAX / num) return UINT64_MAX;
    r = r * num / static_cast<std::uint64_t>(i);
  }
  return r;
}

std::uint64_t pow_sat(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) r = sat_mul(r, b);
  return r;
}

}  // namespace

std::uint64_t count_configurations(const SpaceSpec& space) {
  std::uint64_t c = binom_sat(space.n_ports(), space.n_tx);
  c = sat_mul(c, binom_sat(space.n_ports() - space.n_tx, space.n_rx));
  c = sat_mul(c, static_cast<std::uint64_t>(space.n_orientations));
  c = sat_mul(c, pow_sat(static_cast<std::uint64_t>(space.n_beams), space.n_users));
  return c;
}

ConfigEnumerator::ConfigEnumerator(const SpaceSpec& space, std::uint64_t cap) : space_(space) {
  check_space(space_);
  total_ = count_configurations(space_);
  if (total_ > cap) throw SpaceTooLargeError(total_, cap);
  tx_combo_.resize(static_cast<std::size_t>(space_.n_tx));
  std::iota(tx_combo_.begin(), tx_combo_.end(), 0);
  rebuild_complement();
  rx_combo_.resize(static_cast<std::size_t>(space_.n_rx));
  std::iota(rx_combo_.begin(), rx_combo_.end(), 0);
  orientation_ = 0;
  beams_.assign(static_cast<std::size_t>(space_.n_users), 0);
}

void ConfigEnumerator::rebuild_complement() {
  complement_.clear();
  std::size_t t = 0;
  for (int id = 0; id < space_.n_ports(); ++id) {
    if (t < tx_combo_.size() && tx_combo_[t] == id) {
      ++t;
      continue;
    }
    complement_.push_back(id);
  }
}

namespace {

// Advances an ascending k-combination over [0, n); false on wrap-around.
bool advance_combination(std::vector<int>& combo, int n) {
  const int k = static_cast<int>(combo.size());
  int i = k - 1;
  while (i >= 0 && combo[static_cast<std::size_t>(i)] == n - k + i) --i;
  if (i < 0) {
    std::iota(combo.begin(), combo.end(), 0);
    return false;
  }
  ++combo[static_cast<std::size_t>(i)];
  for (int j = i + 1; j < k; ++j)
    combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
  return true;
}

}  // namespace

bool ConfigEnumerator::advance_beams() {
  for (int k = static_cast<int>(beams_.size()) - 1; k >= 0; --k) {
    if (++beams_[static_cast<std::size_t>(k)] < space_.n_beams) return true;
    beams_[static_cast<std::size_t>(k)] = 0;
  }
  return false;
}

bool ConfigEnumerator::advance_rx() { return advance_combination(rx_combo_, static_cast<int>(complement_.size())); }

bool ConfigEnumerator::advance_tx() {
  if (!advance_combination(tx_combo_, space_.n_ports())) return false;
  rebuild_complement();
  return true;
}

std::optional<Configuration> ConfigEnumerator::next() {
  if (done_) return std::nullopt;
  Configuration cfg;
  for (int id : tx_combo_) cfg.tx_ports.push_back(cell_of(id, space_));
  for (int idx : rx_combo_)
    cfg.rx_ports.push_back(cell_of(complement_[static_cast<std::size_t>(idx)], space_));
  cfg.orientation_idx = orientation_;
  cfg.beam_idx = beams_;

  if (!advance_beams()) {
    if (++orientation_ >= space_.n_orientations) {
      orientation_ = 0;
      if (!advance_rx()) {
        if (!advance_tx()) done_ = true;
      }
    }
  }
  return cfg;
}

}  // namespace fasmobo
