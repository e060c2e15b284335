#pragma once

#include <cstdint>
#include <vector>

#include "fasmobo/isac_physics.hpp"
#include "fasmobo/rng.hpp"

namespace fasmobo {

struct KinematicState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

/// Random-walk step: deterministic position drift plus a bounded velocity
/// perturbation, with the speed re-clipped to v_max.
KinematicState step_kinematics(const KinematicState& state, double dt, double accel_bound,
                               double v_max, Rng& rng);

/// Geometric line-of-sight parameters seen from the BS: free-space 1/r gain
/// with range phase, and the (elevation, azimuth) of the departure direction.
/// Throws FasError("los-zero-range") when the entity sits on the BS.
PathComponent los_update(const Vec3& entity_position, const Vec3& bs_position, double wavelength);

/// Temporal fading correlation rho_g = J0(2 pi f_D dt).
double jakes_rho(double doppler_hz, double dt);

/// First-order AR state of one entity's NLoS paths.
struct FadingState {
  std::vector<PathComponent> nlos;
  double rho_gain = 1.0;
  double rho_angle = 1.0;
  double sigma_gain2 = 0.0;   // innovation power; also the stationary gain power
  double sigma_angle2 = 0.0;  // rad^2
};

/// One AR transition of every path's complex gain and angles.
FadingState ar_step(const FadingState& fading, Rng& rng);

struct MobilityParams {
  double v_max_user = 15.0;    // m/s
  double v_max_target = 10.0;  // m/s
  double accel_bound = 2.0;    // m/s^2
};

/// Scene plus everything needed to evolve it: kinematic states for the K + Q
/// mobile entities (users first), per-user NLoS fading, and slot timing.
struct DynamicScene {
  Scene scene;
  std::vector<KinematicState> kinematics;
  std::vector<FadingState> fading;  // one per user
  double slot_dt = 0.1;             // s
  double doppler_hz = 1.0;
  MobilityParams mobility;
  double rho_angle = 0.995;
  double sigma_angle2 = 1e-4;
  std::int64_t slot = 0;
};

void check_dynamic_scene(const DynamicScene& ds);

/// Builds the evolution state around a static scene: random initial
/// velocities (users horizontal, targets mostly horizontal), AR fading states
/// seeded from the scene's NLoS paths with Jakes correlation.
DynamicScene init_dynamic_scene(const Scene& scene, double slot_dt, double doppler_hz,
                                const MobilityParams& mobility, Rng& rng);

/// Advances one slot: kinematics, geometric LoS and target angle updates,
/// AR-stepped NLoS fading, target reflection phase advanced by the two-way
/// range change. Returns the evolved copy; the input snapshot stays valid.
DynamicScene advance_scene(DynamicScene ds, Rng& rng);

/// Scene snapshots for slots 0..n_slots-1, so every method (and the per-slot
/// oracle) sees the identical trajectory for a given seed.
std::vector<Scene> roll_scenes(DynamicScene ds, int n_slots, Rng& rng);

}  // namespace fasmobo
