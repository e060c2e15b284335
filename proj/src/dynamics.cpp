#include "fasmobo/dynamics.hpp"

namespace fasmobo {

namespace {
constexpr Complex kJ{0.0, 1.0};
}

KinematicState step_kinematics(const KinematicState& state, double dt, double accel_bound,
                               double v_max, Rng& rng) {
  if (dt <= 0.0) throw FasError("invalid-dt");
  KinematicState out;
  out.position = state.position + state.velocity * dt;
  out.velocity = state.velocity;
  if (accel_bound > 0.0) {
    const Vec u = rng.unit_sphere(3);
    const double mag = rng.uniform(0.0, accel_bound * dt);
    out.velocity += mag * Vec3(u[0], u[1], u[2]);
  }
  const double speed = out.velocity.norm();
  if (v_max > 0.0 && speed > v_max) out.velocity *= v_max / speed;
  return out;
}

PathComponent los_update(const Vec3& entity_position, const Vec3& bs_position, double wavelength) {
  const Vec3 d = entity_position - bs_position;
  const double r = d.norm();
  if (r <= 0.0) throw FasError("los-zero-range");
  PathComponent p;
  p.gain = (wavelength / (4.0 * kPi * r)) * std::exp(-kJ * (2.0 * kPi * r / wavelength));
  const Vec3 u = d / r;
  p.elevation = std::acos(std::clamp(u.z(), -1.0, 1.0));
  p.azimuth = std::atan2(u.y(), u.x());
  return p;
}

double jakes_rho(double doppler_hz, double dt) {
  if (doppler_hz < 0.0 || dt <= 0.0) throw FasError("invalid-jakes-args");
  return std::cyl_bessel_j(0.0, 2.0 * kPi * doppler_hz * dt);
}

FadingState ar_step(const FadingState& fading, Rng& rng) {
  FadingState out = fading;
  const double rho_g = fading.rho_gain;
  const double rho_a = fading.rho_angle;
  const double g_mix = std::sqrt(std::max(0.0, 1.0 - rho_g * rho_g));
  const double a_mix = std::sqrt(std::max(0.0, 1.0 - rho_a * rho_a));
  for (auto& p : out.nlos) {
    p.gain = rho_g * p.gain + g_mix * rng.complex_normal(fading.sigma_gain2);
    const double se = std::sqrt(fading.sigma_angle2);
    p.elevation = rho_a * p.elevation + a_mix * rng.normal(0.0, se);
    p.azimuth = rho_a * p.azimuth + a_mix * rng.normal(0.0, se);
  }
  return out;
}

void check_dynamic_scene(const DynamicScene& ds) {
  if (ds.slot_dt <= 0.0) throw FasError("invalid-dynamic-scene", "slot_dt must be > 0");
  const std::size_t entities = ds.scene.users.size() + ds.scene.targets.size();
  if (ds.kinematics.size() != entities)
    throw FasError("invalid-dynamic-scene", "kinematic state count mismatch");
  if (ds.fading.size() != ds.scene.users.size())
    throw FasError("invalid-dynamic-scene", "fading state count mismatch");
}

DynamicScene init_dynamic_scene(const Scene& scene, double slot_dt, double doppler_hz,
                                const MobilityParams& mobility, Rng& rng) {
  DynamicScene ds;
  ds.scene = scene;
  ds.slot_dt = slot_dt;
  ds.doppler_hz = doppler_hz;
  ds.mobility = mobility;

  const double rho_g = jakes_rho(doppler_hz, slot_dt);
  for (const auto& user : scene.users) {
    KinematicState k;
    k.position = user.position;
    const double heading = rng.uniform(0.0, 2.0 * kPi);
    const double speed = rng.uniform(0.3, 1.0) * mobility.v_max_user;
    k.velocity = Vec3{speed * std::cos(heading), speed * std::sin(heading), 0.0};
    ds.kinematics.push_back(k);

    FadingState f;
    f.rho_gain = rho_g;
    f.rho_angle = ds.rho_angle;
    f.sigma_angle2 = ds.sigma_angle2;
    double power = 0.0;
    for (std::size_t l = 1; l < user.paths.size(); ++l) {
      f.nlos.push_back(user.paths[l]);
      power += std::norm(user.paths[l].gain);
    }
    f.sigma_gain2 = f.nlos.empty() ? 0.0 : power / static_cast<double>(f.nlos.size());
    ds.fading.push_back(f);
  }
  for (const auto& target : scene.targets) {
    KinematicState k;
    k.position = target.position;
    const double heading = rng.uniform(0.0, 2.0 * kPi);
    const double speed = rng.uniform(0.3, 1.0) * mobility.v_max_target;
    k.velocity = Vec3{speed * std::cos(heading), speed * std::sin(heading),
                      0.2 * speed * (rng.uniform() - 0.5)};
    ds.kinematics.push_back(k);
  }
  check_dynamic_scene(ds);
  return ds;
}

DynamicScene advance_scene(DynamicScene ds, Rng& rng) {
  check_dynamic_scene(ds);
  const std::size_t n_users = ds.scene.users.size();
  const double lambda = ds.scene.wavelength;

  for (std::size_t i = 0; i < n_users; ++i) {
    KinematicState& kin = ds.kinematics[i];
    kin = step_kinematics(kin, ds.slot_dt, ds.mobility.accel_bound, ds.mobility.v_max_user, rng);
    UserRecord& user = ds.scene.users[i];
    user.position = kin.position;
    user.paths[0] = los_update(kin.position, ds.scene.bs_position, lambda);

    ds.fading[i] = ar_step(ds.fading[i], rng);
    for (std::size_t l = 0; l < ds.fading[i].nlos.size(); ++l)
      user.paths[l + 1] = ds.fading[i].nlos[l];
  }

  for (std::size_t q = 0; q < ds.scene.targets.size(); ++q) {
    KinematicState& kin = ds.kinematics[n_users + q];
    TargetRecord& target = ds.scene.targets[q];
    const double r_old = (kin.position - ds.scene.bs_position).norm();
    kin = step_kinematics(kin, ds.slot_dt, ds.mobility.accel_bound, ds.mobility.v_max_target, rng);
    target.position = kin.position;
    const Vec3 d = kin.position - ds.scene.bs_position;
    const double r_new = d.norm();
    if (r_new <= 0.0) throw FasError("los-zero-range");
    target.elevation = std::acos(std::clamp(d.z() / r_new, -1.0, 1.0));
    target.azimuth = std::atan2(d.y(), d.x());
    // constant reflection magnitude, phase advanced by the two-way range change
    target.reflection *= std::exp(-kJ * (2.0 * (2.0 * kPi / lambda) * (r_new - r_old)));
  }

  ds.slot += 1;
  return ds;
}

std::vector<Scene> roll_scenes(DynamicScene ds, int n_slots, Rng& rng) {
  std::vector<Scene> out;
  out.reserve(static_cast<std::size_t>(n_slots));
  for (int t = 0; t < n_slots; ++t) {
    out.push_back(ds.scene);
    if (t + 1 < n_slots) ds = advance_scene(std::move(ds), rng);
  }
  return out;
}

}  // namespace fasmobo
