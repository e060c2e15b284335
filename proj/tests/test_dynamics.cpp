#include <doctest.h>

#include "fasmobo/dynamics.hpp"
#include "oracles.hpp"

using namespace fasmobo;

namespace {

Scene tiny_scene(Rng& rng) {
  Scene sc;
  sc.noise_comm = 1e-2;
  sc.noise_sense = 1e-2;
  sc.si_atten = 1e-3;
  sc.tx_power = 1.0;
  UserRecord u;
  u.position = Vec3{40.0, 10.0, 0.0};
  u.paths.push_back(los_update(u.position, sc.bs_position, sc.wavelength));
  for (int l = 0; l < 2; ++l) {
    PathComponent p;
    p.gain = rng.complex_normal(std::norm(u.paths[0].gain) * 0.1);
    p.elevation = rng.uniform(0.3, kPi - 0.3);
    p.azimuth = rng.uniform(0.0, 2 * kPi);
    u.paths.push_back(p);
  }
  sc.users.push_back(u);
  TargetRecord t;
  t.position = Vec3{-30.0, 50.0, 60.0};
  const Vec3 d = t.position - sc.bs_position;
  t.elevation = std::acos(d.z() / d.norm());
  t.azimuth = std::atan2(d.y(), d.x());
  t.reflection = rng.complex_normal(1e-2);
  sc.targets.push_back(t);
  return sc;
}

}  // namespace

TEST_CASE("kinematics: static entity stays put") {
  Rng rng(1);
  KinematicState s;
  s.position = Vec3{1, 2, 3};
  const KinematicState out = step_kinematics(s, 0.1, 0.0, 10.0, rng);
  CHECK((out.position - s.position).norm() == 0.0);
  CHECK(out.velocity.norm() == 0.0);
}

TEST_CASE("kinematics: deterministic drift without acceleration") {
  Rng rng(1);
  KinematicState s;
  s.velocity = Vec3{1, 0, 0};
  const KinematicState out = step_kinematics(s, 0.1, 0.0, 10.0, rng);
  CHECK((out.position - Vec3{0.1, 0, 0}).norm() < 1e-15);
}

TEST_CASE("kinematics: speed never exceeds v_max over long runs") {
  Rng rng(7);
  KinematicState s;
  const double v_max = 3.0;
  for (int i = 0; i < 10000; ++i) {
    const KinematicState next = step_kinematics(s, 0.05, 5.0, v_max, rng);
    CHECK(next.velocity.norm() <= v_max + 1e-12);
    // position drift matches the pre-step velocity exactly
    CHECK((next.position - s.position).norm() ==
          doctest::Approx(s.velocity.norm() * 0.05).epsilon(1e-12));
    s = next;
  }
}

TEST_CASE("los gain magnitude and phase follow free space") {
  const double lambda = 0.0107;
  const Vec3 bs{0, 0, 0};
  SUBCASE("unit magnitude radius") {
    const double r = lambda / (4 * kPi);
    const PathComponent p = los_update(Vec3{r, 0, 0}, bs, lambda);
    CHECK(std::abs(p.gain) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("doubling range halves the gain") {
    const PathComponent a = los_update(Vec3{10, 0, 0}, bs, lambda);
    const PathComponent b = los_update(Vec3{20, 0, 0}, bs, lambda);
    CHECK(std::abs(b.gain) == doctest::Approx(0.5 * std::abs(a.gain)).epsilon(1e-12));
  }
  SUBCASE("integer wavelength wraps the phase to zero") {
    const PathComponent p = los_update(Vec3{lambda, 0, 0}, bs, lambda);
    CHECK(std::abs(std::arg(p.gain)) < 1e-9);
  }
  SUBCASE("zero range throws") {
    CHECK_THROWS_WITH_AS(los_update(bs, bs, lambda), doctest::Contains("los-zero-range"),
                         FasError);
  }
  SUBCASE("angles point from the BS to the entity") {
    const PathComponent p = los_update(Vec3{0, 0, 10}, bs, lambda);
    CHECK(p.elevation == doctest::Approx(0.0));
    const PathComponent q = los_update(Vec3{5, 5, 0}, bs, lambda);
    CHECK(q.elevation == doctest::Approx(kPi / 2));
    CHECK(q.azimuth == doctest::Approx(kPi / 4));
  }
}

TEST_CASE("jakes correlation matches the Bessel series oracle") {
  CHECK(jakes_rho(0.0, 0.1) == doctest::Approx(1.0));

  // first zero of J0 at x = 2.404825557695773
  const double dt = 0.01;
  const double fd_zero = 2.404825557695773 / (2 * kPi * dt);
  CHECK(std::abs(jakes_rho(fd_zero, dt)) < 1e-9);

  for (int i = 0; i <= 160; ++i) {
    const double x = 0.05 * i;  // [0, 8]
    const double fd = x / (2 * kPi * dt);
    CHECK(std::abs(jakes_rho(fd, dt) - oracles::j0_series(x)) < 1e-10);
  }
  for (const double x : {9.0, 15.0, 40.0, 123.0}) {
    const double rho = jakes_rho(x / (2 * kPi * dt), dt);
    CHECK(std::abs(rho) <= 1.0);
  }
}

TEST_CASE("AR fading transitions") {
  Rng init(3);
  FadingState f;
  f.sigma_gain2 = 0.5;
  f.sigma_angle2 = 1e-4;
  for (int l = 0; l < 3; ++l)
    f.nlos.push_back({init.complex_normal(0.5), init.uniform(0, kPi), init.uniform(0, 2 * kPi)});

  SUBCASE("unit correlations freeze the channel") {
    f.rho_gain = 1.0;
    f.rho_angle = 1.0;
    Rng rng(5);
    const FadingState out = ar_step(f, rng);
    for (std::size_t l = 0; l < f.nlos.size(); ++l) {
      CHECK(out.nlos[l].gain == f.nlos[l].gain);
      CHECK(out.nlos[l].elevation == f.nlos[l].elevation);
      CHECK(out.nlos[l].azimuth == f.nlos[l].azimuth);
    }
  }
  SUBCASE("zero correlation is pure innovation with variance sigma^2") {
    f.rho_gain = 0.0;
    Rng rng(11);
    double acc = 0.0;
    const int n = 20000;
    FadingState cur = f;
    for (int i = 0; i < n; ++i) {
      cur = ar_step(cur, rng);
      acc += std::norm(cur.nlos[0].gain);
    }
    CHECK(acc / n == doctest::Approx(f.sigma_gain2).epsilon(0.05));
  }
  SUBCASE("stationary gain variance at rho 0.9") {
    f.rho_gain = 0.9;
    Rng rng(13);
    double acc = 0.0;
    const int n = 100000;
    FadingState cur = f;
    for (int i = 0; i < n; ++i) {
      cur = ar_step(cur, rng);
      acc += std::norm(cur.nlos[1].gain);
    }
    CHECK(acc / n == doctest::Approx(f.sigma_gain2).epsilon(0.05));
  }
}

TEST_CASE("frozen dynamics are a fixed point of advance_scene") {
  Rng scene_rng(17);
  Scene sc = tiny_scene(scene_rng);
  MobilityParams mob;
  mob.accel_bound = 0.0;
  Rng init_rng(19);
  DynamicScene ds = init_dynamic_scene(sc, 0.1, 0.0, mob, init_rng);  // doppler 0 -> rho_g = 1
  ds.rho_angle = 1.0;
  for (auto& k : ds.kinematics) k.velocity = Vec3::Zero();
  for (auto& fd : ds.fading) fd.rho_angle = 1.0;

  SpaceSpec space;
  space.grid_rows = 2;
  space.grid_cols = 2;
  space.n_tx = 1;
  space.n_rx = 1;
  space.n_users = 1;
  space.n_orientations = 2;
  space.n_beams = 2;
  Configuration cfg{{{0, 0}}, {{1, 1}}, 0, {1}};
  Rng eval_rng(1);
  const Evaluation before = evaluate(cfg, ds.scene, space, 0.0, eval_rng);
  Rng rng(23);
  DynamicScene next = ds;
  for (int t = 0; t < 5; ++t) next = advance_scene(next, rng);
  const Evaluation after = evaluate(cfg, next.scene, space, 0.0, eval_rng);
  CHECK(before.objective.rc == doctest::Approx(after.objective.rc).epsilon(1e-12));
  CHECK(before.objective.rs == doctest::Approx(after.objective.rs).epsilon(1e-12));
}

TEST_CASE("seeded trajectories replay bit-identically and seeds decorrelate") {
  Rng scene_rng(29);
  Scene sc = tiny_scene(scene_rng);
  MobilityParams mob;
  Rng ia(31), ib(31);
  DynamicScene a = init_dynamic_scene(sc, 0.1, 2.0, mob, ia);
  DynamicScene b = init_dynamic_scene(sc, 0.1, 2.0, mob, ib);
  Rng ra(37), rb(37);
  for (int t = 0; t < 10; ++t) {
    a = advance_scene(a, ra);
    b = advance_scene(b, rb);
  }
  CHECK((a.scene.users[0].position - b.scene.users[0].position).norm() == 0.0);
  CHECK(a.scene.users[0].paths[1].gain == b.scene.users[0].paths[1].gain);
  CHECK(a.scene.targets[0].reflection == b.scene.targets[0].reflection);

  // different seeds: correlation of gain streams stays small
  Rng ic(41);
  DynamicScene c = init_dynamic_scene(sc, 0.1, 2.0, mob, ic);
  Rng rc(43);
  double sum_ab = 0.0, sum_a2 = 0.0, sum_c2 = 0.0;
  DynamicScene ta = a, tc = c;
  for (int t = 0; t < 10000; ++t) {
    ta = advance_scene(ta, ra);
    tc = advance_scene(tc, rc);
    const double ga = ta.scene.users[0].paths[1].gain.real();
    const double gc = tc.scene.users[0].paths[1].gain.real();
    sum_ab += ga * gc;
    sum_a2 += ga * ga;
    sum_c2 += gc * gc;
  }
  CHECK(std::abs(sum_ab / std::sqrt(sum_a2 * sum_c2)) < 0.1);
}

TEST_CASE("moving scenes shift the per-slot exhaustive optimum") {
  Rng scene_rng(47);
  Scene sc = tiny_scene(scene_rng);
  SpaceSpec space;
  space.grid_rows = 2;
  space.grid_cols = 2;
  space.n_tx = 1;
  space.n_rx = 1;
  space.n_users = 1;
  space.n_orientations = 1;
  space.n_beams = 2;

  MobilityParams mob;
  mob.v_max_user = 12.0;
  mob.v_max_target = 9.0;
  Rng init_rng(53);
  DynamicScene ds = init_dynamic_scene(sc, 0.5, 0.5, mob, init_rng);
  Rng rng(59);

  std::vector<double> hv_per_slot;
  for (int t = 0; t < 4; ++t) {
    std::vector<oracles::Point2> image;
    ConfigEnumerator en(space, 1000);
    while (auto cfg = en.next()) {
      Rng r(1);
      const Evaluation ev = evaluate(*cfg, ds.scene, space, 0.0, r);
      image.push_back({ev.objective.rc, ev.objective.rs});
    }
    hv_per_slot.push_back(oracles::hv_rect_union(image, {0.0, 0.0}));
    ds = advance_scene(ds, rng);
  }
  bool all_equal = true;
  for (std::size_t t = 1; t < hv_per_slot.size(); ++t)
    all_equal = all_equal && hv_per_slot[t] == doctest::Approx(hv_per_slot[0]).epsilon(1e-9);
  CHECK_FALSE(all_equal);
}
