#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "foliascan/error.hpp"
#include "foliascan/impedance.hpp"
#include "foliascan/mesh_shapes.hpp"
#include "foliascan/parametrization.hpp"
#include "oracles.hpp"
#include "settling.hpp"

using namespace foliascan;
using namespace foliascan::control;

namespace {

Foliation make(TriangleMesh mesh, double reach) {
  DiskParam param = parametrize_disk(mesh);
  FoliationOptions options;
  options.reach = reach;
  return Foliation(std::move(mesh), std::move(param), options);
}

const Foliation& sphere() {
  static const Foliation fol = make(shapes::sphere_cap(0.1, std::numbers::pi / 3, 16), 0.04);
  return fol;
}

const Foliation& flat() {
  static const Foliation fol = make(shapes::flat_grid(6, 6, 0.2, 0.2), 0.1);
  return fol;
}

SurfaceFrame random_frame(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const Eigen::Quaterniond q = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized();
  const Eigen::Matrix3d r = q.toRotationMatrix();
  return {Vec3::Zero(), r.col(2), r.col(0), r.col(1)};
}

}  // namespace

TEST_CASE("task error examples") {
  SUBCASE("probe at the setpoint") {
    const TaskCoords x{0.1, -0.2, 0.01};
    ProbeState s;
    s.p = sphere().embed(x);
    const auto e = task_error(sphere(), s, x);
    CHECK(e.vec().norm() < 1e-9);
    CHECK(e.rate.norm() == 0.0);
  }
  SUBCASE("flat surface, setpoint 0.05 above the probe") {
    ProbeState s;
    s.p = flat().embed({0.2, 0.1, 0.0});
    const auto e = task_error(flat(), s, {0.2, 0.1, 0.05});
    CHECK(e.e_d == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(std::abs(e.e_u) < 1e-12);
    CHECK(std::abs(e.e_v) < 1e-12);
  }
  SUBCASE("rates are the negated probe velocity for a static setpoint") {
    ProbeState s;
    s.p = flat().embed({0.0, 0.0, 0.0});
    s.v = Vec3(0.1, -0.2, 0.3);
    const auto snap = evaluate_task(flat(), s, {0.0, 0.0, 0.0});
    CHECK((snap.frame.reassemble(snap.error.rate) + s.v).norm() < 1e-12);
  }
}

TEST_CASE("error decomposition reassembles the Cartesian error") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    const TaskCoords probe{0.6 * unit(rng), 0.6 * unit(rng), 0.03 * unit(rng)};
    const TaskCoords setpoint{0.6 * unit(rng), 0.6 * unit(rng), 0.03 * unit(rng)};
    ProbeState s;
    s.p = sphere().embed(probe);
    const auto snap = evaluate_task(sphere(), s, setpoint);
    const Vec3 cartesian = sphere().embed(setpoint) - s.p;
    CHECK((snap.frame.reassemble(snap.error.vec()) - cartesian).norm() <= 1e-9);
  }
}

TEST_CASE("impedance wrench") {
  ImpedanceGains gains;
  SUBCASE("equilibrium gives zero wrench") {
    gains = {1000, 1000, 1000, 10, 10, 10, 1, 0.1};
    const SurfaceFrame frame;
    ProbeState s;
    s.q = aligned_orientation(frame.n_hat);
    const auto w = impedance_wrench(TaskError{}, frame, s, gains);
    CHECK(w.force.norm() == 0.0);
    CHECK(w.torque.norm() < 1e-15);
  }
  SUBCASE("K_d = 500, e_d = 0.01 gives 5 N along the normal") {
    gains.K_d = 500;
    TaskError e;
    e.e_d = 0.01;
    ProbeState s;
    s.q = aligned_orientation(Vec3::UnitZ());
    const auto w = impedance_wrench(e, SurfaceFrame{}, s, gains);
    CHECK((w.force - Vec3(0, 0, 5)).norm() < 1e-12);
  }
  SUBCASE("zero tangential gains transmit no tangential force") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    gains = {0, 0, 800, 0, 0, 40, 1, 0.1};
    for (int k = 0; k < 200; ++k) {
      const SurfaceFrame frame = random_frame(rng);
      TaskError e;
      e.e_u = unit(rng);
      e.e_v = unit(rng);
      e.e_d = 0.01 * unit(rng);
      e.rate = Vec3(unit(rng), unit(rng), unit(rng));
      ProbeState s;
      const auto w = impedance_wrench(e, frame, s, gains);
      const Vec3 c = frame.decompose(w.force);
      CHECK(std::abs(c.x()) <= 1e-12 * w.force.norm());
      CHECK(std::abs(c.y()) <= 1e-12 * w.force.norm());
    }
    // Axis-aligned frame: exactly zero.
    TaskError e;
    e.e_u = 0.3;
    e.e_v = -0.2;
    const auto w = impedance_wrench(e, SurfaceFrame{}, ProbeState{}, gains);
    CHECK(w.force.x() == 0.0);
    CHECK(w.force.y() == 0.0);
  }
  SUBCASE("rotational spring turns the axis toward -n_hat") {
    gains.K_rot = 2.0;
    ProbeState s;  // axis +z
    SurfaceFrame frame;
    frame.n_hat = Vec3::UnitX();
    frame.t_u = Vec3::UnitY();
    frame.t_v = Vec3::UnitZ();
    const auto w = impedance_wrench(TaskError{}, frame, s, gains);
    // Rotating +z about the torque direction must move it toward -x.
    CHECK(w.torque.cross(Vec3::UnitZ()).x() < 0.0);
  }
}

TEST_CASE("contact force") {
  const ContactModel tissue{500.0, 0.0};
  CHECK(contact_force(0.01, Vec3::UnitZ(), Vec3::Zero(), tissue).norm() == 0.0);
  CHECK((contact_force(-0.02, Vec3::UnitZ(), Vec3::Zero(), tissue) - Vec3(0, 0, 10)).norm() < 1e-12);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const ContactModel damped{800.0, 50.0};
  for (int k = 0; k < 1000; ++k) {
    const Vec3 n = Vec3(unit(rng), unit(rng), unit(rng)).normalized();
    const Vec3 f = contact_force(0.05 * unit(rng), n, Vec3(unit(rng), unit(rng), unit(rng)), damped);
    CHECK(f.dot(n) >= 0.0);
    CHECK((f - f.dot(n) * n).norm() <= 1e-12);
  }

  SUBCASE("located on the foliation") {
    ProbeState s;
    s.p = flat().embed({0.1, 0.1, -0.02});
    CHECK((contact_force(flat(), s, tissue) - Vec3(0, 0, 10)).norm() < 1e-9);
    s.p = flat().embed({0.1, 0.1, 0.02});
    CHECK(contact_force(flat(), s, tissue).norm() == 0.0);
  }
}

TEST_CASE("settling against tissue matches the static force balance") {
  const auto out = settling::settle(1000.0, 500.0, -0.05);
  CHECK(out.d == doctest::Approx(-0.0333).epsilon(0.002));
  CHECK(std::abs(out.d - settling::predicted_depth(1000.0, 500.0, -0.05)) <= 0.01 * 0.05 * 1000.0 / 1500.0);
  CHECK(out.force_n == doctest::Approx(16.7).epsilon(0.003));
}

TEST_CASE("free motion") {
  ProbeState s;
  s.v = Vec3(0.1, 0.2, -0.3);
  s.w = Vec3(0.0, 0.0, 0.5);
  const ProbeParams params;
  ProbeState next = s;
  for (int k = 0; k < 100; ++k) next = step_dynamics(next, {}, {}, params, 1e-3);
  CHECK((next.v - s.v).norm() == 0.0);
  CHECK((next.w - s.w).norm() < 1e-15);  // symmetric about z: no gyroscopic term
  CHECK((next.p - 0.1 * s.v).norm() < 1e-12);
}

TEST_CASE("critically damped oscillator follows the closed form") {
  ProbeParams params;
  params.mass = 1.0;
  const double K = 100.0, D = 20.0, x0 = 0.01, dt = 1e-4;
  ProbeState s;
  s.p = Vec3(x0, 0, 0);
  double worst = 0.0;
  for (int k = 1; k <= 20000; ++k) {
    const Wrench spring{Vec3(-K * s.p.x() - D * s.v.x(), 0, 0), Vec3::Zero()};
    s = step_dynamics(s, spring, {}, params, dt);
    worst = std::max(worst, std::abs(s.p.x() - oracle::critically_damped(x0, 0.0, 10.0, k * dt)));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("quaternion stays normalised over a million steps") {
  ProbeParams params;
  ProbeState s;
  s.w = Vec3(3.0, -1.0, 7.0);
  double worst = 0.0;
  for (int k = 0; k < 1000000; ++k) {
    s = step_dynamics(s, {}, {}, params, 1e-3);
    worst = std::max(worst, std::abs(s.q.norm() - 1.0));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("step_dynamics rejects bad steps and non-finite states") {
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidInput;
  };
  const ProbeParams params;
  CHECK_THROWS_AS(step_dynamics({}, {}, {}, params, 0.0), Error);
  CHECK_THROWS_AS(step_dynamics({}, {}, {}, params, 0.02), Error);
  const Wrench bad{Vec3(std::numeric_limits<double>::infinity(), 0, 0), Vec3::Zero()};
  CHECK(code([&] { step_dynamics({}, bad, {}, params, 1e-3); }) == ErrorCode::NonFiniteState);
}

TEST_CASE("storage function") {
  const ImpedanceGains gains{1000, 1000, 1000, 10, 10, 10, 1, 0.1};
  const ContactModel tissue{500.0, 0.0};
  ProbeParams params;
  ProbeState s;
  s.q = aligned_orientation(Vec3::UnitZ());
  CHECK(storage_function(s, TaskError{}, gains, tissue, 0.0, Vec3::UnitZ(), params) == doctest::Approx(0.0));

  params.mass = 2.0;
  s.v = Vec3(0.6, 0.0, 0.8);
  CHECK(storage_function(s, TaskError{}, gains, tissue, 0.0, Vec3::UnitZ(), params) == doctest::Approx(1.0));

  s.v.setZero();
  TaskError e;
  e.e_d = 0.1;
  // Spring 5 J plus tissue 0.5 * 500 * 0.01^2.
  CHECK(storage_function(s, e, gains, tissue, -0.01, Vec3::UnitZ(), params) == doctest::Approx(5.0 + 0.025));
}

TEST_CASE("storage does not grow under a fixed setpoint without external input") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const ImpedanceGains gains{2000, 2000, 5000, 49, 49, 77.5, 1, 0.04};
  const ContactModel tissue{20.0, 2.0};
  const ProbeParams params;
  const double dt = 1e-3;
  for (int trial = 0; trial < 5; ++trial) {
    const TaskCoords setpoint{0.3 * unit(rng), 0.3 * unit(rng), 0.01 * unit(rng)};
    ProbeState s;
    s.p = sphere().embed({setpoint.u + 0.05 * unit(rng), setpoint.v + 0.05 * unit(rng), setpoint.d + 0.01 * unit(rng)});
    s.v = 0.05 * Vec3(unit(rng), unit(rng), unit(rng));
    s.q = aligned_orientation(Vec3(0.2 * unit(rng), 0.2 * unit(rng), 1.0).normalized());
    PassivityMonitor monitor(max_natural_frequency(gains, tissue, params));
    double previous = -1.0;
    for (int k = 0; k < 2000; ++k) {
      const auto snap = evaluate_task(sphere(), s, setpoint);
      const Vec3 f_contact = contact_force(snap.probe.d, snap.frame.n_hat, s.v, tissue);
      const double V = storage_function(s, snap.error, gains, tissue, snap.probe.d, snap.frame.n_hat, params);
      if (previous >= 0.0) monitor.check(previous, V, 0.0, dt);
      previous = V;
      s = step_dynamics(s, impedance_wrench(snap.error, snap.frame, s, gains), {f_contact, Vec3::Zero()}, params, dt);
    }
    CHECK(monitor.checks() == 1999);
    CHECK(monitor.violations() == 0);
  }
}

TEST_CASE("passivity monitor counts and locates violations") {
  PassivityMonitor m(10.0);
  CHECK(m.check(1.0, 0.9, 0.0, 1e-3));
  CHECK(m.check(1.0, 1.005, 0.0, 1e-3));  // within the 1e-2 slack
  CHECK_FALSE(m.check(1.0, 1.5, 0.0, 1e-3));
  CHECK(m.check(1.0, 1.5, 0.6, 1e-3));    // paid for by the supply
  CHECK(m.violations() == 1);
  CHECK(m.checks() == 4);
  REQUIRE(m.first_violation().has_value());
  CHECK(*m.first_violation() == 2);
}
