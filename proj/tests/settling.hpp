#pragma once

// Closed-loop settling of the probe against penalty tissue on a flat patch,
// shared by the unit tests and the acceptance run.

#include <cmath>

#include "foliascan/foliation.hpp"
#include "foliascan/impedance.hpp"
#include "foliascan/mesh_shapes.hpp"
#include "foliascan/parametrization.hpp"

namespace settling {

struct Outcome {
  double d = 0.0;        // steady-state offset, m
  double force_n = 0.0;  // contact force along n_hat, N
};

inline Outcome settle(double K_d, double k_t, double d_des, double seconds = 3.0) {
  using namespace foliascan;
  auto mesh = shapes::flat_grid(8, 8, 0.2, 0.2);
  auto param = parametrize_disk(mesh);
  FoliationOptions options;
  options.reach = 0.1;
  const Foliation fol(std::move(mesh), std::move(param), options);

  control::ProbeParams probe;
  control::ContactModel contact{k_t, 0.0};
  control::ImpedanceGains gains;
  gains.K_u = gains.K_v = 500.0;
  gains.D_u = gains.D_v = 2.0 * std::sqrt(500.0 * probe.mass);
  gains.K_d = K_d;
  gains.D_d = 2.0 * std::sqrt((K_d + k_t) * probe.mass);
  gains.K_rot = 1.0;
  gains.D_rot = 0.04;

  const TaskCoords setpoint{0.0, 0.0, d_des};
  control::ProbeState state;
  state.p = fol.embed({0.0, 0.0, 0.0});
  state.q = control::aligned_orientation(Vec3::UnitZ());
  const double dt = 1e-3;
  Outcome out;
  TaskCoords hint{0.0, 0.0, 0.0};
  for (int k = 0; k < static_cast<int>(seconds / dt); ++k) {
    const auto snap = control::evaluate_task(fol, state, setpoint, Vec3::Zero(), hint);
    hint = snap.probe;
    const Vec3 f_contact = control::contact_force(snap.probe.d, snap.frame.n_hat, state.v, contact);
    const control::Wrench applied = control::impedance_wrench(snap.error, snap.frame, state, gains);
    out = {snap.probe.d, f_contact.dot(snap.frame.n_hat)};
    state = control::step_dynamics(state, applied, control::Wrench{f_contact, Vec3::Zero()}, probe, dt);
  }
  return out;
}

inline double predicted_depth(double K_d, double k_t, double d_des) { return K_d * d_des / (K_d + k_t); }

}  // namespace settling
