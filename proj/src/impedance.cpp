#include "foliascan/impedance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "foliascan/error.hpp"

namespace foliascan::control {

void ImpedanceGains::validate() const {
  for (double g : {K_u, K_v, K_d, D_u, D_v, D_d, K_rot, D_rot}) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw Error(ErrorCode::InvalidInput, "impedance gains must be finite and >= 0");
  }
}

void ContactModel::validate() const {
  if (!(k_t > 0.0) || !std::isfinite(k_t)) throw Error(ErrorCode::InvalidInput, "tissue stiffness k_t must be > 0");
  if (!(c_t >= 0.0) || !std::isfinite(c_t)) throw Error(ErrorCode::InvalidInput, "contact damping c_t must be >= 0");
}

void ProbeParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw Error(ErrorCode::InvalidInput, "probe mass must be > 0");
  if (!(inertia.minCoeff() > 0.0) || !inertia.allFinite()) {
    throw Error(ErrorCode::InvalidInput, "probe inertia components must be > 0");
  }
}

TaskSnapshot evaluate_task(const Foliation& foliation, const ProbeState& state, const TaskCoords& setpoint,
                           const Vec3& setpoint_rate, const std::optional<TaskCoords>& hint) {
  TaskSnapshot snap;
  snap.probe = hint ? foliation.task_coords(state.p, *hint) : foliation.task_coords(state.p);
  snap.frame = foliation.surface_frame(snap.probe.u, snap.probe.v);
  snap.target = foliation.embed(setpoint);
  snap.target_velocity = foliation.embed_jacobian(setpoint) * setpoint_rate;

  const Vec3 position_error = snap.frame.decompose(snap.target - state.p);
  snap.error.e_u = position_error.x();
  snap.error.e_v = position_error.y();
  snap.error.e_d = position_error.z();
  snap.error.rate = snap.frame.decompose(snap.target_velocity - state.v);
  snap.error.e_u_param = setpoint.u - snap.probe.u;
  snap.error.e_v_param = setpoint.v - snap.probe.v;
  return snap;
}

TaskError task_error(const Foliation& foliation, const ProbeState& state, const TaskCoords& setpoint,
                     const Vec3& setpoint_rate) {
  return evaluate_task(foliation, state, setpoint, setpoint_rate).error;
}

Wrench impedance_wrench(const TaskError& err, const SurfaceFrame& frame, const ProbeState& state,
                        const ImpedanceGains& gains) {
  Wrench out;
  const Vec3 spring(gains.K_u * err.e_u, gains.K_v * err.e_v, gains.K_d * err.e_d);
  const Vec3 damper(gains.D_u * err.rate.x(), gains.D_v * err.rate.y(), gains.D_d * err.rate.z());
  out.force = frame.reassemble(spring + damper);
  out.torque = gains.K_rot * state.axis().cross(-frame.n_hat) - gains.D_rot * state.w;
  return out;
}

Vec3 contact_force(double d, const Vec3& n_hat, const Vec3& velocity, const ContactModel& contact) {
  if (d >= 0.0) return Vec3::Zero();
  // Never adhesive: the damping term may not pull the probe into the tissue.
  const double normal = std::max(0.0, -contact.k_t * d - contact.c_t * velocity.dot(n_hat));
  return normal * n_hat;
}

Vec3 contact_force(const Foliation& foliation, const ProbeState& state, const ContactModel& contact) {
  const TaskCoords x = foliation.task_coords(state.p);
  const SurfaceFrame frame = foliation.surface_frame(x.u, x.v);
  return contact_force(x.d, frame.n_hat, state.v, contact);
}

ProbeState step_dynamics(const ProbeState& state, const Wrench& applied, const Wrench& external,
                         const ProbeParams& params, double dt) {
  if (!(dt > 0.0 && dt <= 0.01)) throw Error(ErrorCode::InvalidInput, "dt must lie in (0, 0.01] s");
  ProbeState next = state;
  next.v = state.v + dt * (applied.force + external.force) / params.mass;

  // Euler's equations in the body frame.
  const Eigen::Matrix3d rot = state.q.toRotationMatrix();
  const Vec3 w_body = rot.transpose() * state.w;
  const Vec3 tau_body = rot.transpose() * (applied.torque + external.torque);
  const Vec3 momentum = params.inertia.cwiseProduct(w_body);
  const Vec3 w_body_next = w_body + dt * (tau_body - w_body.cross(momentum)).cwiseQuotient(params.inertia);
  next.w = rot * w_body_next;

  next.p = state.p + dt * next.v;
  const double angle = dt * next.w.norm();
  if (angle > 0.0) {
    next.q = Eigen::Quaterniond(Eigen::AngleAxisd(angle, next.w.normalized())) * state.q;
  }
  next.q.normalize();

  if (!next.p.allFinite() || !next.v.allFinite() || !next.w.allFinite() || !next.q.coeffs().allFinite()) {
    throw Error(ErrorCode::NonFiniteState, "probe state became non-finite");
  }
  return next;
}

double storage_function(const ProbeState& state, const TaskError& err, const ImpedanceGains& gains,
                        const ContactModel& contact, double d, const Vec3& n_hat, const ProbeParams& params) {
  const Vec3 w_body = state.q.conjugate() * state.w;
  const double kinetic = 0.5 * params.mass * state.v.squaredNorm() + 0.5 * w_body.dot(params.inertia.cwiseProduct(w_body));
  const double spring = 0.5 * (gains.K_u * err.e_u * err.e_u + gains.K_v * err.e_v * err.e_v + gains.K_d * err.e_d * err.e_d);
  const double penetration = std::min(d, 0.0);
  const double tissue = 0.5 * contact.k_t * penetration * penetration;
  const double orientation = gains.K_rot * std::max(0.0, 1.0 - state.axis().dot(-n_hat));
  return kinetic + spring + tissue + orientation;
}

double max_natural_frequency(const ImpedanceGains& gains, const ContactModel& contact, const ProbeParams& params) {
  const double k_trans = std::max({gains.K_u, gains.K_v, gains.K_d + contact.k_t});
  const double omega_trans = std::sqrt(k_trans / params.mass);
  const double omega_rot = std::sqrt(gains.K_rot / params.inertia.minCoeff());
  return std::max(omega_trans, omega_rot);
}

bool PassivityMonitor::check(double v_prev, double v_next, double supplied, double dt) {
  const double slack = dt * omega_max_ * std::max(v_prev, v_next) + 1e-12;
  const double excess = (v_next - v_prev) - supplied - slack;
  if (checks_ == 0 || excess > worst_excess_) worst_excess_ = excess;
  ++checks_;
  if (excess > 0.0) {
    if (!first_violation_) first_violation_ = checks_ - 1;
    ++violations_;
    return false;
  }
  return true;
}

Eigen::Quaterniond aligned_orientation(const Vec3& n_hat) {
  return Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), -n_hat.normalized());
}

}  // namespace foliascan::control
