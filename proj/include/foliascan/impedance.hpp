#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Geometry>

#include "foliascan/foliation.hpp"

namespace foliascan::control {

/// Rigid ultrasound probe. Angular velocity is expressed in the world frame;
/// the probe axis is the body z axis.
struct ProbeState {
  Vec3 p = Vec3::Zero();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Vec3 v = Vec3::Zero();
  Vec3 w = Vec3::Zero();

  Vec3 axis() const { return q * Vec3::UnitZ(); }
};

/// Tangential and normal tracking errors in meters along (t_u, t_v, n_hat),
/// their rates, and the raw parametric (u, v) errors.
struct TaskError {
  double e_u = 0.0;
  double e_v = 0.0;
  double e_d = 0.0;
  Vec3 rate = Vec3::Zero();  // (de_u, de_v, de_d) in m/s
  double e_u_param = 0.0;    // dimensionless
  double e_v_param = 0.0;

  Vec3 vec() const { return {e_u, e_v, e_d}; }
};

struct ImpedanceGains {
  double K_u = 0.0, K_v = 0.0, K_d = 0.0;  // N/m
  double D_u = 0.0, D_v = 0.0, D_d = 0.0;  // N s/m
  double K_rot = 0.0;                      // N m/rad
  double D_rot = 0.0;                      // N m s/rad

  void validate() const;
};

struct ContactModel {
  double k_t = 500.0;  // N/m
  double c_t = 0.0;    // N s/m

  void validate() const;
};

struct ProbeParams {
  double mass = 0.3;                          // kg
  Vec3 inertia = Vec3(4e-4, 4e-4, 1e-4);      // body diagonal, kg m^2

  void validate() const;
};

struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
};

/// Everything the controller reads at one instant.
struct TaskSnapshot {
  TaskCoords probe;       // task coordinates of the probe position
  SurfaceFrame frame;     // leaf frame at the probe's (u, v)
  Vec3 target = Vec3::Zero();           // embed(setpoint)
  Vec3 target_velocity = Vec3::Zero();  // d/dt embed(setpoint)
  TaskError error;
};

/// Locates the probe in task coordinates and decomposes the Cartesian error
/// embed(setpoint) - p onto the probe's leaf frame. `setpoint_rate` is
/// (du/dt, dv/dt, dd/dt); `hint` warm-starts the inverse map. Throws BeyondReach.
TaskSnapshot evaluate_task(const Foliation& foliation, const ProbeState& state, const TaskCoords& setpoint,
                           const Vec3& setpoint_rate = Vec3::Zero(), const std::optional<TaskCoords>& hint = std::nullopt);

TaskError task_error(const Foliation& foliation, const ProbeState& state, const TaskCoords& setpoint,
                     const Vec3& setpoint_rate = Vec3::Zero());

/// Diagonal spring-damper in the leaf frame plus a rotational spring driving
/// the probe axis anti-parallel to the outward normal.
Wrench impedance_wrench(const TaskError& err, const SurfaceFrame& frame, const ProbeState& state,
                        const ImpedanceGains& gains);

/// Unilateral penalty contact at offset d with outward normal n_hat.
Vec3 contact_force(double d, const Vec3& n_hat, const Vec3& velocity, const ContactModel& contact);

/// Same, locating the probe on the foliation first. Throws BeyondReach.
Vec3 contact_force(const Foliation& foliation, const ProbeState& state, const ContactModel& contact);

/// Semi-implicit Euler step. Throws InvalidInput for dt outside (0, 0.01] and
/// NonFiniteState if the result is not finite.
ProbeState step_dynamics(const ProbeState& state, const Wrench& applied, const Wrench& external,
                         const ProbeParams& params, double dt);

/// Kinetic energy plus spring, contact and orientation potentials (J).
double storage_function(const ProbeState& state, const TaskError& err, const ImpedanceGains& gains,
                        const ContactModel& contact, double d, const Vec3& n_hat, const ProbeParams& params);

/// Highest natural frequency (rad/s) of the translational and rotational springs.
double max_natural_frequency(const ImpedanceGains& gains, const ContactModel& contact, const ProbeParams& params);

/// Checks V(k+1) - V(k) <= supplied energy + slack per step, where the slack
/// dt * omega_max * max(V(k), V(k+1)) bounds the semi-implicit Euler energy
/// oscillation.
class PassivityMonitor {
 public:
  explicit PassivityMonitor(double omega_max) : omega_max_(omega_max) {}

  bool check(double v_prev, double v_next, double supplied, double dt);

  std::size_t violations() const { return violations_; }
  std::size_t checks() const { return checks_; }
  double worst_excess() const { return worst_excess_; }
  /// Zero-based index of the first failed check.
  std::optional<std::size_t> first_violation() const { return first_violation_; }

 private:
  double omega_max_;
  std::size_t violations_ = 0;
  std::size_t checks_ = 0;
  double worst_excess_ = 0.0;
  std::optional<std::size_t> first_violation_;
};

/// Orientation whose body z axis points along -n_hat.
Eigen::Quaterniond aligned_orientation(const Vec3& n_hat);

}  // namespace foliascan::control
