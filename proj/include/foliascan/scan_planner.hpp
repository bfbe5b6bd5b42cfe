#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "foliascan/foliation.hpp"

namespace foliascan::planning {

struct Knot {
  double t = 0.0;  // s
  TaskCoords x;
};

struct Interval {
  double begin = 0.0;
  double end = 0.0;

  bool contains(double t) const { return t >= begin && t <= end; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Piecewise-linear trajectory in task coordinates with strictly increasing
/// knot times. `leaf_switches` lists the d-ramp intervals between leaves.
struct Trajectory {
  std::vector<Knot> knots;
  std::vector<Interval> leaf_switches;

  double start_time() const { return knots.empty() ? 0.0 : knots.front().t; }
  double end_time() const { return knots.empty() ? 0.0 : knots.back().t; }

  /// Throws InvalidInput for non-increasing times, OutsideDomain for (u, v)
  /// outside the unit disk, BeyondReach for |d| >= reach.
  void validate(double reach) const;
};

struct UvRect {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;
};

/// Serpentine rows of constant v spaced by `spacing`, traversed at constant
/// parametric speed on the leaf d. Throws OutsideDomain when a corner leaves
/// the unit disk.
Trajectory raster_scan(const UvRect& rect, double spacing, double speed, double d);

/// Repeats the (u, v) path of `base` once per level in `d_levels`, joined by
/// linear ramps of `dwell` seconds that return to the path start while moving
/// d to the next level. Throws BeyondReach or EmptyTrajectory.
Trajectory leaf_switch_trajectory(const Trajectory& base, std::span<const double> d_levels, double dwell, double reach);

struct Setpoint {
  TaskCoords x;
  Vec3 rate = Vec3::Zero();  // (du/dt, dv/dt, dd/dt)
};

/// Linear interpolation with the forward segment slope as rate; clamped with
/// zero rate before the first and from the last knot on. Throws EmptyTrajectory.
Setpoint sample_setpoint(const Trajectory& trajectory, double t);

/// sign(d_des(t)) in {-1, 0, +1}.
int sign_of_leaf(const Trajectory& trajectory, double t);

/// CSV `t,u,v,d`. The reader marks segments along which d changes as leaf switches.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
Trajectory read_trajectory_csv(std::istream& in);

}  // namespace foliascan::planning
