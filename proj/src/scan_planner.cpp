#include "foliascan/scan_planner.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "foliascan/error.hpp"

namespace foliascan::planning {

void Trajectory::validate(double reach) const {
  for (std::size_t k = 0; k < knots.size(); ++k) {
    const Knot& kn = knots[k];
    if (!std::isfinite(kn.t) || (k > 0 && !(kn.t > knots[k - 1].t))) {
      throw Error(ErrorCode::InvalidInput, "knot times must be finite and strictly increasing");
    }
    if (!(kn.x.uv().norm() <= 1.0)) throw Error(ErrorCode::OutsideDomain, "knot " + std::to_string(k) + " leaves the unit disk");
    if (!(std::abs(kn.x.d) < reach)) throw Error(ErrorCode::BeyondReach, "knot " + std::to_string(k) + " exceeds the foliation reach");
  }
}

Trajectory raster_scan(const UvRect& rect, double spacing, double speed, double d) {
  if (!(spacing > 0.0) || !(speed > 0.0)) throw Error(ErrorCode::InvalidInput, "spacing and speed must be positive");
  if (!(rect.u_max >= rect.u_min) || !(rect.v_max >= rect.v_min)) throw Error(ErrorCode::InvalidInput, "empty rectangle");
  for (double u : {rect.u_min, rect.u_max}) {
    for (double v : {rect.v_min, rect.v_max}) {
      if (!(std::hypot(u, v) <= 1.0)) throw Error(ErrorCode::OutsideDomain, "scan rectangle leaves the unit disk");
    }
  }

  std::vector<Vec2> path;
  const int rows = static_cast<int>(std::floor((rect.v_max - rect.v_min) / spacing + 1e-9)) + 1;
  for (int r = 0; r < rows; ++r) {
    const double v = rect.v_min + r * spacing;
    const bool forward = r % 2 == 0;
    path.emplace_back(forward ? rect.u_min : rect.u_max, v);
    path.emplace_back(forward ? rect.u_max : rect.u_min, v);
  }

  Trajectory out;
  double t = 0.0;
  for (const Vec2& p : path) {
    if (!out.knots.empty()) {
      const double len = (p - out.knots.back().x.uv()).norm();
      if (len <= 0.0) continue;
      t += len / speed;
    }
    out.knots.push_back({t, {p.x(), p.y(), d}});
  }
  return out;
}

Trajectory leaf_switch_trajectory(const Trajectory& base, std::span<const double> d_levels, double dwell, double reach) {
  if (base.knots.empty() || d_levels.empty()) throw Error(ErrorCode::EmptyTrajectory, "leaf switching needs a path and levels");
  if (!(dwell > 0.0)) throw Error(ErrorCode::InvalidInput, "ramp duration must be positive");
  for (double d : d_levels) {
    if (!(std::abs(d) < reach)) throw Error(ErrorCode::BeyondReach, "leaf level " + std::to_string(d) + " m exceeds reach");
  }
  Trajectory out;
  const double t0 = base.knots.front().t;
  double offset = 0.0;
  for (std::size_t level = 0; level < d_levels.size(); ++level) {
    if (level > 0) {
      const double ramp_start = out.knots.back().t;
      offset = ramp_start + dwell;
      out.leaf_switches.push_back({ramp_start, offset});
    }
    for (const Knot& k : base.knots) {
      out.knots.push_back({offset + (k.t - t0), {k.x.u, k.x.v, d_levels[level]}});
    }
  }
  return out;
}

Setpoint sample_setpoint(const Trajectory& trajectory, double t) {
  const auto& knots = trajectory.knots;
  if (knots.empty()) throw Error(ErrorCode::EmptyTrajectory, "cannot sample an empty trajectory");
  if (t < knots.front().t) return {knots.front().x, Vec3::Zero()};
  if (t >= knots.back().t) return {knots.back().x, Vec3::Zero()};
  // First knot strictly after t; the segment starts one before it.
  const auto next = std::upper_bound(knots.begin(), knots.end(), t, [](double value, const Knot& k) { return value < k.t; });
  const Knot& a = *(next - 1);
  const Knot& b = *next;
  const double span = b.t - a.t;
  const Vec3 xa(a.x.u, a.x.v, a.x.d);
  const Vec3 slope = (Vec3(b.x.u, b.x.v, b.x.d) - xa) / span;
  const Vec3 x = xa + (t - a.t) * slope;
  return {{x.x(), x.y(), x.z()}, slope};
}

int sign_of_leaf(const Trajectory& trajectory, double t) {
  const double d = sample_setpoint(trajectory, t).x.d;
  if (std::abs(d) < 1e-12) return 0;
  return d > 0.0 ? 1 : -1;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t,u,v,d\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Knot& k : trajectory.knots) out << k.t << ',' << k.x.u << ',' << k.x.v << ',' << k.x.d << '\n';
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,u,v,d", 0) != 0) throw Error(ErrorCode::IoFailure, "missing trajectory CSV header");
  Trajectory out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Knot k;
    if (!(ls >> k.t >> k.x.u >> k.x.v >> k.x.d)) throw Error(ErrorCode::IoFailure, "malformed trajectory row: " + line);
    out.knots.push_back(k);
  }
  // Segments that change d are leaf switches.
  for (std::size_t k = 1; k < out.knots.size(); ++k) {
    if (out.knots[k].x.d != out.knots[k - 1].x.d) out.leaf_switches.push_back({out.knots[k - 1].t, out.knots[k].t});
  }
  return out;
}

}  // namespace foliascan::planning
