#include "foliascan/foliation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "foliascan/error.hpp"

namespace foliascan {

namespace {

constexpr double kBaryTolerance = 1e-9;

int grid_cell(double x, int n) {
  const int c = static_cast<int>(std::floor((x + 1.0) * 0.5 * n));
  return std::clamp(c, 0, n - 1);
}

Vec2 closest_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return a + t * ab;
}

std::string describe(const Vec2& uv) {
  return "(" + std::to_string(uv.x()) + ", " + std::to_string(uv.y()) + ")";
}

}  // namespace

// Surface quantities at a parametric point, with first derivatives in (u, v).
struct Foliation::Lift {
  Vec3 point;
  Vec3 normal;
  Eigen::Matrix<double, 3, 2> dpoint;
  Eigen::Matrix<double, 3, 2> dnormal;
};

Foliation::Data::Data(TriangleMesh m, DiskParam p, FoliationOptions o)
    : mesh(std::move(m)), param(std::move(p)), options(o), index(mesh) {}

Foliation::Foliation(TriangleMesh mesh, DiskParam param, FoliationOptions options) {
  if (param.uv.size() != mesh.vertex_count()) {
    throw Error(ErrorCode::InvalidInput, "parametrization does not match the mesh");
  }
  auto data = std::make_shared<Data>(std::move(mesh), std::move(param), options);
  data->kappa_max = max_discrete_curvature(data->mesh);
  if (options.reach) {
    if (!(*options.reach > 0.0)) throw Error(ErrorCode::InvalidInput, "foliation reach must be positive");
    data->reach = *options.reach;
  } else {
    data->reach = data->kappa_max > 0.0 ? 0.5 / data->kappa_max : std::numeric_limits<double>::infinity();
  }

  const int nf = static_cast<int>(data->mesh.face_count());
  data->grid_n = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(nf))));
  const int n = data->grid_n;
  data->cells.assign(static_cast<std::size_t>(n * n), {});
  for (int f = 0; f < nf; ++f) {
    Eigen::AlignedBox2d box;
    for (int v : data->mesh.face(f)) box.extend(data->param.uv[static_cast<std::size_t>(v)]);
    const int x0 = grid_cell(box.min().x() - kBaryTolerance, n);
    const int x1 = grid_cell(box.max().x() + kBaryTolerance, n);
    const int y0 = grid_cell(box.min().y() - kBaryTolerance, n);
    const int y1 = grid_cell(box.max().y() + kBaryTolerance, n);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) data->cells[static_cast<std::size_t>(y * n + x)].push_back(f);
    }
  }
  data_ = std::move(data);
}

std::optional<UvLocation> Foliation::locate(const Vec2& uv) const {
  if (!uv.allFinite() || std::abs(uv.x()) > 1.0 + kBaryTolerance || std::abs(uv.y()) > 1.0 + kBaryTolerance) {
    return std::nullopt;
  }
  const int n = data_->grid_n;
  const auto& cell = data_->cells[static_cast<std::size_t>(grid_cell(uv.y(), n) * n + grid_cell(uv.x(), n))];
  UvLocation best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (int f : cell) {
    const Face& t = data_->mesh.face(f);
    const Vec2& a = data_->param.uv[static_cast<std::size_t>(t[0])];
    const Vec2& b = data_->param.uv[static_cast<std::size_t>(t[1])];
    const Vec2& c = data_->param.uv[static_cast<std::size_t>(t[2])];
    Eigen::Matrix2d edges;
    edges << b - a, c - a;
    const Vec2 local = edges.inverse() * (uv - a);
    const Vec3 bary(1.0 - local.x() - local.y(), local.x(), local.y());
    const double worst = bary.minCoeff();
    if (worst > best_min) {
      best_min = worst;
      best.face = f;
      best.barycentric = bary;
    }
  }
  if (best.face < 0 || best_min < -kBaryTolerance) return std::nullopt;
  best.barycentric = best.barycentric.cwiseMax(0.0);
  best.barycentric /= best.barycentric.sum();
  return best;
}

Foliation::Lift Foliation::lift(const UvLocation& loc) const {
  const Face& t = data_->mesh.face(loc.face);
  const Vec2& a = data_->param.uv[static_cast<std::size_t>(t[0])];
  const Vec2& b = data_->param.uv[static_cast<std::size_t>(t[1])];
  const Vec2& c = data_->param.uv[static_cast<std::size_t>(t[2])];
  Eigen::Matrix2d edges;
  edges << b - a, c - a;
  const Eigen::Matrix2d inv = edges.inverse();
  // Rows: gradients of the barycentric weights with respect to (u, v).
  Eigen::Matrix<double, 3, 2> grad;
  grad.row(1) = inv.row(0);
  grad.row(2) = inv.row(1);
  grad.row(0) = -(inv.row(0) + inv.row(1));

  Eigen::Matrix3d positions;
  Eigen::Matrix3d normals;
  for (int k = 0; k < 3; ++k) {
    positions.col(k) = data_->mesh.vertex(t[static_cast<std::size_t>(k)]);
    normals.col(k) = data_->mesh.normal(t[static_cast<std::size_t>(k)]);
  }

  Lift out;
  out.point = positions * loc.barycentric;
  out.dpoint = positions * grad;
  const Vec3 blended = normals * loc.barycentric;
  const double len = blended.norm();
  out.normal = blended / len;
  const Eigen::Matrix3d tangent_projector = Eigen::Matrix3d::Identity() - out.normal * out.normal.transpose();
  out.dnormal = tangent_projector * (normals * grad) / len;
  return out;
}

Foliation::Lift Foliation::lift_or_throw(const Vec2& uv) const {
  const auto loc = locate(uv);
  if (!loc) throw Error(ErrorCode::OutsideDomain, "uv " + describe(uv) + " is outside the parametrized domain");
  return lift(*loc);
}

SurfaceFrame Foliation::surface_frame(double u, double v) const {
  const Lift s = lift_or_throw({u, v});
  SurfaceFrame frame;
  frame.origin = s.point;
  frame.n_hat = s.normal;
  Vec3 tu = s.dpoint.col(0) - s.normal.dot(s.dpoint.col(0)) * s.normal;
  if (tu.norm() < 1e-14) {
    // du direction parallel to the normal cannot happen on a valid mesh; fall back to dv.
    tu = s.dpoint.col(1).cross(s.normal);
  }
  frame.t_u = tu.normalized();
  frame.t_v = frame.n_hat.cross(frame.t_u);
  return frame;
}

Vec3 Foliation::embed(const TaskCoords& x) const {
  if (!(std::abs(x.d) < data_->reach)) {
    throw Error(ErrorCode::BeyondReach, "|d| = " + std::to_string(std::abs(x.d)) + " m exceeds reach " +
                                            std::to_string(data_->reach) + " m");
  }
  const Lift s = lift_or_throw(x.uv());
  return s.point + x.d * s.normal;
}

Eigen::Matrix3d Foliation::embed_jacobian(const TaskCoords& x) const {
  const Lift s = lift_or_throw(x.uv());
  Eigen::Matrix3d jac;
  jac.leftCols<2>() = s.dpoint + x.d * s.dnormal;
  jac.col(2) = s.normal;
  return jac;
}

Vec2 Foliation::project_to_domain(const Vec2& uv) const {
  if (locate(uv)) return uv;
  const auto& loop = data_->param.boundary_loop;
  Vec2 best = uv;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < loop.size(); ++k) {
    const Vec2& a = data_->param.uv[static_cast<std::size_t>(loop[k])];
    const Vec2& b = data_->param.uv[static_cast<std::size_t>(loop[(k + 1) % loop.size()])];
    const Vec2 q = closest_on_segment(uv, a, b);
    const double sq = (q - uv).squaredNorm();
    if (sq < best_sq) {
      best_sq = sq;
      best = q;
    }
  }
  return best;
}

TaskCoords Foliation::task_coords(const Vec3& p) const {
  const ClosestPoint cp = data_->index.query(p);
  if (cp.distance >= data_->reach) {
    throw Error(ErrorCode::BeyondReach, "point is " + std::to_string(cp.distance) + " m from the surface");
  }
  const Face& t = data_->mesh.face(cp.face);
  Vec2 uv = Vec2::Zero();
  Vec3 blended = Vec3::Zero();
  for (int k = 0; k < 3; ++k) {
    uv += cp.barycentric[k] * data_->param.uv[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])];
    blended += cp.barycentric[k] * data_->mesh.normal(t[static_cast<std::size_t>(k)]);
  }
  const double d0 = (p - cp.foot).dot(blended.normalized());
  return newton(p, {uv.x(), uv.y(), d0});
}

TaskCoords Foliation::task_coords(const Vec3& p, const TaskCoords& hint) const {
  if (!locate(hint.uv()) || !std::isfinite(hint.d)) return task_coords(p);
  try {
    return newton(p, hint);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoConvergence) throw;
    return task_coords(p);
  }
}

TaskCoords Foliation::newton(const Vec3& p, TaskCoords x) const {
  const auto& opt = data_->options;
  auto residual_at = [&](const TaskCoords& c, Lift& s) {
    s = lift_or_throw(c.uv());
    return Vec3(s.point + c.d * s.normal - p);
  };

  Lift s;
  Vec3 r = residual_at(x, s);
  double r_norm = r.norm();
  bool pinned = false;  // last accepted iterate was clamped onto the domain boundary
  for (int iter = 0; iter < opt.max_iterations && r_norm > opt.tolerance; ++iter) {
    Eigen::Matrix3d jac;
    jac.leftCols<2>() = s.dpoint + x.d * s.dnormal;
    jac.col(2) = s.normal;
    const Vec3 step = jac.partialPivLu().solve(-r);
    if (!step.allFinite()) break;

    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      const Vec2 raw(x.u + scale * step.x(), x.v + scale * step.y());
      const Vec2 uv = project_to_domain(raw);
      TaskCoords trial{uv.x(), uv.y(), x.d + scale * step.z()};
      Lift st;
      const Vec3 rt = residual_at(trial, st);
      const double rt_norm = rt.norm();
      if (rt_norm < r_norm) {
        pinned = (uv - raw).squaredNorm() > 0.0;
        x = trial;
        s = st;
        r = rt;
        r_norm = rt_norm;
        accepted = true;
        break;
      }
      scale *= opt.damping;
    }
    if (!accepted) break;
  }

  if (!(r_norm <= opt.acceptable_residual)) {
    if (pinned) throw Error(ErrorCode::BeyondReach, "point lies beyond the lateral extent of the surface patch");
    throw Error(ErrorCode::NoConvergence, "Newton residual " + std::to_string(r_norm) + " m");
  }
  if (!(std::abs(x.d) < data_->reach)) {
    throw Error(ErrorCode::BeyondReach, "|d| = " + std::to_string(std::abs(x.d)) + " m exceeds reach " +
                                            std::to_string(data_->reach) + " m");
  }
  return x;
}

}  // namespace foliascan
