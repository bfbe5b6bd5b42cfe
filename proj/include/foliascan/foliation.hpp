#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "foliascan/mesh.hpp"
#include "foliascan/parametrization.hpp"

namespace foliascan {

/// Task coordinates: (u, v) in the parametric disk, d the signed offset along
/// the interpolated normal in meters (positive outside the tissue).
struct TaskCoords {
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;

  Vec2 uv() const { return {u, v}; }
};

/// Orthonormal right-handed frame (t_u, t_v, n_hat) at a surface point.
struct SurfaceFrame {
  Vec3 origin = Vec3::Zero();
  Vec3 n_hat = Vec3::UnitZ();
  Vec3 t_u = Vec3::UnitX();
  Vec3 t_v = Vec3::UnitY();

  /// Coordinates of a Cartesian vector along (t_u, t_v, n_hat).
  Vec3 decompose(const Vec3& w) const { return {w.dot(t_u), w.dot(t_v), w.dot(n_hat)}; }
  Vec3 reassemble(const Vec3& c) const { return c.x() * t_u + c.y() * t_v + c.z() * n_hat; }
};

struct FoliationOptions {
  /// Maximum |d|; defaults to 0.5 / max discrete curvature.
  std::optional<double> reach;
  int max_iterations = 50;
  /// Step scale applied each time a Newton step increases the residual.
  double damping = 0.5;
  /// Newton stops once |p - embed(x)| drops below this (m).
  double tolerance = 1e-11;
  /// Largest residual (m) accepted when the iteration budget runs out.
  double acceptable_residual = 1e-8;
};

/// Location of a parametric point: containing face and barycentric weights.
struct UvLocation {
  int face = -1;
  Vec3 barycentric = Vec3::Zero();
};

/// The offset foliation of space around a parametrized surface mesh.
///
/// Maps task coordinates to Cartesian points by S(u, v) + d * n(u, v), with S
/// the barycentric lift of (u, v) and n the Phong-interpolated vertex normal,
/// and inverts that map by damped Newton iteration. Immutable; copies share
/// the underlying mesh and indices.
class Foliation {
 public:
  Foliation(TriangleMesh mesh, DiskParam param, FoliationOptions options = {});

  const TriangleMesh& mesh() const { return data_->mesh; }
  const DiskParam& param() const { return data_->param; }
  double reach() const { return data_->reach; }
  double max_curvature() const { return data_->kappa_max; }
  const FoliationOptions& options() const { return data_->options; }

  std::optional<UvLocation> locate(const Vec2& uv) const;
  bool in_domain(const Vec2& uv) const { return locate(uv).has_value(); }

  /// Throws OutsideDomain.
  SurfaceFrame surface_frame(double u, double v) const;

  /// Throws OutsideDomain or BeyondReach.
  Vec3 embed(const TaskCoords& x) const;

  /// Columns: d embed / du, d embed / dv, d embed / dd (= n_hat).
  Eigen::Matrix3d embed_jacobian(const TaskCoords& x) const;

  /// Inverse of embed, initialized from the closest surface point.
  /// Throws BeyondReach or NoConvergence.
  TaskCoords task_coords(const Vec3& p) const;

  /// Same, warm-started from `hint` (typically the previous solution).
  TaskCoords task_coords(const Vec3& p, const TaskCoords& hint) const;

  ClosestPoint closest_point(const Vec3& p) const { return data_->index.query(p); }

 private:
  struct Lift;
  struct Data {
    Data(TriangleMesh m, DiskParam p, FoliationOptions o);
    TriangleMesh mesh;
    DiskParam param;
    FoliationOptions options;
    ClosestPointIndex index;
    double kappa_max = 0.0;
    double reach = 0.0;
    // Uniform grid over [-1, 1]^2 listing faces whose parametric bounding box overlaps each cell.
    int grid_n = 1;
    std::vector<std::vector<int>> cells;
  };

  Lift lift(const UvLocation& loc) const;
  Lift lift_or_throw(const Vec2& uv) const;
  Vec2 project_to_domain(const Vec2& uv) const;
  TaskCoords newton(const Vec3& p, TaskCoords x) const;

  std::shared_ptr<const Data> data_;
};

}  // namespace foliascan
