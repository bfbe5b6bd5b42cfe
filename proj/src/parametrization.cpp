#include "foliascan/parametrization.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "foliascan/error.hpp"

namespace foliascan {

namespace {

double half_angle_tangent(const Vec3& at, const Vec3& a, const Vec3& b) {
  const Vec3 e0 = a - at;
  const Vec3 e1 = b - at;
  const double angle = std::atan2(e0.cross(e1).norm(), e0.dot(e1));
  return std::tan(0.5 * angle);
}

}  // namespace

std::vector<Vec2> solve_convex_combination(const TriangleMesh& mesh, std::span<const Vec2> boundary_uv) {
  const auto loop = mesh.boundary_loop();
  if (boundary_uv.size() != loop.size()) {
    throw Error(ErrorCode::InvalidInput, "boundary position count does not match the boundary loop");
  }
  const int n = static_cast<int>(mesh.vertex_count());
  std::vector<Vec2> uv(static_cast<std::size_t>(n), Vec2::Zero());
  for (std::size_t k = 0; k < loop.size(); ++k) uv[static_cast<std::size_t>(loop[k])] = boundary_uv[k];

  // Interior unknowns are numbered densely.
  std::vector<int> unknown(static_cast<std::size_t>(n), -1);
  int n_unknown = 0;
  for (int i = 0; i < n; ++i) {
    if (!mesh.is_boundary_vertex(i)) unknown[static_cast<std::size_t>(i)] = n_unknown++;
  }
  if (n_unknown == 0) return uv;

  // Mean-value weights w_ij = (tan(a/2) + tan(b/2)) / |p_j - p_i|, accumulated
  // per face corner: the angle at i contributes to both edges leaving i.
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::MatrixX2d rhs = Eigen::MatrixX2d::Zero(n_unknown, 2);
  std::vector<double> diagonal(static_cast<std::size_t>(n_unknown), 0.0);
  for (const Face& t : mesh.faces()) {
    for (int k = 0; k < 3; ++k) {
      const int i = t[static_cast<std::size_t>(k)];
      const int row = unknown[static_cast<std::size_t>(i)];
      if (row < 0) continue;
      const int j = t[static_cast<std::size_t>((k + 1) % 3)];
      const int l = t[static_cast<std::size_t>((k + 2) % 3)];
      const double tan_half = half_angle_tangent(mesh.vertex(i), mesh.vertex(j), mesh.vertex(l));
      for (int nb : {j, l}) {
        const double w = tan_half / (mesh.vertex(nb) - mesh.vertex(i)).norm();
        diagonal[static_cast<std::size_t>(row)] += w;
        const int col = unknown[static_cast<std::size_t>(nb)];
        if (col >= 0) {
          triplets.emplace_back(row, col, -w);
        } else {
          rhs.row(row) += w * uv[static_cast<std::size_t>(nb)].transpose();
        }
      }
    }
  }
  for (int r = 0; r < n_unknown; ++r) triplets.emplace_back(r, r, diagonal[static_cast<std::size_t>(r)]);

  Eigen::SparseMatrix<double> system(n_unknown, n_unknown);
  system.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(system);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::SolverFailure, "mean-value system factorization failed");
  const Eigen::MatrixX2d solution = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !solution.allFinite()) {
    throw Error(ErrorCode::SolverFailure, "mean-value system solve failed");
  }
  for (int i = 0; i < n; ++i) {
    const int row = unknown[static_cast<std::size_t>(i)];
    if (row >= 0) uv[static_cast<std::size_t>(i)] = solution.row(row).transpose();
  }
  return uv;
}

DiskParam parametrize_disk(const TriangleMesh& mesh) {
  const auto loop = mesh.boundary_loop();
  const std::size_t m = loop.size();
  std::vector<double> arc(m + 1, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    arc[k + 1] = arc[k] + (mesh.vertex(loop[(k + 1) % m]) - mesh.vertex(loop[k])).norm();
  }
  const double total = arc[m];
  std::vector<Vec2> boundary(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double angle = 2.0 * std::numbers::pi * arc[k] / total;
    boundary[k] = Vec2(std::cos(angle), std::sin(angle));
  }

  DiskParam param;
  param.uv = solve_convex_combination(mesh, boundary);
  param.boundary_loop.assign(loop.begin(), loop.end());
  if (const auto flipped = count_flipped_faces(mesh, param); flipped != 0) {
    throw Error(ErrorCode::SolverFailure, std::to_string(flipped) + " faces flipped in the parametrization");
  }
  return param;
}

double signed_area_2x(const DiskParam& param, const Face& face) {
  const Vec2& a = param.uv[static_cast<std::size_t>(face[0])];
  const Vec2& b = param.uv[static_cast<std::size_t>(face[1])];
  const Vec2& c = param.uv[static_cast<std::size_t>(face[2])];
  const Vec2 ab = b - a;
  const Vec2 ac = c - a;
  return ab.x() * ac.y() - ab.y() * ac.x();
}

std::size_t count_flipped_faces(const TriangleMesh& mesh, const DiskParam& param) {
  std::size_t flipped = 0;
  for (const Face& t : mesh.faces()) {
    if (!(signed_area_2x(param, t) > 0.0)) ++flipped;
  }
  return flipped;
}

void write_param_csv(std::ostream& out, const DiskParam& param) {
  out << "vertex_id,u,v\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < param.uv.size(); ++i) {
    out << i << ',' << param.uv[i].x() << ',' << param.uv[i].y() << '\n';
  }
}

}  // namespace foliascan
