#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "foliascan/mesh.hpp"

namespace foliascan {

/// Per-vertex planar coordinates of a disk-topology mesh in the unit disk.
struct DiskParam {
  std::vector<Vec2> uv;
  std::vector<int> boundary_loop;
};

/// Maps the boundary loop to the unit circle by cumulative arc length and
/// solves the interior as a mean-value convex-combination system.
///
/// The first boundary vertex lands at (1, 0); angles increase counter-clockwise
/// so 2D faces keep the mesh orientation. Throws SolverFailure if the sparse
/// system cannot be factorized or the result contains flipped faces.
DiskParam parametrize_disk(const TriangleMesh& mesh);

/// Mean-value convex-combination solve with caller-fixed boundary positions.
/// `boundary_uv[k]` is the position of `mesh.boundary_loop()[k]`.
std::vector<Vec2> solve_convex_combination(const TriangleMesh& mesh, std::span<const Vec2> boundary_uv);

/// Twice the signed area of face f in the parametric plane.
double signed_area_2x(const DiskParam& param, const Face& face);

/// Number of faces with non-positive parametric area.
std::size_t count_flipped_faces(const TriangleMesh& mesh, const DiskParam& param);

/// CSV `vertex_id,u,v`.
void write_param_csv(std::ostream& out, const DiskParam& param);

}  // namespace foliascan
