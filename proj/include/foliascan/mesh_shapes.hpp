#pragma once

#include <functional>

#include "foliascan/mesh.hpp"

namespace foliascan::shapes {

/// Regular grid over [0, size_x] x [0, size_y] at z = height(x, y), two
/// triangles per cell, normals toward +z for a flat grid.
TriangleMesh height_field(int cells_x, int cells_y, double size_x, double size_y,
                          const std::function<double(double, double)>& height);

TriangleMesh flat_grid(int cells_x, int cells_y, double size_x, double size_y);

/// Spherical cap around +z on a sphere of `radius` centred at the origin,
/// built from `rings` concentric vertex rings (6k vertices on ring k).
TriangleMesh sphere_cap(double radius, double half_angle_rad, int rings);

/// The positive octant of a sphere: one octahedron face subdivided
/// `subdivisions` times per edge and projected radially.
TriangleMesh sphere_octant(double radius, int subdivisions);

}  // namespace foliascan::shapes
