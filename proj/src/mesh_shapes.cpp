#include "foliascan/mesh_shapes.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "foliascan/error.hpp"

namespace foliascan::shapes {

TriangleMesh height_field(int cells_x, int cells_y, double size_x, double size_y,
                          const std::function<double(double, double)>& height) {
  if (cells_x < 1 || cells_y < 1) throw Error(ErrorCode::InvalidInput, "grid needs at least one cell per axis");
  const int nx = cells_x + 1;
  std::vector<Vec3> vertices;
  for (int j = 0; j <= cells_y; ++j) {
    for (int i = 0; i <= cells_x; ++i) {
      const double x = size_x * i / cells_x;
      const double y = size_y * j / cells_y;
      vertices.emplace_back(x, y, height(x, y));
    }
  }
  std::vector<Face> faces;
  for (int j = 0; j < cells_y; ++j) {
    for (int i = 0; i < cells_x; ++i) {
      const int v00 = j * nx + i;
      const int v10 = v00 + 1;
      const int v01 = v00 + nx;
      const int v11 = v01 + 1;
      faces.push_back({v00, v10, v11});
      faces.push_back({v00, v11, v01});
    }
  }
  return build_mesh(std::move(vertices), std::move(faces));
}

TriangleMesh flat_grid(int cells_x, int cells_y, double size_x, double size_y) {
  return height_field(cells_x, cells_y, size_x, size_y, [](double, double) { return 0.0; });
}

TriangleMesh sphere_cap(double radius, double half_angle_rad, int rings) {
  if (rings < 1 || !(radius > 0.0) || !(half_angle_rad > 0.0) || half_angle_rad > std::numbers::pi / 2 + 1e-12) {
    throw Error(ErrorCode::InvalidInput, "sphere cap needs rings >= 1, radius > 0, 0 < half angle <= pi/2");
  }
  std::vector<Vec3> vertices{Vec3(0.0, 0.0, radius)};
  std::vector<int> ring_start{0};
  std::vector<int> ring_size{1};
  for (int k = 1; k <= rings; ++k) {
    const double theta = half_angle_rad * k / rings;
    const int count = 6 * k;
    ring_start.push_back(static_cast<int>(vertices.size()));
    ring_size.push_back(count);
    for (int i = 0; i < count; ++i) {
      const double phi = 2.0 * std::numbers::pi * i / count;
      vertices.emplace_back(radius * std::sin(theta) * std::cos(phi), radius * std::sin(theta) * std::sin(phi),
                            radius * std::cos(theta));
    }
  }

  std::vector<Face> faces;
  for (int k = 1; k <= rings; ++k) {
    const int na = ring_size[static_cast<std::size_t>(k - 1)];
    const int nb = ring_size[static_cast<std::size_t>(k)];
    const int sa = ring_start[static_cast<std::size_t>(k - 1)];
    const int sb = ring_start[static_cast<std::size_t>(k)];
    if (na == 1) {
      for (int j = 0; j < nb; ++j) faces.push_back({sa, sb + j, sb + (j + 1) % nb});
      continue;
    }
    // Merge the two rings by angular position, advancing whichever is behind.
    int i = 0;
    int j = 0;
    while (i < na || j < nb) {
      const double next_a = static_cast<double>(i + 1) / na;
      const double next_b = static_cast<double>(j + 1) / nb;
      if (j < nb && (i == na || next_b <= next_a)) {
        faces.push_back({sa + i % na, sb + j, sb + (j + 1) % nb});
        ++j;
      } else {
        faces.push_back({sa + i, sb + j % nb, sa + (i + 1) % na});
        ++i;
      }
    }
  }
  return build_mesh(std::move(vertices), std::move(faces));
}

TriangleMesh sphere_octant(double radius, int subdivisions) {
  if (subdivisions < 1 || !(radius > 0.0)) throw Error(ErrorCode::InvalidInput, "octant needs subdivisions >= 1, radius > 0");
  const int n = subdivisions;
  const Vec3 a = Vec3::UnitX();
  const Vec3 b = Vec3::UnitY();
  const Vec3 c = Vec3::UnitZ();
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> index(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      const Vec3 p = a + (b - a) * (static_cast<double>(i) / n) + (c - a) * (static_cast<double>(j) / n);
      index[static_cast<std::size_t>(i)].push_back(static_cast<int>(vertices.size()));
      vertices.push_back(radius * p.normalized());
    }
  }
  auto at = [&](int i, int j) { return index[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; };
  std::vector<Face> faces;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; i + j < n; ++j) {
      faces.push_back({at(i, j), at(i + 1, j), at(i, j + 1)});
      if (i + j + 1 < n) faces.push_back({at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)});
    }
  }
  return build_mesh(std::move(vertices), std::move(faces));
}

}  // namespace foliascan::shapes
