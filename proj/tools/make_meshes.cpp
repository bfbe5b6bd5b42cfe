// Regenerates the bundled disk-topology meshes under data/meshes.
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <random>

#include "foliascan/mesh_io.hpp"
#include "foliascan/mesh_shapes.hpp"

namespace {

using namespace foliascan;

// Jittered grid with alternating diagonals: uneven triangle shapes and valences.
TriangleMesh irregular_patch(int n, double size, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  const double h = size / n;
  std::vector<Vec3> vertices;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      double x = i * h;
      double y = j * h;
      if (i > 0 && i < n) x += jitter(rng) * h;
      if (j > 0 && j < n) y += jitter(rng) * h;
      const double z = 0.01 * std::sin(20.0 * x) * std::cos(15.0 * y);
      vertices.emplace_back(x, y, z);
    }
  }
  std::vector<Face> faces;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        faces.push_back({a, b, c});
        faces.push_back({a, c, d});
      } else {
        faces.push_back({a, b, d});
        faces.push_back({b, c, d});
      }
    }
  }
  return build_mesh(std::move(vertices), std::move(faces));
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data/meshes";
  std::filesystem::create_directories(dir);
  const double deg = std::numbers::pi / 180.0;
  struct Entry {
    const char* file;
    TriangleMesh mesh;
  };
  const Entry entries[] = {
      {"flat_patch.off", shapes::flat_grid(12, 8, 0.12, 0.08)},
      {"sphere_cap.off", shapes::sphere_cap(0.1, 60.0 * deg, 16)},
      {"hemisphere.off", shapes::sphere_cap(0.05, 90.0 * deg, 12)},
      {"saddle.off", shapes::height_field(16, 16, 0.1, 0.1,
                                          [](double x, double y) { return 2.0 * (x - 0.05) * (x - 0.05) - 2.0 * (y - 0.05) * (y - 0.05); })},
      {"sphere_octant.off", shapes::sphere_octant(0.08, 10)},
      {"irregular_patch.off", irregular_patch(14, 0.1, 7)},
  };
  for (const auto& e : entries) {
    save_mesh(dir / e.file, e.mesh);
    std::cout << (dir / e.file).string() << ": " << e.mesh.vertices().size() << " vertices, " << e.mesh.faces().size()
              << " faces\n";
  }
}
