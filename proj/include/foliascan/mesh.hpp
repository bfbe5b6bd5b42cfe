#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace foliascan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

/// Minimum accepted face area in m^2.
inline constexpr double kMinFaceArea = 1e-12;

/// Triangle mesh of the anatomical surface with disk topology.
///
/// Faces are counter-clockwise seen from outside, so per-face normals and the
/// angle-weighted vertex normals point outward. Instances are only produced by
/// build_mesh() and are immutable afterwards.
class TriangleMesh {
 public:
  std::span<const Vec3> vertices() const { return vertices_; }
  std::span<const Face> faces() const { return faces_; }
  std::span<const Vec3> normals() const { return normals_; }

  /// Boundary vertices in half-edge order (counter-clockwise seen from outside).
  std::span<const int> boundary_loop() const { return boundary_loop_; }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t face_count() const { return faces_.size(); }

  const Vec3& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const Vec3& normal(int i) const { return normals_[static_cast<std::size_t>(i)]; }
  const Face& face(int f) const { return faces_[static_cast<std::size_t>(f)]; }

  /// Unit geometric normal of face f.
  Vec3 face_normal(int f) const;
  double face_area(int f) const;

  bool is_boundary_vertex(int i) const { return on_boundary_[static_cast<std::size_t>(i)] != 0; }

 private:
  friend TriangleMesh build_mesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<Vec3> normals_;
  std::vector<int> boundary_loop_;
  std::vector<std::uint8_t> on_boundary_;
};

/// Validates topology and geometry and computes angle-weighted vertex normals.
///
/// Throws Error with DegenerateFace, NonManifoldEdge, NotDiskTopology or
/// IndexOutOfRange; InvalidInput when fewer than 3 vertices or no faces.
TriangleMesh build_mesh(std::vector<Vec3> vertices, std::vector<Face> faces);

/// Maximum per-edge discrete normal curvature |n_i - n_j| / |p_i - p_j|.
double max_discrete_curvature(const TriangleMesh& mesh);

struct ClosestPoint {
  int face = -1;
  Vec3 barycentric = Vec3::Zero();
  Vec3 foot = Vec3::Zero();
  double distance = 0.0;
};

/// Closest point on triangle (a, b, c) to p. Barycentric weights refer to (a, b, c).
ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Bounding-volume hierarchy over the mesh faces for closest-point queries.
/// Holds a reference to the mesh, which must outlive the index.
class ClosestPointIndex {
 public:
  explicit ClosestPointIndex(const TriangleMesh& mesh);

  ClosestPoint query(const Vec3& p) const;

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1;   // child index, -1 for leaves
    int right = -1;
    int begin = 0;   // leaf range into order_
    int end = 0;
  };

  int build(int begin, int end);

  const TriangleMesh* mesh_;
  std::vector<int> order_;
  std::vector<Eigen::AlignedBox3d> face_boxes_;
  std::vector<Node> nodes_;
};

/// One-off closest point query; builds a temporary index.
ClosestPoint closest_point(const TriangleMesh& mesh, const Vec3& p);

}  // namespace foliascan
