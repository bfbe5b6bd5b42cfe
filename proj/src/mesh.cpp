#include "foliascan/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include <Eigen/Geometry>

#include "foliascan/error.hpp"

namespace foliascan {

namespace {

double corner_angle(const Vec3& at, const Vec3& a, const Vec3& b) {
  const Vec3 e0 = a - at;
  const Vec3 e1 = b - at;
  return std::atan2(e0.cross(e1).norm(), e0.dot(e1));
}

std::string face_tag(std::size_t f) { return "face " + std::to_string(f); }

// Every vertex fan must be a single edge-connected run of faces.
void check_vertex_fans(std::size_t n_vertices, const std::vector<Face>& faces) {
  std::vector<std::vector<int>> incident(n_vertices);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int v : faces[f]) incident[static_cast<std::size_t>(v)].push_back(static_cast<int>(f));
  }
  for (std::size_t v = 0; v < n_vertices; ++v) {
    const auto& fan = incident[v];
    if (fan.empty()) {
      throw Error(ErrorCode::NotDiskTopology, "vertex " + std::to_string(v) + " is not referenced by any face");
    }
    // Faces in a fan around v are adjacent when they share another vertex.
    std::vector<char> seen(fan.size(), 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < fan.size(); ++j) {
        if (seen[j]) continue;
        const Face& a = faces[static_cast<std::size_t>(fan[i])];
        const Face& b = faces[static_cast<std::size_t>(fan[j])];
        bool shares = false;
        for (int x : a) {
          if (x == static_cast<int>(v)) continue;
          if (std::find(b.begin(), b.end(), x) != b.end()) shares = true;
        }
        if (shares) {
          seen[j] = 1;
          ++reached;
          stack.push_back(j);
        }
      }
    }
    if (reached != fan.size()) {
      throw Error(ErrorCode::NotDiskTopology, "vertex " + std::to_string(v) + " is a pinch vertex");
    }
  }
}

}  // namespace

Vec3 TriangleMesh::face_normal(int f) const {
  const Face& t = face(f);
  return (vertex(t[1]) - vertex(t[0])).cross(vertex(t[2]) - vertex(t[0])).normalized();
}

double TriangleMesh::face_area(int f) const {
  const Face& t = face(f);
  return 0.5 * (vertex(t[1]) - vertex(t[0])).cross(vertex(t[2]) - vertex(t[0])).norm();
}

TriangleMesh build_mesh(std::vector<Vec3> vertices, std::vector<Face> faces) {
  if (vertices.size() < 3 || faces.empty()) {
    throw Error(ErrorCode::InvalidInput, "a mesh needs at least 3 vertices and 1 face");
  }
  const int n = static_cast<int>(vertices.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int v : faces[f]) {
      if (v < 0 || v >= n) throw Error(ErrorCode::IndexOutOfRange, face_tag(f) + " references vertex " + std::to_string(v));
    }
    const Face& t = faces[f];
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw Error(ErrorCode::DegenerateFace, face_tag(f) + " repeats a vertex");
    }
    const Vec3& a = vertices[static_cast<std::size_t>(t[0])];
    const double area = 0.5 * (vertices[static_cast<std::size_t>(t[1])] - a)
                                  .cross(vertices[static_cast<std::size_t>(t[2])] - a)
                                  .norm();
    if (!(area > kMinFaceArea)) throw Error(ErrorCode::DegenerateFace, face_tag(f) + " has area " + std::to_string(area));
  }

  // Directed half-edges; a repeated directed edge means >2 faces or flipped orientation.
  std::map<std::pair<int, int>, int> half_edges;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const std::pair<int, int> e{faces[f][static_cast<std::size_t>(k)], faces[f][static_cast<std::size_t>((k + 1) % 3)]};
      if (!half_edges.emplace(e, static_cast<int>(f)).second) {
        throw Error(ErrorCode::NonManifoldEdge,
                    "edge (" + std::to_string(e.first) + "," + std::to_string(e.second) + ") is shared inconsistently");
      }
    }
  }

  check_vertex_fans(vertices.size(), faces);

  // Boundary: half-edges without a twin.
  std::vector<int> next_on_boundary(vertices.size(), -1);
  std::size_t boundary_edges = 0;
  std::size_t undirected_edges = 0;
  for (const auto& [e, f] : half_edges) {
    const bool has_twin = half_edges.count({e.second, e.first}) != 0;
    if (!has_twin) {
      if (next_on_boundary[static_cast<std::size_t>(e.first)] != -1) {
        throw Error(ErrorCode::NotDiskTopology, "vertex " + std::to_string(e.first) + " has two outgoing boundary edges");
      }
      next_on_boundary[static_cast<std::size_t>(e.first)] = e.second;
      ++boundary_edges;
      ++undirected_edges;
    } else if (e.first < e.second) {
      ++undirected_edges;
    }
  }
  if (boundary_edges == 0) throw Error(ErrorCode::NotDiskTopology, "mesh is closed (no boundary loop)");

  std::vector<int> loop;
  const auto first = static_cast<int>(std::distance(
      next_on_boundary.begin(), std::find_if(next_on_boundary.begin(), next_on_boundary.end(), [](int x) { return x != -1; })));
  int cur = first;
  do {
    loop.push_back(cur);
    cur = next_on_boundary[static_cast<std::size_t>(cur)];
    if (cur == -1 || loop.size() > boundary_edges) {
      throw Error(ErrorCode::NotDiskTopology, "broken boundary loop");
    }
  } while (cur != first);
  if (loop.size() != boundary_edges) {
    throw Error(ErrorCode::NotDiskTopology, "mesh has more than one boundary loop");
  }

  const long euler = static_cast<long>(vertices.size()) - static_cast<long>(undirected_edges) + static_cast<long>(faces.size());
  if (euler != 1) {
    throw Error(ErrorCode::NotDiskTopology, "Euler characteristic " + std::to_string(euler) + " != 1");
  }

  // Angle-weighted vertex normals.
  std::vector<Vec3> normals(vertices.size(), Vec3::Zero());
  for (const Face& t : faces) {
    const Vec3& a = vertices[static_cast<std::size_t>(t[0])];
    const Vec3& b = vertices[static_cast<std::size_t>(t[1])];
    const Vec3& c = vertices[static_cast<std::size_t>(t[2])];
    const Vec3 fn = (b - a).cross(c - a).normalized();
    normals[static_cast<std::size_t>(t[0])] += corner_angle(a, b, c) * fn;
    normals[static_cast<std::size_t>(t[1])] += corner_angle(b, c, a) * fn;
    normals[static_cast<std::size_t>(t[2])] += corner_angle(c, a, b) * fn;
  }
  for (std::size_t i = 0; i < normals.size(); ++i) {
    const double len = normals[i].norm();
    if (!(len > 0.0)) throw Error(ErrorCode::DegenerateFace, "vertex " + std::to_string(i) + " has a vanishing normal");
    normals[i] /= len;
  }

  TriangleMesh mesh;
  mesh.on_boundary_.assign(vertices.size(), 0);
  for (int v : loop) mesh.on_boundary_[static_cast<std::size_t>(v)] = 1;
  mesh.vertices_ = std::move(vertices);
  mesh.faces_ = std::move(faces);
  mesh.normals_ = std::move(normals);
  mesh.boundary_loop_ = std::move(loop);
  return mesh;
}

double max_discrete_curvature(const TriangleMesh& mesh) {
  double kappa = 0.0;
  for (const Face& t : mesh.faces()) {
    for (int k = 0; k < 3; ++k) {
      const int i = t[static_cast<std::size_t>(k)];
      const int j = t[static_cast<std::size_t>((k + 1) % 3)];
      const double len = (mesh.vertex(i) - mesh.vertex(j)).norm();
      kappa = std::max(kappa, (mesh.normal(i) - mesh.normal(j)).norm() / len);
    }
  }
  return kappa;
}

// Region classification after Ericson, "Real-Time Collision Detection", 5.1.5.
ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  ClosestPoint out;
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  auto finish = [&](double wa, double wb, double wc) {
    out.barycentric = Vec3(wa, wb, wc);
    out.foot = wa * a + wb * b + wc * c;
    out.distance = (p - out.foot).norm();
    return out;
  };
  if (d1 <= 0.0 && d2 <= 0.0) return finish(1.0, 0.0, 0.0);

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return finish(0.0, 1.0, 0.0);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return finish(1.0 - v, v, 0.0);
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return finish(0.0, 0.0, 1.0);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return finish(1.0 - w, 0.0, w);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return finish(0.0, 1.0 - w, w);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return finish(1.0 - v - w, v, w);
}

ClosestPointIndex::ClosestPointIndex(const TriangleMesh& mesh) : mesh_(&mesh) {
  const int nf = static_cast<int>(mesh.face_count());
  order_.resize(static_cast<std::size_t>(nf));
  std::iota(order_.begin(), order_.end(), 0);
  face_boxes_.reserve(static_cast<std::size_t>(nf));
  for (const Face& t : mesh.faces()) {
    Eigen::AlignedBox3d box;
    for (int v : t) box.extend(mesh.vertex(v));
    face_boxes_.push_back(box);
  }
  nodes_.reserve(static_cast<std::size_t>(2 * nf));
  build(0, nf);
}

int ClosestPointIndex::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Eigen::AlignedBox3d box;
  for (int i = begin; i < end; ++i) box.extend(face_boxes_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])]);
  nodes_[static_cast<std::size_t>(id)].box = box;
  if (end - begin <= 4) {
    nodes_[static_cast<std::size_t>(id)].begin = begin;
    nodes_[static_cast<std::size_t>(id)].end = end;
    return id;
  }
  int axis = 0;
  box.sizes().maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
    return face_boxes_[static_cast<std::size_t>(a)].center()[axis] < face_boxes_[static_cast<std::size_t>(b)].center()[axis];
  });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

ClosestPoint ClosestPointIndex::query(const Vec3& p) const {
  ClosestPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  double best_sq = std::numeric_limits<double>::infinity();

  std::vector<int> stack;
  stack.reserve(64);
  stack.push_back(0);
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.box.squaredExteriorDistance(p) > best_sq) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int f = order_[static_cast<std::size_t>(i)];
        const Face& t = mesh_->face(f);
        ClosestPoint c = closest_point_on_triangle(p, mesh_->vertex(t[0]), mesh_->vertex(t[1]), mesh_->vertex(t[2]));
        const double sq = (p - c.foot).squaredNorm();
        if (sq < best_sq || (sq == best_sq && f < best.face)) {
          best_sq = sq;
          c.face = f;
          best = c;
        }
      }
      continue;
    }
    const double dl = nodes_[static_cast<std::size_t>(node.left)].box.squaredExteriorDistance(p);
    const double dr = nodes_[static_cast<std::size_t>(node.right)].box.squaredExteriorDistance(p);
    // Visit the nearer child first (pushed last).
    if (dl < dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  return best;
}

ClosestPoint closest_point(const TriangleMesh& mesh, const Vec3& p) {
  return ClosestPointIndex(mesh).query(p);
}

}  // namespace foliascan
