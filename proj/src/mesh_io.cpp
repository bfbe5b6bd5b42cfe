#include "foliascan/mesh_io.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "foliascan/error.hpp"

namespace foliascan {

namespace {

// Next non-empty line with '#' comments stripped.
bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

Face read_polygon(std::istream& in, std::size_t index) {
  int count = 0;
  Face t{};
  if (!(in >> count >> t[0] >> t[1] >> t[2]) || count != 3) {
    throw Error(ErrorCode::IoFailure, "face " + std::to_string(index) + " is not a triangle");
  }
  return t;
}

}  // namespace

TriangleMesh read_off(std::istream& in) {
  std::string line;
  if (!next_content_line(in, line) || line.rfind("OFF", 0) != 0) {
    throw Error(ErrorCode::IoFailure, "missing OFF header");
  }
  // Counts may follow the header on the same line.
  std::string rest = line.substr(3);
  if (rest.find_first_not_of(" \t\r") == std::string::npos && !next_content_line(in, rest)) {
    throw Error(ErrorCode::IoFailure, "missing OFF counts");
  }
  std::istringstream counts(rest);
  std::size_t nv = 0, nf = 0, ne = 0;
  if (!(counts >> nv >> nf)) throw Error(ErrorCode::IoFailure, "malformed OFF counts");
  counts >> ne;

  std::vector<Vec3> vertices(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    if (!next_content_line(in, line)) throw Error(ErrorCode::IoFailure, "truncated OFF vertex list");
    std::istringstream ls(line);
    if (!(ls >> vertices[i].x() >> vertices[i].y() >> vertices[i].z())) {
      throw Error(ErrorCode::IoFailure, "malformed OFF vertex " + std::to_string(i));
    }
  }
  std::vector<Face> faces(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    if (!next_content_line(in, line)) throw Error(ErrorCode::IoFailure, "truncated OFF face list");
    std::istringstream ls(line);
    faces[i] = read_polygon(ls, i);
  }
  return build_mesh(std::move(vertices), std::move(faces));
}

void write_off(std::ostream& out, const TriangleMesh& mesh) {
  out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.face_count() << " 0\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Vec3& v : mesh.vertices()) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Face& t : mesh.faces()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

TriangleMesh read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw Error(ErrorCode::IoFailure, "missing ply magic");

  std::size_t nv = 0, nf = 0;
  std::vector<std::string> vertex_props;
  std::string current;
  bool ascii = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (word == "element") {
      ls >> current;
      if (current == "vertex") ls >> nv;
      if (current == "face") ls >> nf;
    } else if (word == "property" && current == "vertex") {
      std::string type, name;
      ls >> type >> name;
      vertex_props.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  if (!ascii) throw Error(ErrorCode::IoFailure, "only ASCII PLY is supported");
  std::size_t ix = vertex_props.size(), iy = ix, iz = ix;
  for (std::size_t i = 0; i < vertex_props.size(); ++i) {
    if (vertex_props[i] == "x") ix = i;
    if (vertex_props[i] == "y") iy = i;
    if (vertex_props[i] == "z") iz = i;
  }
  if (ix == vertex_props.size() || iy == vertex_props.size() || iz == vertex_props.size()) {
    throw Error(ErrorCode::IoFailure, "PLY vertex element lacks x/y/z");
  }

  std::vector<Vec3> vertices(nv);
  std::vector<double> row(vertex_props.size());
  for (std::size_t i = 0; i < nv; ++i) {
    if (!std::getline(in, line)) throw Error(ErrorCode::IoFailure, "truncated PLY vertex list");
    std::istringstream ls(line);
    for (double& x : row) {
      if (!(ls >> x)) throw Error(ErrorCode::IoFailure, "malformed PLY vertex " + std::to_string(i));
    }
    vertices[i] = Vec3(row[ix], row[iy], row[iz]);
  }
  std::vector<Face> faces(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    if (!std::getline(in, line)) throw Error(ErrorCode::IoFailure, "truncated PLY face list");
    std::istringstream ls(line);
    faces[i] = read_polygon(ls, i);
  }
  return build_mesh(std::move(vertices), std::move(faces));
}

void write_ply(std::ostream& out, const TriangleMesh& mesh) {
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << mesh.vertex_count() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "property double nx\nproperty double ny\nproperty double nz\n"
      << "element face " << mesh.face_count() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    const Vec3& v = mesh.vertices()[i];
    const Vec3& n = mesh.normals()[i];
    out << v.x() << ' ' << v.y() << ' ' << v.z() << ' ' << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  }
  for (const Face& t : mesh.faces()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".off" || ext == ".OFF") return read_off(in);
  if (ext == ".ply" || ext == ".PLY") return read_ply(in);
  throw Error(ErrorCode::IoFailure, "unknown mesh extension '" + ext + "'");
}

void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".ply" || ext == ".PLY") {
    write_ply(out, mesh);
  } else {
    write_off(out, mesh);
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace foliascan
