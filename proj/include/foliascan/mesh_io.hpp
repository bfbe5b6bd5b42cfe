#pragma once

#include <filesystem>
#include <iosfwd>

#include "foliascan/mesh.hpp"

namespace foliascan {

// ASCII OFF and ASCII PLY, vertex coordinates in meters. Readers run
// build_mesh() so every mesh they return is validated.

TriangleMesh read_off(std::istream& in);
void write_off(std::ostream& out, const TriangleMesh& mesh);

TriangleMesh read_ply(std::istream& in);
void write_ply(std::ostream& out, const TriangleMesh& mesh);

/// Dispatches on the file extension (.off or .ply).
TriangleMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);

}  // namespace foliascan
