#pragma once

#include <filesystem>

#include "hyper3d/geometry.hpp"

namespace hyper3d {

/// Reads the Wavefront OBJ subset used by this project: `v`, `vn` and
/// triangular `f` records (`f a b c`, `f a/t/n ...`, negative indices allowed).
/// Normals are kept only when every vertex has exactly one.
Mesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const Mesh& mesh);

}  // namespace hyper3d
