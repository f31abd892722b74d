#include "hyper3d/obj_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "hyper3d/errors.hpp"

namespace hyper3d {

namespace {

struct Corner {
  long v = 0;
  long n = 0;
};

Corner parse_corner(const std::string& token) {
  Corner c;
  std::stringstream ss(token);
  std::string part;
  int field = 0;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) {
      const long value = std::stol(part);
      if (field == 0) c.v = value;
      if (field == 2) c.n = value;
    }
    ++field;
  }
  return c;
}

uint32_t resolve(long index, size_t count, size_t line) {
  const long resolved = index < 0 ? static_cast<long>(count) + index : index - 1;
  if (resolved < 0 || resolved >= static_cast<long>(count)) {
    throw ConfigError("OBJ line " + std::to_string(line) + ": index out of range");
  }
  return static_cast<uint32_t>(resolved);
}

}  // namespace

Mesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read OBJ file '" + path.string() + "'");

  Mesh mesh;
  std::vector<Vec3> file_normals;
  std::vector<long> vertex_normal;  // normal index per vertex, -1 when unset
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x >> p.y >> p.z)) throw ConfigError("OBJ line " + std::to_string(line_no) + ": malformed vertex");
      mesh.vertices.push_back(p);
      vertex_normal.push_back(-1);
    } else if (tag == "vn") {
      Vec3 n;
      if (!(ls >> n.x >> n.y >> n.z)) throw ConfigError("OBJ line " + std::to_string(line_no) + ": malformed normal");
      file_normals.push_back(normalized(n));
    } else if (tag == "f") {
      std::vector<Corner> corners;
      std::string tok;
      while (ls >> tok) corners.push_back(parse_corner(tok));
      if (corners.size() != 3) {
        throw ConfigError("OBJ line " + std::to_string(line_no) + ": only triangular faces are supported");
      }
      Face f{};
      for (int k = 0; k < 3; ++k) {
        f[k] = resolve(corners[k].v, mesh.vertices.size(), line_no);
        if (corners[k].n != 0) vertex_normal[f[k]] = resolve(corners[k].n, file_normals.size(), line_no);
      }
      mesh.faces.push_back(f);
    }
  }
  if (!file_normals.empty()) {
    bool complete = true;
    for (long n : vertex_normal) complete = complete && n >= 0;
    if (complete) {
      for (long n : vertex_normal) mesh.normals.push_back(file_normals[static_cast<size_t>(n)]);
    }
  }
  mesh.validate();
  return mesh;
}

void write_obj(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write OBJ file '" + path.string() + "'");
  out << std::setprecision(9);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  const bool with_normals = mesh.normals.size() == mesh.vertices.size() && !mesh.normals.empty();
  if (with_normals) {
    for (const Vec3& n : mesh.normals) out << "vn " << n.x << ' ' << n.y << ' ' << n.z << '\n';
  }
  for (const Face& f : mesh.faces) {
    out << 'f';
    for (uint32_t i : f) {
      out << ' ' << (i + 1);
      if (with_normals) out << "//" << (i + 1);
    }
    out << '\n';
  }
}

}  // namespace hyper3d
