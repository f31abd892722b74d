#include "hyper3d/marching_cubes.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "hyper3d/errors.hpp"
#include "mc_tables.hpp"

namespace hyper3d {

namespace {

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
// Each cell edge as (start corner, axis); the edge runs from the start corner in +axis.
constexpr int kEdge[12][2] = {{0, 0}, {1, 1}, {3, 0}, {0, 1}, {4, 0}, {5, 1},
                              {7, 0}, {4, 1}, {0, 2}, {1, 2}, {2, 2}, {3, 2}};

}  // namespace

DenseVolume sample_volume(const ScalarSampler& sampler, int cells) {
  if (cells < 1) throw ConfigError("sample_volume: need at least one cell");
  DenseVolume v;
  v.cells = cells;
  const int n = v.points_per_axis();
  v.values.resize(static_cast<size_t>(n) * n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) v.values[v.index(i, j, k)] = static_cast<float>(sampler(v.lattice_point(i, j, k)));
    }
  }
  return v;
}

Mesh marching_cubes(const DenseVolume& volume, double iso) {
  const int cells = volume.cells;
  if (cells < 1 || volume.values.size() != static_cast<size_t>(cells + 1) * (cells + 1) * (cells + 1)) {
    throw ConfigError("marching_cubes: volume size does not match its cell count");
  }
  Mesh mesh;
  std::unordered_map<uint64_t, uint32_t> edge_vertex;
  auto vertex_on_edge = [&](int i, int j, int k, int edge) -> uint32_t {
    const int* c = kCorner[kEdge[edge][0]];
    const int axis = kEdge[edge][1];
    const int a[3] = {i + c[0], j + c[1], k + c[2]};
    const uint64_t key = volume.index(a[0], a[1], a[2]) * 3 + static_cast<uint64_t>(axis);
    if (auto it = edge_vertex.find(key); it != edge_vertex.end()) return it->second;

    int b[3] = {a[0], a[1], a[2]};
    ++b[axis];
    const double va = volume.values[volume.index(a[0], a[1], a[2])];
    const double vb = volume.values[volume.index(b[0], b[1], b[2])];
    const double t = vb != va ? std::clamp((iso - va) / (vb - va), 0.0, 1.0) : 0.5;
    const Vec3 pa = volume.lattice_point(a[0], a[1], a[2]);
    const Vec3 pb = volume.lattice_point(b[0], b[1], b[2]);
    mesh.vertices.push_back(pa + (pb - pa) * t);
    const auto id = static_cast<uint32_t>(mesh.vertices.size() - 1);
    edge_vertex.emplace(key, id);
    return id;
  };

  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      for (int k = 0; k < cells; ++k) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          // The tables treat flagged corners as being below the iso level.
          if (volume.values[volume.index(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2])] <= iso) {
            cube |= 1 << c;
          }
        }
        if (mc_tables::kEdgeTable[cube] == 0) continue;
        const int* tri = mc_tables::kTriTable[cube];
        for (int t = 0; tri[t] != -1; t += 3) {
          const uint32_t a = vertex_on_edge(i, j, k, tri[t]);
          const uint32_t b = vertex_on_edge(i, j, k, tri[t + 1]);
          const uint32_t c = vertex_on_edge(i, j, k, tri[t + 2]);
          mesh.faces.push_back({a, b, c});
        }
      }
    }
  }
  if (mesh.faces.empty()) spdlog::warn("marching_cubes: field never crosses iso level {}; mesh is empty", iso);
  return mesh;
}

Mesh marching_cubes(const ScalarSampler& sampler, int cells, double iso) {
  if (cells < 8) throw ConfigError("marching_cubes: resolution must be >= 8");
  return marching_cubes(sample_volume(sampler, cells), iso);
}

namespace {

std::map<std::pair<uint32_t, uint32_t>, int> edge_use(const Mesh& mesh) {
  std::map<std::pair<uint32_t, uint32_t>, int> use;
  for (const Face& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) ++use[std::minmax(f[e], f[(e + 1) % 3])];
  }
  return use;
}

}  // namespace

bool is_watertight(const Mesh& mesh) {
  if (mesh.faces.empty()) return false;
  for (const auto& [edge, count] : edge_use(mesh)) {
    if (count != 2) return false;
  }
  return true;
}

long euler_characteristic(const Mesh& mesh) {
  std::vector<uint8_t> used(mesh.vertices.size(), 0);
  for (const Face& f : mesh.faces) {
    for (uint32_t v : f) used[v] = 1;
  }
  const long v = std::count(used.begin(), used.end(), 1);
  const long e = static_cast<long>(edge_use(mesh).size());
  return v - e + static_cast<long>(mesh.faces.size());
}

double signed_volume(const Mesh& mesh) {
  double vol = 0.0;
  for (const Face& f : mesh.faces) {
    vol += dot(mesh.vertices[f[0]], cross(mesh.vertices[f[1]], mesh.vertices[f[2]]));
  }
  return vol / 6.0;
}

}  // namespace hyper3d
