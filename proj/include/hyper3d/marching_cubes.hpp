#pragma once

#include <functional>
#include <vector>

#include "hyper3d/geometry.hpp"

namespace hyper3d {

/// Scalar samples on the (cells+1)^3 lattice spanning [-1,1]^3, x slowest.
struct DenseVolume {
  int cells = 0;
  std::vector<float> values;

  int points_per_axis() const { return cells + 1; }
  double spacing() const { return 2.0 / cells; }
  Vec3 lattice_point(int i, int j, int k) const {
    return {-1.0 + i * spacing(), -1.0 + j * spacing(), -1.0 + k * spacing()};
  }
  size_t index(int i, int j, int k) const {
    const auto n = static_cast<size_t>(points_per_axis());
    return (static_cast<size_t>(i) * n + j) * n + k;
  }
};

using ScalarSampler = std::function<double(const Vec3&)>;

DenseVolume sample_volume(const ScalarSampler& sampler, int cells);

/// Marching cubes over the lattice. Values above `iso` are inside; triangles
/// are wound counter-clockwise seen from outside and vertices are shared
/// between neighbouring cells. A field that never crosses `iso` yields an
/// empty mesh and a logged warning.
Mesh marching_cubes(const DenseVolume& volume, double iso = 0.5);
Mesh marching_cubes(const ScalarSampler& sampler, int cells, double iso = 0.5);

/// Every undirected edge is used by exactly two faces.
bool is_watertight(const Mesh& mesh);
/// V - E + F over referenced vertices.
long euler_characteristic(const Mesh& mesh);
/// Signed volume enclosed by a closed mesh (positive for outward winding).
double signed_volume(const Mesh& mesh);

}  // namespace hyper3d
