#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "hyper3d/geometry.hpp"

namespace hyper3d {

struct OctreeNode {
  Vec3 center;
  double half_size = 1.0;
  double sdf = 0.0;
  bool split = false;
  int32_t parent = -1;       // index into the previous level
  int32_t first_child = -1;  // index into the next level; children are contiguous, octant order

  bool operator==(const OctreeNode&) const = default;
};

/// Adaptive octree over [-1,1]^3. Level 0 holds the root; level l holds the
/// eight children of every split node at level l-1, in parent order and then
/// octant order (bit 0 = +x, bit 1 = +y, bit 2 = +z).
///
/// A node is split iff its cell may intersect the surface,
/// |sdf(center)| <= sqrt(3) * half_size, and its level is below the depth.
/// The surface-carrying nodes of level l are the leaves of the tree truncated
/// at depth l; they are what the feature extractor and the VAE consume.
class Octree {
 public:
  Octree() = default;
  Octree(int depth, std::vector<std::vector<OctreeNode>> levels);

  int depth() const { return depth_; }
  const std::vector<OctreeNode>& level(int l) const { return levels_.at(static_cast<size_t>(l)); }
  size_t node_count() const;
  /// True when the root is not split: the surface misses the domain.
  bool empty() const { return !levels_.front().front().split; }

  static bool crosses_surface(const OctreeNode& n);
  /// Indices (within level l) of the surface-carrying nodes.
  std::vector<int32_t> leaf_indices(int l) const;
  size_t leaf_count(int l) const;

  bool operator==(const Octree&) const = default;

 private:
  int depth_ = 0;
  std::vector<std::vector<OctreeNode>> levels_;
};

inline constexpr int kMaxOctreeDepth = 9;

/// Breadth-first construction. Throws ConfigError for depth outside [1, 9].
Octree build_octree(const SignedField& field, int depth);

/// Binary layout documented in docs/formats.md ("H3DOCTRE", version 1).
void write_octree(std::ostream& out, const Octree& tree);
Octree read_octree(std::istream& in);
void save_octree(const std::filesystem::path& path, const Octree& tree);
Octree load_octree(const std::filesystem::path& path);

/// Per-leaf features at one level: one row per surface-carrying node.
struct OctreeFeatures {
  int level = 0;
  std::vector<Vec3> positions;
  std::vector<double> half_sizes;
  int channels = 0;
  std::vector<float> features;  // size() x channels, row-major

  size_t size() const { return positions.size(); }
};

void save_features(const std::filesystem::path& path, const OctreeFeatures& f);
OctreeFeatures load_features(const std::filesystem::path& path);

/// k jittered copies of every leaf centre, offsets uniform in
/// [-scale*half, scale*half]^3 and clamped to the domain. Row order is
/// leaf-major: point i*k + j is the j-th copy of leaf i.
std::vector<Vec3> perturb_leaves(const OctreeFeatures& features, int k, double scale, uint64_t seed);

}  // namespace hyper3d
