#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hyper3d/geometry.hpp"

namespace hyper3d {

/// Static 3-d tree over a point cloud with exact nearest-neighbour queries.
class KdTree {
 public:
  struct Hit {
    uint32_t index = 0;  // into the original point list
    double distance_sq = 0.0;
  };

  explicit KdTree(std::span<const Vec3> points);

  size_t size() const { return points_.size(); }
  /// Throws ConfigError on an empty tree.
  Hit nearest(const Vec3& q) const;

 private:
  struct Node {
    uint32_t begin = 0, end = 0;  // range in order_
    int32_t left = -1, right = -1;
    int axis = 0;
    double split = 0.0;
  };

  int32_t build(uint32_t begin, uint32_t end, int depth);
  void search(int32_t node, const Vec3& q, Hit& best) const;

  std::vector<Vec3> points_;
  std::vector<uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace hyper3d
