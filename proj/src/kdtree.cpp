#include "hyper3d/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "hyper3d/errors.hpp"

namespace hyper3d {

namespace {
constexpr uint32_t kLeafSize = 8;
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()), order_(points.size()) {
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, static_cast<uint32_t>(points_.size()), 0);
  }
}

int32_t KdTree::build(uint32_t begin, uint32_t end, int depth) {
  const auto id = static_cast<int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  if (end - begin <= kLeafSize) return id;

  // Split the widest extent at its median.
  Vec3 lo = points_[order_[begin]], hi = lo;
  for (uint32_t i = begin; i < end; ++i) {
    lo = cwise_min(lo, points_[order_[i]]);
    hi = cwise_max(hi, points_[order_[i]]);
  }
  const Vec3 ext = hi - lo;
  const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
  const uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](uint32_t a, uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const int32_t left = build(begin, mid, depth + 1);
  const int32_t right = build(mid, end, depth + 1);
  Node& n = nodes_[static_cast<size_t>(id)];
  n.axis = axis;
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

void KdTree::search(int32_t id, const Vec3& q, Hit& best) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  if (n.left < 0) {
    for (uint32_t i = n.begin; i < n.end; ++i) {
      const Vec3 d = points_[order_[i]] - q;
      const double d2 = dot(d, d);
      if (d2 < best.distance_sq) best = {order_[i], d2};
    }
    return;
  }
  const double delta = q[n.axis] - n.split;
  const int32_t near = delta < 0.0 ? n.left : n.right;
  const int32_t far = delta < 0.0 ? n.right : n.left;
  search(near, q, best);
  if (delta * delta < best.distance_sq) search(far, q, best);
}

KdTree::Hit KdTree::nearest(const Vec3& q) const {
  if (points_.empty()) throw ConfigError("KdTree::nearest on an empty point set");
  Hit best{0, std::numeric_limits<double>::infinity()};
  search(0, q, best);
  return best;
}

}  // namespace hyper3d
