#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "hyper3d/errors.hpp"
#include "hyper3d/octree.hpp"

using namespace hyper3d;

namespace {

// All level-l cells of the full 2^l grid that satisfy the crossing rule.
std::set<std::tuple<int, int, int>> brute_force_crossing_cells(const SignedField& f, int level) {
  std::set<std::tuple<int, int, int>> out;
  const int n = 1 << level;
  const double half = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const Vec3 c{-1.0 + (2 * i + 1) * half, -1.0 + (2 * j + 1) * half, -1.0 + (2 * k + 1) * half};
        if (std::abs(f.sdf(c)) <= std::sqrt(3.0) * half) out.insert({i, j, k});
      }
    }
  }
  return out;
}

std::tuple<int, int, int> cell_index(const OctreeNode& n) {
  auto idx = [&](double c) { return static_cast<int>(std::lround((c + 1.0) / (2.0 * n.half_size) - 0.5)); };
  return {idx(n.center.x), idx(n.center.y), idx(n.center.z)};
}

}  // namespace

TEST_CASE("level-3 leaves of a sphere equal brute-force enumeration") {
  const SignedField f = analytic_shape(ShapeSpec::sphere(0.5));
  const Octree t = build_octree(f, 3);
  std::set<std::tuple<int, int, int>> got;
  for (int32_t i : t.leaf_indices(3)) got.insert(cell_index(t.level(3)[static_cast<size_t>(i)]));
  CHECK(got == brute_force_crossing_cells(f, 3));
  CHECK(t.leaf_count(3) == got.size());
}

TEST_CASE("octree structure invariants") {
  const SignedField f = analytic_shape(ShapeSpec::torus(0.5, 0.2));
  const Octree t = build_octree(f, 5);
  CHECK(t.level(0).size() == 1);
  CHECK(t.level(0)[0].half_size == 1.0);
  for (int l = 0; l <= t.depth(); ++l) {
    std::set<std::tuple<int, int, int>> cells;
    for (const OctreeNode& n : t.level(l)) {
      CHECK(n.half_size == std::ldexp(1.0, -l));
      CHECK(std::abs(n.sdf - f.sdf(n.center)) <= 1e-6);
      CHECK(n.split == (Octree::crosses_surface(n) && l < t.depth()));
      cells.insert(cell_index(n));
      if (l > 0) {
        const OctreeNode& p = t.level(l - 1)[static_cast<size_t>(n.parent)];
        CHECK(p.split);
        for (int a = 0; a < 3; ++a) CHECK(std::abs(n.center[a] - p.center[a]) == doctest::Approx(n.half_size));
      }
      if (n.split) {
        for (int o = 0; o < 8; ++o) {
          const OctreeNode& c = t.level(l + 1)[static_cast<size_t>(n.first_child + o)];
          CHECK((c.center.x > n.center.x) == bool(o & 1));
          CHECK((c.center.y > n.center.y) == bool(o & 2));
          CHECK((c.center.z > n.center.z) == bool(o & 4));
        }
      }
    }
    CHECK(cells.size() == t.level(l).size());  // disjoint cells
  }
}

TEST_CASE("leaf count grows about four times per level on a sphere") {
  const Octree t = build_octree(analytic_shape(ShapeSpec::sphere(0.5)), 6);
  for (int l = 4; l <= 6; ++l) {
    const double ratio = static_cast<double>(t.leaf_count(l)) / static_cast<double>(t.leaf_count(l - 1));
    INFO("level " << l << " ratio " << ratio);
    CHECK(ratio >= 3.0);
    CHECK(ratio <= 5.0);
  }
}

TEST_CASE("surface outside the domain gives a root-only tree") {
  // Box larger than the domain: every node is deep inside, nothing crosses.
  const SignedField f = SignedField::from_spec_unchecked(ShapeSpec::box({3, 3, 3}));
  const Octree t = build_octree(f, 4);
  CHECK(t.empty());
  CHECK(t.node_count() == 1);
  CHECK(t.leaf_count(4) == 0);
}

TEST_CASE("depth bounds and determinism") {
  const SignedField f = analytic_shape(ShapeSpec::sphere(0.5));
  CHECK_THROWS_AS(build_octree(f, 0), ConfigError);
  CHECK_THROWS_AS(build_octree(f, 10), ConfigError);
  CHECK(build_octree(f, 4) == build_octree(f, 4));
}

TEST_CASE("octree serialization round trip") {
  const Octree t = build_octree(analytic_shape(ShapeSpec::capsule({-0.3, 0, 0}, {0.3, 0.2, 0}, 0.2)), 4);
  std::stringstream ss;
  write_octree(ss, t);
  CHECK(read_octree(ss) == t);
  std::stringstream bad("not an octree");
  CHECK_THROWS_AS(read_octree(bad), ConfigError);
}

TEST_CASE("features round trip") {
  OctreeFeatures f;
  f.level = 6;
  f.channels = 3;
  f.positions = {{0.1, 0.2, 0.3}, {-0.5, 0.0, 0.25}};
  f.half_sizes = {1.0 / 64, 1.0 / 64};
  f.features = {1, 2, 3, 4, 5, 6};
  const auto path = std::filesystem::temp_directory_path() / "hyper3d_features.bin";
  save_features(path, f);
  const OctreeFeatures g = load_features(path);
  CHECK(g.level == 6);
  CHECK(g.positions == f.positions);
  CHECK(g.half_sizes == f.half_sizes);
  CHECK(g.features == f.features);
  std::filesystem::remove(path);
}

TEST_CASE("perturb_leaves counts, degenerate scale and containment") {
  OctreeFeatures f;
  f.level = 3;
  for (int i = 0; i < 100; ++i) {
    f.positions.push_back({-0.9 + 0.018 * i, 0.1, 0.875});
    f.half_sizes.push_back(0.125);
  }
  const auto pts = perturb_leaves(f, 4, 1.0, 1);
  CHECK(pts.size() == 400);
  for (size_t i = 0; i < f.size(); ++i) {
    for (int j = 0; j < 4; ++j) {
      const Vec3& p = pts[i * 4 + j];
      for (int a = 0; a < 3; ++a) {
        CHECK(std::abs(p[a] - f.positions[i][a]) <= f.half_sizes[i] + 1e-12);
        CHECK(std::abs(p[a]) <= 1.0);
      }
    }
  }
  const auto centres = perturb_leaves(f, 2, 0.0, 1);
  for (size_t i = 0; i < centres.size(); ++i) CHECK(centres[i] == f.positions[i / 2]);
  CHECK(perturb_leaves(f, 4, 1.0, 9) == perturb_leaves(f, 4, 1.0, 9));
  CHECK_THROWS_AS(perturb_leaves(f, 0, 1.0, 1), ConfigError);
}
