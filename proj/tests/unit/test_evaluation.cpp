#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "hyper3d/errors.hpp"
#include "hyper3d/kdtree.hpp"
#include "hyper3d/marching_cubes.hpp"
#include "hyper3d/metrics.hpp"

using namespace hyper3d;

namespace {

ScalarSampler occupancy_of(const SignedField& f) {
  return [f](const Vec3& p) { return semi_continuous_occupancy(f.sdf(p)); };
}

Mesh square(int normal_axis, double offset) {
  Mesh m;
  const int u = (normal_axis + 1) % 3, v = (normal_axis + 2) % 3;
  for (int i = 0; i < 4; ++i) {
    Vec3 p{};
    p[normal_axis] = offset;
    p[u] = (i & 1) ? 0.5 : -0.5;
    p[v] = (i & 2) ? 0.5 : -0.5;
    m.vertices.push_back(p);
  }
  m.faces = {{0, 1, 3}, {0, 3, 2}};
  return m;
}

}  // namespace

TEST_CASE("marching cubes sphere: accuracy, topology and orientation") {
  const SignedField f = analytic_shape(ShapeSpec::sphere(0.5));
  const Mesh m = marching_cubes(occupancy_of(f), 64);
  REQUIRE(!m.empty());
  double err = 0.0;
  for (const Vec3& v : m.vertices) err += std::abs(norm(v) - 0.5);
  err /= static_cast<double>(m.vertices.size());
  CHECK(err < 2.0 * (2.0 / 64));
  CHECK(euler_characteristic(m) == 2);
  CHECK(is_watertight(m));
  CHECK(signed_volume(m) == doctest::Approx(4.0 / 3.0 * M_PI * 0.125).epsilon(0.02));
  // Face normals point away from the centre.
  int outward = 0;
  for (size_t i = 0; i < m.faces.size(); ++i) {
    if (m.face_area(i) == 0.0) {
      ++outward;
      continue;
    }
    const Vec3 c = (m.vertices[m.faces[i][0]] + m.vertices[m.faces[i][1]] + m.vertices[m.faces[i][2]]) / 3.0;
    outward += dot(m.face_normal(i), c) > 0.0;
  }
  CHECK(outward == static_cast<int>(m.faces.size()));
}

TEST_CASE("marching cubes torus is a closed genus-one surface") {
  const SignedField f = analytic_shape(ShapeSpec::torus(0.5, 0.2, {}, 1));
  const Mesh m = marching_cubes(occupancy_of(f), 48);
  CHECK(is_watertight(m));
  CHECK(euler_characteristic(m) == 0);
  CHECK(signed_volume(m) > 0.0);
}

TEST_CASE("marching cubes on a field without a crossing is empty") {
  const Mesh m = marching_cubes([](const Vec3&) { return 0.9; }, 16);
  CHECK(m.empty());
  CHECK_THROWS_AS(marching_cubes([](const Vec3&) { return 0.9; }, 4), ConfigError);
}

TEST_CASE("kd-tree nearest neighbour is exact") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(3000);
  for (Vec3& p : pts) p = {u(rng), u(rng), u(rng)};
  const KdTree tree(pts);
  for (int t = 0; t < 500; ++t) {
    const Vec3 q{u(rng) * 1.2, u(rng) * 1.2, u(rng) * 1.2};
    double best = 1e18;
    for (const Vec3& p : pts) best = std::min(best, dot(p - q, p - q));
    CHECK(tree.nearest(q).distance_sq == best);
  }
  CHECK_THROWS_AS(KdTree(std::vector<Vec3>{}).nearest({}), ConfigError);
}

TEST_CASE("point-triangle distance matches dense barycentric sampling") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const Vec3 a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)}, c{u(rng), u(rng), u(rng)};
    const Vec3 p{u(rng), u(rng), u(rng)};
    double best = 1e18;
    const int n = 300;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; i + j <= n; ++j) best = std::min(best, norm(p - (a + (b - a) * (double(i) / n) + (c - a) * (double(j) / n))));
    }
    const double d = point_triangle_distance(p, a, b, c);
    CHECK(d <= best + 1e-12);
    CHECK(best - d < 0.01);
  }
}

TEST_CASE("identical meshes score (1, 0, 1, 1)") {
  const Mesh m = make_icosphere(0.5, 4);
  const MetricReport r = evaluate(m, m);
  CHECK(std::abs(r.f_score - 1.0) <= 1e-3);
  CHECK(std::abs(r.chamfer_x10k) <= 1e-3);
  CHECK(std::abs(r.normal_consistency - 1.0) <= 1e-3);
  CHECK(std::abs(r.surface_iou - 1.0) <= 1e-3);
}

TEST_CASE("f-score: parallel planes and offset spheres") {
  CHECK(f_score(square(2, 0.0), square(2, 0.1), 0.05, {20000, 1}) == 0.0);
  const Mesh a = make_icosphere(0.5, 4), b = make_icosphere(0.5, 4, {0.04, 0, 0});
  CHECK(f_score(a, b, 0.05, {100000, 3}) > 0.99);
  CHECK(f_score(Mesh{}, a) == 0.0);
}

TEST_CASE("chamfer: point sets, concentric spheres, symmetry and scaling") {
  CHECK(chamfer_points({{0, 0, 0}}, {{0.3, 0.4, 0}}) == doctest::Approx(0.5));
  const std::vector<Vec3> same = {{0.1, 0.2, 0.3}, {-0.4, 0.5, 0.0}};
  CHECK(chamfer_points(same, same) == 0.0);

  const Mesh a = make_icosphere(0.5, 5), b = make_icosphere(0.52, 5);
  const double cd = chamfer(a, b, {100000, 4});
  CHECK(std::abs(cd - 0.02) <= 0.002);
  CHECK(chamfer(b, a, {100000, 4}) == doctest::Approx(cd).epsilon(1e-12));
  CHECK(chamfer(scaled(a, 0.5), scaled(b, 0.5), {100000, 4}) == doctest::Approx(0.5 * cd).epsilon(1e-9));
  CHECK_THROWS_AS(chamfer(Mesh{}, a), ConfigError);
}

TEST_CASE("normal consistency: orthogonal planes and decimated sphere") {
  CHECK(normal_consistency(square(2, 0.0), square(0, 0.0), {20000, 1}) < 0.05);
  CHECK(normal_consistency(make_icosphere(0.5, 5), make_icosphere(0.5, 3), {100000, 2}) > 0.98);
}

TEST_CASE("surface IoU matches a dense voxel oracle on concentric spheres") {
  const Mesh a = make_icosphere(0.5, 5), b = make_icosphere(0.52, 5);
  const double iou = surface_iou(a, b, 0.01, 256);
  CHECK(iou < 0.2);
  // Oracle on the analytic spheres.
  const int V = 256;
  size_t inter = 0, uni = 0;
  for (int i = 0; i < V; ++i) {
    for (int j = 0; j < V; ++j) {
      for (int k = 0; k < V; ++k) {
        const double r = norm(Vec3{-1.0 + (i + 0.5) * 2.0 / V, -1.0 + (j + 0.5) * 2.0 / V, -1.0 + (k + 0.5) * 2.0 / V});
        const bool in_a = std::abs(r - 0.5) < 0.01, in_b = std::abs(r - 0.52) < 0.01;
        inter += in_a && in_b;
        uni += in_a || in_b;
      }
    }
  }
  CHECK(std::abs(iou - double(inter) / double(uni)) < 0.02);

  const Mesh far = make_icosphere(0.1, 2, {0.8, 0.8, 0.8});
  CHECK(surface_iou(make_icosphere(0.1, 2, {-0.8, -0.8, -0.8}), far) == 0.0);
  CHECK(surface_iou(a, a) == 1.0);
}

TEST_CASE("metrics are symmetric under argument swap") {
  const Mesh a = make_icosphere(0.5, 3), b = make_box_mesh({0.4, 0.35, 0.45});
  const MetricOptions opt{20000, 5, 0.05, 0.01, 128, false};
  const MetricReport ab = evaluate(a, b, opt), ba = evaluate(b, a, opt);
  CHECK(ab.f_score == doctest::Approx(ba.f_score).epsilon(1e-12));
  CHECK(ab.chamfer_x10k == doctest::Approx(ba.chamfer_x10k).epsilon(1e-12));
  CHECK(ab.normal_consistency == doctest::Approx(ba.normal_consistency).epsilon(1e-12));
  CHECK(ab.surface_iou == doctest::Approx(ba.surface_iou).epsilon(1e-12));
}

TEST_CASE("metric report json and table") {
  MetricReport r;
  r.triplane_res = 32;
  r.grid_res = 8;
  r.f_score = 0.9;
  const auto j = r.to_json();
  CHECK(j["provenance"]["latent_tokens"] == 3584);
  CHECK(j["f_score"] == 0.9);
  const std::string table = format_metric_table({r});
  CHECK(table.find("3584") != std::string::npos);
  CHECK(table.find("Surface IoU") != std::string::npos);

  const MetricReport empty = evaluate(Mesh{}, make_icosphere(0.5, 1));
  CHECK(empty.f_score == 0.0);
  CHECK(empty.to_json()["chamfer_x10000"].is_null());
}
