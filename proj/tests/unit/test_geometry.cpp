#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "hyper3d/errors.hpp"
#include "hyper3d/geometry.hpp"
#include "hyper3d/obj_io.hpp"
#include "hyper3d/shape_spec.hpp"

using namespace hyper3d;

namespace {

Vec3 random_point(std::mt19937_64& rng, double extent = 1.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  return {u(rng), u(rng), u(rng)};
}

// Dense samples on the surface of an axis-aligned box, grid spacing 2h/(n-1)
// per face; the face centres are always included for odd n.
std::vector<Vec3> box_surface_samples(Vec3 c, Vec3 h, int n) {
  std::vector<Vec3> out;
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    for (int side = -1; side <= 1; side += 2) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          Vec3 p = c;
          p[axis] += side * h[axis];
          p[u] += h[u] * (-1.0 + 2.0 * i / (n - 1));
          p[v] += h[v] * (-1.0 + 2.0 * j / (n - 1));
          out.push_back(p);
        }
      }
    }
  }
  return out;
}

std::vector<Vec3> sphere_surface_samples(Vec3 c, double r, int n) {
  std::vector<Vec3> out;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / n;
    const double rr = std::sqrt(1.0 - y * y);
    out.push_back(c + Vec3{std::cos(golden * i) * rr, y, std::sin(golden * i) * rr} * r);
  }
  // Include the poles of every axis so axis-aligned queries hit samples exactly.
  for (int a = 0; a < 3; ++a) {
    Vec3 d{};
    d[a] = r;
    out.push_back(c + d);
    out.push_back(c - d);
  }
  return out;
}

}  // namespace

TEST_CASE("sphere sdf at centre and surface") {
  const SignedField f = analytic_shape(ShapeSpec::sphere(0.5));
  CHECK(f.sdf({0, 0, 0}) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(std::abs(f.sdf({0.5, 0, 0})) < 1e-12);
}

TEST_CASE("sphere sdf magnitude equals euclidean distance to the surface") {
  const Vec3 c{0.1, -0.2, 0.05};
  const SignedField f = analytic_shape(ShapeSpec::sphere(0.4, c));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 p = random_point(rng);
    CHECK(std::abs(std::abs(f.sdf(p)) - std::abs(norm(p - c) - 0.4)) < 1e-6);
  }
}

TEST_CASE("csg union distance matches brute force over surface samples") {
  const ShapeSpec spec = ShapeSpec::csg(ShapeSpec::Kind::Union,
                                        {ShapeSpec::sphere(0.3), ShapeSpec::box({0.2, 0.2, 0.2}, {0.5, 0, 0})});
  const SignedField f = analytic_shape(spec);
  auto samples = sphere_surface_samples({}, 0.3, 4000);
  const auto box = box_surface_samples({0.5, 0, 0}, {0.2, 0.2, 0.2}, 41);
  samples.insert(samples.end(), box.begin(), box.end());
  const Vec3 q{0.9, 0, 0};
  double best = 1e9;
  for (const Vec3& s : samples) best = std::min(best, norm(s - q));
  CHECK(std::abs(f.sdf(q) - best) < 1e-6);
  CHECK(f.sdf(q) == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("primitive sdfs agree with surface sampling outside the shape") {
  // Outside any primitive, the sdf equals the distance to the nearest surface
  // sample up to the sampling density.
  const ShapeSpec box = ShapeSpec::box({0.3, 0.2, 0.25}, {0.1, 0.0, -0.1});
  const SignedField f = analytic_shape(box);
  const auto samples = box_surface_samples(box.center, box.half_extent, 81);
  std::mt19937_64 rng(11);
  int checked = 0;
  while (checked < 200) {
    const Vec3 p = random_point(rng);
    const double d = f.sdf(p);
    if (d <= 0.05) continue;
    double best = 1e9;
    for (const Vec3& s : samples) best = std::min(best, norm(s - p));
    CHECK(best - d >= -1e-9);
    CHECK(best - d < 0.01);
    ++checked;
  }
}

TEST_CASE("analytic_shape rejects shapes leaving the unit cube and unknown types") {
  CHECK_THROWS_AS(analytic_shape(ShapeSpec::sphere(0.5, {0.7, 0, 0})), ConfigError);
  CHECK_THROWS_AS(shape_from_json(nlohmann::json{{"type", "cone"}}), ConfigError);
  CHECK_NOTHROW(analytic_shape(ShapeSpec::torus(0.5, 0.2)));
}

TEST_CASE("shape json round trip") {
  const ShapeSpec spec = ShapeSpec::csg(
      ShapeSpec::Kind::Difference,
      {ShapeSpec::box({0.5, 0.4, 0.3}), ShapeSpec::torus(0.3, 0.1, {0.1, 0, 0}, 1),
       ShapeSpec::capsule({-0.2, 0, 0}, {0.2, 0.1, 0}, 0.1)});
  const ShapeSpec back = shape_from_json(shape_to_json(spec));
  const SignedField a = analytic_shape(spec), b = analytic_shape(back);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p = random_point(rng);
    CHECK(a.sdf(p) == b.sdf(p));
  }
}

TEST_CASE("synthetic corpus shapes are valid and non-degenerate") {
  for (const NamedShape& s : make_synthetic_corpus(24, 7)) {
    INFO(s.name);
    const SignedField f = analytic_shape(s.spec);
    // Every shape has some interior inside [-1,1]^3 and positive distance at the corners.
    CHECK(f.sdf({1, 1, 1}) > 0.0);
    double inside = 1e9;
    for (int i = -8; i <= 8; ++i) {
      for (int j = -8; j <= 8; ++j) {
        for (int k = -8; k <= 8; ++k) inside = std::min(inside, f.sdf(Vec3{i / 8.0, j / 8.0, k / 8.0} * 0.9));
      }
    }
    CHECK(inside < 0.0);
  }
}

TEST_CASE("mesh_to_field approximates the analytic sphere") {
  const Mesh ico = make_icosphere(0.5, 4);
  const SignedField f = mesh_to_field(ico, 64);
  const double cell = 2.0 / 64;
  CHECK(f.sdf({0, 0, 0}) < 0.0);
  CHECK(std::abs(f.sdf({0.5, 0, 0})) <= 2 * cell);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p = random_point(rng, 0.95);
    CHECK(std::abs(f.sdf(p) - (norm(p) - 0.5)) <= 2 * cell);
  }
}

TEST_CASE("mesh_to_field errors") {
  Mesh tri;
  tri.vertices = {{0, 0, 0}, {0.5, 0, 0}, {0, 0.5, 0}};
  tri.faces = {{0, 1, 2}};
  CHECK_THROWS_AS(mesh_to_field(tri, 32), ConfigError);
  CHECK_THROWS_AS(mesh_to_field(Mesh{}, 32), ConfigError);
  CHECK_THROWS_AS(mesh_to_field(make_icosphere(0.5, 2), 8), ConfigError);
}

TEST_CASE("sample_surface is area uniform on a cube") {
  const Mesh cube = make_box_mesh({0.5, 0.5, 0.5});
  const PointSet s = sample_surface(cube, 6000, 42);
  REQUIRE(s.size() == 6000);
  int counts[6] = {0, 0, 0, 0, 0, 0};
  for (size_t i = 0; i < s.size(); ++i) {
    const Vec3& p = s.positions[i];
    int axis = 0;
    for (int a = 1; a < 3; ++a) {
      if (std::abs(p[a]) > std::abs(p[axis])) axis = a;
    }
    CHECK(std::abs(std::abs(p[axis]) - 0.5) < 1e-9);
    counts[2 * axis + (p[axis] > 0)]++;
    // Face normal is the outward axis direction.
    CHECK(s.normals[i][axis] == doctest::Approx(p[axis] > 0 ? 1.0 : -1.0));
  }
  // Binomial(6000, 1/6): sigma = sqrt(6000 * 1/6 * 5/6) ~ 28.9, 3 sigma ~ 87 < 120.
  for (int c : counts) CHECK(std::abs(c - 1000) <= 120);
}

TEST_CASE("sample_surface single triangle and determinism") {
  Mesh tri;
  tri.vertices = {{0, 0, 0}, {0.5, 0, 0}, {0, 0.5, 0}};
  tri.faces = {{0, 1, 2}};
  const PointSet one = sample_surface(tri, 1, 1);
  const Vec3 p = one.positions[0];
  CHECK(p.x >= 0.0);
  CHECK(p.y >= 0.0);
  CHECK(p.x + p.y <= 0.5 + 1e-12);
  CHECK(p.z == 0.0);

  const Mesh ico = make_icosphere(0.5, 2);
  const PointSet a = sample_surface(ico, 500, 77), b = sample_surface(ico, 500, 77);
  CHECK(a.positions == b.positions);
  CHECK(a.normals == b.normals);

  Mesh flat;
  flat.vertices = {{0, 0, 0}, {0.5, 0, 0}, {1.0, 0, 0}};
  flat.faces = {{0, 1, 2}};
  CHECK_THROWS_AS(sample_surface(flat, 10, 1), ConfigError);
}

TEST_CASE("fourier embedding layout") {
  CHECK(fourier_channels(8) == 51);
  PointSet ps;
  ps.positions = {{0, 0, 0}, {1, 0, 0}, {0.3, -0.7, 0.2}};
  const PointSet e = fourier_embed(ps, 8);
  REQUIRE(e.channels == 51);
  for (int k = 0; k < 8; ++k) {
    for (int a = 0; a < 3; ++a) {
      CHECK(e.row(0)[3 + 6 * k + a] == 0.0f);
      CHECK(e.row(0)[3 + 6 * k + 3 + a] == 1.0f);
    }
  }
  CHECK(std::abs(e.row(1)[3]) < 1e-6);
  CHECK(e.row(1)[6] == doctest::Approx(-1.0).epsilon(1e-6));
  for (int k = 0; k < 8; ++k) {
    for (int a = 0; a < 3; ++a) {
      const double w = std::ldexp(std::numbers::pi, k) * ps.positions[2][a];
      CHECK(e.row(2)[3 + 6 * k + a] == doctest::Approx(std::sin(w)).epsilon(1e-5));
      CHECK(e.row(2)[3 + 6 * k + 3 + a] == doctest::Approx(std::cos(w)).epsilon(1e-5));
    }
  }
  CHECK(fourier_embed(ps, 0).channels == 3);
}

TEST_CASE("semi-continuous occupancy ramp") {
  CHECK(semi_continuous_occupancy(-0.02) == 1.0);
  CHECK(semi_continuous_occupancy(0.02) == 0.0);
  CHECK(semi_continuous_occupancy(0.0) == 0.5);
  CHECK(semi_continuous_occupancy(0.01) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(semi_continuous_occupancy(-0.5) == 1.0);
  CHECK(semi_continuous_occupancy(0.5) == 0.0);

  const SignedField f = analytic_shape(ShapeSpec::sphere(0.5));
  const std::vector<Vec3> pts = {{0, 0, 0}, {0.5, 0, 0}, {0.9, 0, 0}};
  const OccupancyTarget t = occupancy_targets(f, pts);
  CHECK(t.targets == std::vector<float>{1.0f, 0.5f, 0.0f});
}

TEST_CASE("normalization") {
  const Mesh m = make_icosphere(0.3, 1, {0.2, 0.1, -0.3});
  const Mesh s = normalize_to_unit_sphere(m);
  double rmax = 0.0;
  for (const Vec3& v : s.vertices) rmax = std::max(rmax, norm(v));
  CHECK(rmax <= 1.0 + 1e-6);
  CHECK(rmax == doctest::Approx(1.0).epsilon(1e-9));
  const Mesh c = normalize_to_unit_cube(make_box_mesh({0.2, 0.1, 0.05}, {0.3, 0.3, 0.3}));
  Vec3 lo{1e9, 1e9, 1e9}, hi{-1e9, -1e9, -1e9};
  for (const Vec3& v : c.vertices) {
    lo = cwise_min(lo, v);
    hi = cwise_max(hi, v);
  }
  CHECK(hi.x == doctest::Approx(1.0));
  CHECK(lo.x == doctest::Approx(-1.0));
  CHECK(hi.y == doctest::Approx(0.5));
}

TEST_CASE("icosphere normals are unit and outward") {
  const Mesh m = make_icosphere(0.5, 3);
  for (size_t i = 0; i < m.vertices.size(); ++i) {
    CHECK(norm(m.normals[i]) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(dot(m.normals[i], m.vertices[i]) > 0.0);
  }
  for (size_t f = 0; f < m.faces.size(); ++f) {
    const Vec3 c = (m.vertices[m.faces[f][0]] + m.vertices[m.faces[f][1]] + m.vertices[m.faces[f][2]]) / 3.0;
    CHECK(dot(m.face_normal(f), c) > 0.0);
  }
}

TEST_CASE("obj round trip") {
  const Mesh m = make_icosphere(0.5, 1);
  const auto path = std::filesystem::temp_directory_path() / "hyper3d_roundtrip.obj";
  write_obj(path, m);
  const Mesh back = read_obj(path);
  REQUIRE(back.vertices.size() == m.vertices.size());
  CHECK(back.faces == m.faces);
  for (size_t i = 0; i < m.vertices.size(); ++i) CHECK(norm(back.vertices[i] - m.vertices[i]) < 1e-6);
  std::filesystem::remove(path);
}
