#include <doctest.h>

#include <cmath>
#include <random>

#include "hyper3d/errors.hpp"
#include "hyper3d/representation.hpp"

using namespace hyper3d;

namespace {

HybridTriplane random_triplane(int c, int r, int rg, uint64_t seed) {
  HybridTriplane h(c, r, rg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n;
  for (float& v : h.planes()) v = n(rng);
  for (float& v : h.grid()) v = n(rng);
  return h;
}

double texel_center(int i, int r) { return -1.0 + (i + 0.5) * 2.0 / r; }

// Scalar reference: continuous texel coordinate, clamped, then separable lerp.
double lerp_coord(double x, int r, int& i0, int& i1) {
  double u = (x + 1.0) / 2.0 * r - 0.5;
  u = std::min(std::max(u, 0.0), r - 1.0);
  i0 = static_cast<int>(u);
  i1 = std::min(i0 + 1, r - 1);
  return u - i0;
}

double oracle_plane(const HybridTriplane& h, Plane p, int c, const Vec3& q) {
  const int au = kPlaneAxes[static_cast<int>(p)][0], av = kPlaneAxes[static_cast<int>(p)][1];
  int u0, u1, v0, v1;
  const double wu = lerp_coord(q[au], h.res(), u0, u1);
  const double wv = lerp_coord(q[av], h.res(), v0, v1);
  double acc = 0.0;
  acc += (1 - wu) * (1 - wv) * h.texel(p, c, v0, u0);
  acc += wu * (1 - wv) * h.texel(p, c, v0, u1);
  acc += (1 - wu) * wv * h.texel(p, c, v1, u0);
  acc += wu * wv * h.texel(p, c, v1, u1);
  return acc;
}

double oracle_grid(const HybridTriplane& h, int c, const Vec3& q) {
  int x[2], y[2], z[2];
  const double wx = lerp_coord(q.x, h.grid_res(), x[0], x[1]);
  const double wy = lerp_coord(q.y, h.grid_res(), y[0], y[1]);
  const double wz = lerp_coord(q.z, h.grid_res(), z[0], z[1]);
  double acc = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int d = 0; d < 2; ++d) {
        acc += (a ? wx : 1 - wx) * (b ? wy : 1 - wy) * (d ? wz : 1 - wz) * h.voxel(c, x[a], y[b], z[d]);
      }
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("token accounting") {
  CHECK(token_length(32, 8) == 3584);
  CHECK(token_length(64, 16) == 16384);
  CHECK(token_length(36, 0) == 3888);
  CHECK(token_length(74, 0) == 16428);
  CHECK(token_length(32, 16) == 7168);
  const TokenLayout l{32, 16};
  CHECK(l.triplane_tokens() == 3072);
  CHECK(l.grid_tokens() == 4096);
}

TEST_CASE("token layout indices are canonical") {
  const TokenLayout l{3, 2};
  CHECK(l.plane_token(0, 0, 0) == 0);
  CHECK(l.plane_token(0, 0, 1) == 1);
  CHECK(l.plane_token(0, 1, 0) == 3);
  CHECK(l.plane_token(1, 0, 0) == 9);
  CHECK(l.grid_token(0, 0, 0) == 27);
  CHECK(l.grid_token(0, 0, 1) == 28);
  CHECK(l.grid_token(1, 0, 0) == 31);
}

TEST_CASE("token/field reshape round trip") {
  for (auto [rt, rg, c] : {std::tuple{2, 1, 3}, std::tuple{4, 2, 5}, std::tuple{5, 0, 2}, std::tuple{8, 4, 16}}) {
    const TokenLayout l{rt, rg};
    std::vector<float> tokens(static_cast<size_t>(l.size() * c));
    for (size_t i = 0; i < tokens.size(); ++i) tokens[i] = static_cast<float>(i);
    const auto fields = tokens_to_fields(l, c, tokens);
    CHECK(fields_to_tokens(l, c, fields) == tokens);
    // Channel 1 of the XY texel (v=1,u=0) is token plane_token(0,1,0), channel 1.
    if (c > 1) {
      const int64_t T = l.triplane_tokens();
      CHECK(fields[static_cast<size_t>(1 * T + rt)] == tokens[static_cast<size_t>(l.plane_token(0, 1, 0) * c + 1)]);
    }
  }
}

TEST_CASE("texel centres and lattice points return stored features") {
  const HybridTriplane h = random_triplane(4, 8, 4, 1);
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      std::vector<float> fxy(4), fyz(4), fxz(4);
      query_triplane(h, {texel_center(u, 8), texel_center(v, 8), texel_center(u, 8)}, fxy, fyz, fxz);
      for (int c = 0; c < 4; ++c) CHECK(std::abs(fxy[c] - h.texel(Plane::XY, c, v, u)) <= 1e-6);
    }
  }
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) {
      for (int z = 0; z < 4; ++z) {
        std::vector<float> g(4);
        query_grid(h, {texel_center(x, 4), texel_center(y, 4), texel_center(z, 4)}, g);
        for (int c = 0; c < 4; ++c) CHECK(std::abs(g[c] - h.voxel(c, x, y, z)) <= 1e-6);
      }
    }
  }
}

TEST_CASE("midpoints interpolate to means") {
  const HybridTriplane h = random_triplane(3, 8, 4, 2);
  const double mx = 0.5 * (texel_center(2, 8) + texel_center(3, 8));
  const double my = 0.5 * (texel_center(5, 8) + texel_center(6, 8));
  std::vector<float> fxy(3), fyz(3), fxz(3);
  query_triplane(h, {mx, my, 0.0}, fxy, fyz, fxz);
  for (int c = 0; c < 3; ++c) {
    const double mean = 0.25 * (h.texel(Plane::XY, c, 5, 2) + h.texel(Plane::XY, c, 5, 3) + h.texel(Plane::XY, c, 6, 2) +
                                h.texel(Plane::XY, c, 6, 3));
    CHECK(std::abs(fxy[c] - mean) <= 1e-6);
  }
  const Vec3 q{0.5 * (texel_center(1, 4) + texel_center(2, 4)), 0.5 * (texel_center(0, 4) + texel_center(1, 4)),
               0.5 * (texel_center(2, 4) + texel_center(3, 4))};
  std::vector<float> g(3);
  query_grid(h, q, g);
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (int a = 0; a < 8; ++a) mean += h.voxel(c, 1 + (a & 1), (a >> 1) & 1, 2 + ((a >> 2) & 1)) / 8.0;
    CHECK(std::abs(g[c] - mean) <= 1e-6);
  }
}

TEST_CASE("random queries match scalar oracles") {
  const HybridTriplane h = random_triplane(3, 16, 8, 3);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const Vec3 q{u(rng), u(rng), u(rng)};
    const auto f = query_hybrid(h, q);
    REQUIRE(f.size() == 12);
    for (int c = 0; c < 3; ++c) {
      CHECK(std::abs(f[c] - oracle_plane(h, Plane::XY, c, q)) <= 1e-6);
      CHECK(std::abs(f[3 + c] - oracle_plane(h, Plane::YZ, c, q)) <= 1e-6);
      CHECK(std::abs(f[6 + c] - oracle_plane(h, Plane::XZ, c, q)) <= 1e-6);
      CHECK(std::abs(f[9 + c] - oracle_grid(h, c, q)) <= 1e-6);
    }
  }
}

TEST_CASE("constant planes, zero grid and grid-off width") {
  HybridTriplane h(8, 4, 2);
  for (float& v : h.planes()) v = 2.5f;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const auto f = query_hybrid(h, {u(rng), u(rng), u(rng)});
    REQUIRE(f.size() == 32);
    for (int c = 0; c < 24; ++c) CHECK(f[c] == doctest::Approx(2.5));
    for (int c = 24; c < 32; ++c) CHECK(f[c] == 0.0f);
  }
  const HybridTriplane naive = random_triplane(8, 4, 0, 6);
  CHECK(naive.feature_dim() == 24);
  CHECK(query_hybrid(naive, {0.1, 0.2, 0.3}).size() == 24);
  std::vector<float> g(8);
  CHECK_THROWS_AS(query_grid(naive, {0, 0, 0}, g), ConfigError);
}

TEST_CASE("queries reject points outside the domain and invalid shapes") {
  const HybridTriplane h = random_triplane(2, 4, 2, 7);
  CHECK_THROWS_AS(query_hybrid(h, {1.5, 0, 0}), ConfigError);
  CHECK_NOTHROW(query_hybrid(h, {1.0, -1.0, 1.0}));
  CHECK_THROWS_AS(HybridTriplane(2, 4, 8), ConfigError);
}

TEST_CASE("query is Lipschitz continuous") {
  const HybridTriplane h = random_triplane(4, 8, 4, 8);
  float fmax = 0.0f;
  for (float v : h.planes()) fmax = std::max(fmax, std::abs(v));
  for (float v : h.grid()) fmax = std::max(fmax, std::abs(v));
  // Each component changes by at most 2*max|f| per texel width along each axis.
  const double L = 4.0 * 3.0 * 2.0 * fmax * 8.0 / 2.0 * std::sqrt(3.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.99, 0.99);
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    for (int t = 0; t < 200; ++t) {
      const Vec3 q{u(rng), u(rng), u(rng)};
      const Vec3 q2 = q + Vec3{eps, -eps, eps} / std::sqrt(3.0);
      const auto a = query_hybrid(h, q), b = query_hybrid(h, q2);
      double d = 0.0;
      for (size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
      CHECK(std::sqrt(d) <= L * eps);
    }
  }
}
