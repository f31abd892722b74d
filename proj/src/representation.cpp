#include "hyper3d/representation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyper3d/errors.hpp"

namespace hyper3d {

int64_t token_length(int64_t triplane_res, int64_t grid_res) {
  return 3 * triplane_res * triplane_res + grid_res * grid_res * grid_res;
}

std::vector<float> tokens_to_fields(const TokenLayout& layout, int channels, std::span<const float> tokens) {
  const int64_t L = layout.size();
  if (static_cast<int64_t>(tokens.size()) != L * channels) {
    throw ConfigError("tokens_to_fields: expected " + std::to_string(L) + " tokens of width " + std::to_string(channels));
  }
  // Channel-major blocks: planes occupy [C x T] and the grid [C x G].
  const int64_t T = layout.triplane_tokens();
  const int64_t G = layout.grid_tokens();
  std::vector<float> out(tokens.size());
  for (int64_t t = 0; t < L; ++t) {
    for (int c = 0; c < channels; ++c) {
      const int64_t dst = t < T ? c * T + t : channels * T + c * G + (t - T);
      out[static_cast<size_t>(dst)] = tokens[static_cast<size_t>(t * channels + c)];
    }
  }
  return out;
}

std::vector<float> fields_to_tokens(const TokenLayout& layout, int channels, std::span<const float> fields) {
  const int64_t L = layout.size();
  if (static_cast<int64_t>(fields.size()) != L * channels) {
    throw ConfigError("fields_to_tokens: field size does not match the token layout");
  }
  const int64_t T = layout.triplane_tokens();
  const int64_t G = layout.grid_tokens();
  std::vector<float> out(fields.size());
  for (int64_t t = 0; t < L; ++t) {
    for (int c = 0; c < channels; ++c) {
      const int64_t src = t < T ? c * T + t : channels * T + c * G + (t - T);
      out[static_cast<size_t>(t * channels + c)] = fields[static_cast<size_t>(src)];
    }
  }
  return out;
}

HybridTriplane::HybridTriplane(int channels, int res, int grid_res)
    : HybridTriplane(channels, res, grid_res,
                     std::vector<float>(3ULL * channels * res * res, 0.0f),
                     std::vector<float>(static_cast<size_t>(channels) * grid_res * grid_res * grid_res, 0.0f)) {}

HybridTriplane::HybridTriplane(int channels, int res, int grid_res, std::vector<float> planes, std::vector<float> grid)
    : channels_(channels), res_(res), grid_res_(grid_res), planes_(std::move(planes)), grid_(std::move(grid)) {
  if (channels < 1 || res < 1 || grid_res < 0) throw ConfigError("HybridTriplane: invalid dimensions");
  if (grid_res > res) throw ConfigError("HybridTriplane: grid resolution must not exceed the plane resolution");
  if (planes_.size() != 3ULL * channels * res * res) throw ConfigError("HybridTriplane: plane buffer size mismatch");
  if (grid_.size() != static_cast<size_t>(channels) * grid_res * grid_res * grid_res) {
    throw ConfigError("HybridTriplane: grid buffer size mismatch");
  }
}

float& HybridTriplane::texel(Plane p, int c, int v, int u) {
  return planes_[((static_cast<size_t>(p) * channels_ + c) * res_ + v) * res_ + u];
}
float HybridTriplane::texel(Plane p, int c, int v, int u) const {
  return planes_[((static_cast<size_t>(p) * channels_ + c) * res_ + v) * res_ + u];
}
float& HybridTriplane::voxel(int c, int x, int y, int z) {
  return grid_[((static_cast<size_t>(c) * grid_res_ + x) * grid_res_ + y) * grid_res_ + z];
}
float HybridTriplane::voxel(int c, int x, int y, int z) const {
  return grid_[((static_cast<size_t>(c) * grid_res_ + x) * grid_res_ + y) * grid_res_ + z];
}

namespace {

struct AxisSample {
  int i0;
  int i1;
  double w1;  // weight of i1
};

// Texel-centre addressing with clamp-to-border.
AxisSample axis_sample(double coord, int res) {
  const double u = std::clamp((coord + 1.0) * 0.5 * res - 0.5, 0.0, static_cast<double>(res - 1));
  const int i0 = static_cast<int>(std::floor(u));
  const int i1 = std::min(i0 + 1, res - 1);
  return {i0, i1, u - i0};
}

void check_domain(const Vec3& q) {
  constexpr double tol = 1e-9;
  for (int a = 0; a < 3; ++a) {
    if (!(std::abs(q[a]) <= 1.0 + tol)) throw ConfigError("query point lies outside [-1,1]^3");
  }
}

void bilinear(const HybridTriplane& h, Plane p, const Vec3& q, std::span<float> out) {
  const auto [au, av] = kPlaneAxes[static_cast<size_t>(p)];
  const AxisSample su = axis_sample(q[au], h.res());
  const AxisSample sv = axis_sample(q[av], h.res());
  for (int c = 0; c < h.channels(); ++c) {
    const double top = (1.0 - su.w1) * h.texel(p, c, sv.i0, su.i0) + su.w1 * h.texel(p, c, sv.i0, su.i1);
    const double bottom = (1.0 - su.w1) * h.texel(p, c, sv.i1, su.i0) + su.w1 * h.texel(p, c, sv.i1, su.i1);
    out[static_cast<size_t>(c)] = static_cast<float>((1.0 - sv.w1) * top + sv.w1 * bottom);
  }
}

}  // namespace

void query_triplane(const HybridTriplane& h, const Vec3& q, std::span<float> f_xy, std::span<float> f_yz,
                    std::span<float> f_xz) {
  check_domain(q);
  bilinear(h, Plane::XY, q, f_xy);
  bilinear(h, Plane::YZ, q, f_yz);
  bilinear(h, Plane::XZ, q, f_xz);
}

void query_grid(const HybridTriplane& h, const Vec3& q, std::span<float> g) {
  check_domain(q);
  if (!h.has_grid()) throw ConfigError("query_grid: representation has no grid");
  const AxisSample sx = axis_sample(q.x, h.grid_res());
  const AxisSample sy = axis_sample(q.y, h.grid_res());
  const AxisSample sz = axis_sample(q.z, h.grid_res());
  for (int c = 0; c < h.channels(); ++c) {
    double acc = 0.0;
    for (int corner = 0; corner < 8; ++corner) {
      const bool hx = corner & 1, hy = corner & 2, hz = corner & 4;
      const double w = (hx ? sx.w1 : 1.0 - sx.w1) * (hy ? sy.w1 : 1.0 - sy.w1) * (hz ? sz.w1 : 1.0 - sz.w1);
      acc += w * h.voxel(c, hx ? sx.i1 : sx.i0, hy ? sy.i1 : sy.i0, hz ? sz.i1 : sz.i0);
    }
    g[static_cast<size_t>(c)] = static_cast<float>(acc);
  }
}

void query_hybrid(const HybridTriplane& h, const Vec3& q, std::span<float> out) {
  const auto C = static_cast<size_t>(h.channels());
  if (out.size() != static_cast<size_t>(h.feature_dim())) throw ConfigError("query_hybrid: output span has wrong size");
  query_triplane(h, q, out.subspan(0, C), out.subspan(C, C), out.subspan(2 * C, C));
  if (h.has_grid()) query_grid(h, q, out.subspan(3 * C, C));
}

std::vector<float> query_hybrid(const HybridTriplane& h, const Vec3& q) {
  std::vector<float> out(static_cast<size_t>(h.feature_dim()));
  query_hybrid(h, q, out);
  return out;
}

}  // namespace hyper3d
