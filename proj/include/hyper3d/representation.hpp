#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hyper3d/geometry.hpp"

namespace hyper3d {

/// Latent token count of a hybrid triplane: 3 r_T^2 triplane tokens plus
/// r_G^3 grid tokens. r_G = 0 is the plain triplane.
int64_t token_length(int64_t triplane_res, int64_t grid_res);

/// Canonical token order: triplane tokens first, plane-major (XY, YZ, XZ),
/// row-major within a plane (row = v, column = u); then grid tokens with x
/// slowest and z fastest.
struct TokenLayout {
  int triplane_res = 0;
  int grid_res = 0;

  int64_t triplane_tokens() const { return 3LL * triplane_res * triplane_res; }
  int64_t grid_tokens() const { return static_cast<int64_t>(grid_res) * grid_res * grid_res; }
  int64_t size() const { return token_length(triplane_res, grid_res); }
  int64_t plane_token(int plane, int v, int u) const {
    return (static_cast<int64_t>(plane) * triplane_res + v) * triplane_res + u;
  }
  int64_t grid_token(int x, int y, int z) const {
    return triplane_tokens() + (static_cast<int64_t>(x) * grid_res + y) * grid_res + z;
  }
};

/// Token-major [L x C] <-> channel-major planes [C x 3r x r] followed by
/// grid [C x r^3]. The output of `tokens_to_fields` stacks both blocks.
std::vector<float> tokens_to_fields(const TokenLayout& layout, int channels, std::span<const float> tokens);
std::vector<float> fields_to_tokens(const TokenLayout& layout, int channels, std::span<const float> fields);

/// Plane axes. XY samples (u=x, v=y), YZ samples (u=y, v=z), XZ samples (u=x, v=z).
enum class Plane : int { XY = 0, YZ = 1, XZ = 2 };
inline constexpr std::array<std::array<int, 2>, 3> kPlaneAxes = {{{0, 1}, {1, 2}, {0, 2}}};

/// Decoded hybrid triplane [T, G]: three C x R x R planes and a
/// C x R_G x R_G x R_G grid (absent when R_G = 0). Texel i of a length-R axis
/// is centred at -1 + (i + 0.5) * 2 / R; samples outside the outer texel
/// centres clamp to the border texel.
class HybridTriplane {
 public:
  HybridTriplane() = default;
  HybridTriplane(int channels, int res, int grid_res);
  HybridTriplane(int channels, int res, int grid_res, std::vector<float> planes, std::vector<float> grid);

  int channels() const { return channels_; }
  int res() const { return res_; }
  int grid_res() const { return grid_res_; }
  bool has_grid() const { return grid_res_ > 0; }
  /// Feature width of query_hybrid: 4C with a grid, 3C without.
  int feature_dim() const { return (has_grid() ? 4 : 3) * channels_; }

  /// Planes stored [plane][c][v][u]; grid stored [c][x][y][z].
  std::span<float> planes() { return planes_; }
  std::span<const float> planes() const { return planes_; }
  std::span<float> grid() { return grid_; }
  std::span<const float> grid() const { return grid_; }
  float& texel(Plane p, int c, int v, int u);
  float texel(Plane p, int c, int v, int u) const;
  float& voxel(int c, int x, int y, int z);
  float voxel(int c, int x, int y, int z) const;

 private:
  int channels_ = 0;
  int res_ = 0;
  int grid_res_ = 0;
  std::vector<float> planes_;
  std::vector<float> grid_;
};

/// Bilinear lookups on the three planes; each output span has C entries.
void query_triplane(const HybridTriplane& h, const Vec3& q, std::span<float> f_xy, std::span<float> f_yz,
                    std::span<float> f_xz);
/// Trilinear lookup on the grid.
void query_grid(const HybridTriplane& h, const Vec3& q, std::span<float> g);
/// F_q = Concat(f_XY, f_YZ, f_XZ, g); feature_dim() entries.
void query_hybrid(const HybridTriplane& h, const Vec3& q, std::span<float> out);
std::vector<float> query_hybrid(const HybridTriplane& h, const Vec3& q);

}  // namespace hyper3d
