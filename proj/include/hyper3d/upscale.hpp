#pragma once

#include <torch/torch.h>

#include "hyper3d/vae.hpp"

namespace hyper3d {

enum class TokenUpsampling {
  /// Bilinear/trilinear interpolation plus a nearest-neighbour correction so
  /// that average pooling the result back to the old resolution returns the
  /// original tokens exactly.
  MeanPreserving,
  /// Plain bilinear/trilinear interpolation (texel-centre aligned).
  Interpolate,
};

/// Plane tokens [3 r^2, C] in canonical order -> [3 r_new^2, C].
torch::Tensor upsample_plane_tokens(const torch::Tensor& tokens, int res, int new_res, TokenUpsampling mode);
/// Grid tokens [r^3, C] -> [r_new^3, C].
torch::Tensor upsample_grid_tokens(const torch::Tensor& tokens, int res, int new_res, TokenUpsampling mode);
/// Average pooling back to a coarser resolution (the inverse check).
torch::Tensor downsample_plane_tokens(const torch::Tensor& tokens, int res, int new_res);
torch::Tensor downsample_grid_tokens(const torch::Tensor& tokens, int res, int new_res);

/// Builds a model at (r_T', r_G') whose learnable tokens are upsampled from
/// `model` and whose other parameters are copied unchanged. Both targets must
/// be integer multiples of the current resolutions and not smaller; a model
/// without a grid can only be upscaled to one without a grid.
VAEModel upscale_tokens(const VAEModel& model, int new_triplane_res, int new_grid_res,
                        TokenUpsampling mode = TokenUpsampling::MeanPreserving);

}  // namespace hyper3d
