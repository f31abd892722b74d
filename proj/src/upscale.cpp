#include "hyper3d/upscale.hpp"

#include <string>

#include "hyper3d/errors.hpp"
#include "hyper3d/nn_util.hpp"

namespace hyper3d {

namespace F = torch::nn::functional;

namespace {

int scale_factor(int res, int new_res, const char* what) {
  if (new_res < res || res < 1 || new_res % res != 0) {
    throw ConfigError(std::string("upscale: ") + what + " resolution " + std::to_string(new_res) +
                      " must be an integer multiple of " + std::to_string(res) + " and not smaller");
  }
  return new_res / res;
}

// x: [N, C, ...spatial]; repeats every cell s times along each spatial axis.
torch::Tensor repeat_cells(const torch::Tensor& x, int s) {
  torch::Tensor out = x;
  for (int64_t d = 2; d < x.dim(); ++d) out = out.repeat_interleave(s, d);
  return out;
}

torch::Tensor pool(const torch::Tensor& x, int s) {
  if (x.dim() == 4) return F::avg_pool2d(x, F::AvgPool2dFuncOptions(s).stride(s));
  return F::avg_pool3d(x, F::AvgPool3dFuncOptions(s).stride(s));
}

torch::Tensor upsample(const torch::Tensor& x, int s, TokenUpsampling mode) {
  if (s == 1) return x.clone();
  std::vector<int64_t> size;
  for (int64_t d = 2; d < x.dim(); ++d) size.push_back(x.size(d) * s);
  auto opts = F::InterpolateFuncOptions().size(size).align_corners(false);
  if (x.dim() == 4) {
    opts.mode(torch::kBilinear);
  } else {
    opts.mode(torch::kTrilinear);
  }
  torch::Tensor fine = F::interpolate(x, opts);
  if (mode == TokenUpsampling::MeanPreserving) fine = fine + repeat_cells(x - pool(fine, s), s);
  return fine;
}

// [3 r^2, C] <-> [3, C, r, r]
torch::Tensor planes_view(const torch::Tensor& t, int r) {
  return t.reshape({3, r, r, t.size(1)}).permute({0, 3, 1, 2}).contiguous();
}
torch::Tensor planes_tokens(const torch::Tensor& p) {
  return p.permute({0, 2, 3, 1}).reshape({-1, p.size(1)}).contiguous();
}
// [r^3, C] <-> [1, C, r, r, r]
torch::Tensor grid_view(const torch::Tensor& t, int r) {
  return t.reshape({r, r, r, t.size(1)}).permute({3, 0, 1, 2}).unsqueeze(0).contiguous();
}
torch::Tensor grid_tokens(const torch::Tensor& g) {
  return g.squeeze(0).permute({1, 2, 3, 0}).reshape({-1, g.size(1)}).contiguous();
}

void check_rows(const torch::Tensor& t, int64_t rows, const char* what) {
  if (t.dim() != 2 || t.size(0) != rows) {
    throw ConfigError(std::string("upscale: ") + what + " tokens have shape " + shape_string(t.sizes()) +
                      ", expected " + std::to_string(rows) + " rows");
  }
}

}  // namespace

torch::Tensor upsample_plane_tokens(const torch::Tensor& tokens, int res, int new_res, TokenUpsampling mode) {
  const int s = scale_factor(res, new_res, "triplane");
  check_rows(tokens, 3LL * res * res, "plane");
  torch::NoGradGuard no_grad;
  return planes_tokens(upsample(planes_view(tokens, res), s, mode));
}

torch::Tensor upsample_grid_tokens(const torch::Tensor& tokens, int res, int new_res, TokenUpsampling mode) {
  const int s = scale_factor(res, new_res, "grid");
  check_rows(tokens, static_cast<int64_t>(res) * res * res, "grid");
  torch::NoGradGuard no_grad;
  return grid_tokens(upsample(grid_view(tokens, res), s, mode));
}

torch::Tensor downsample_plane_tokens(const torch::Tensor& tokens, int res, int new_res) {
  const int s = scale_factor(new_res, res, "triplane");
  check_rows(tokens, 3LL * res * res, "plane");
  torch::NoGradGuard no_grad;
  return planes_tokens(pool(planes_view(tokens, res), s));
}

torch::Tensor downsample_grid_tokens(const torch::Tensor& tokens, int res, int new_res) {
  const int s = scale_factor(new_res, res, "grid");
  check_rows(tokens, static_cast<int64_t>(res) * res * res, "grid");
  torch::NoGradGuard no_grad;
  return grid_tokens(pool(grid_view(tokens, res), s));
}

VAEModel upscale_tokens(const VAEModel& model, int new_triplane_res, int new_grid_res, TokenUpsampling mode) {
  const VAEConfig& old_cfg = model->config();
  scale_factor(old_cfg.triplane_res, new_triplane_res, "triplane");
  if (old_cfg.grid_off() != (new_grid_res == 0)) {
    throw ConfigError("upscale: cannot change whether the grid branch exists (r_G " + std::to_string(old_cfg.grid_res) +
                      " -> " + std::to_string(new_grid_res) + ")");
  }
  if (!old_cfg.grid_off()) scale_factor(old_cfg.grid_res, new_grid_res, "grid");

  VAEConfig cfg = old_cfg;
  cfg.triplane_res = new_triplane_res;
  cfg.grid_res = new_grid_res;
  cfg.validate();
  VAEModel out = make_vae(cfg, 0);

  torch::NoGradGuard no_grad;
  auto src = model->named_parameters();
  for (auto& item : out->named_parameters()) {
    const std::string& name = item.key();
    torch::Tensor value;
    if (name == "triplane_tokens") {
      value = upsample_plane_tokens(src[name], old_cfg.triplane_res, new_triplane_res, mode);
    } else if (name == "grid_tokens") {
      value = upsample_grid_tokens(src[name], old_cfg.grid_res, new_grid_res, mode);
    } else {
      value = src[name];
    }
    item.value().copy_(value);
  }
  for (auto& item : out->named_buffers()) item.value().copy_(model->named_buffers()[item.key()]);
  out->eval();
  return out;
}

}  // namespace hyper3d
