#pragma once

#include <array>
#include <filesystem>
#include <string>

#include <json.hpp>
#include <torch/torch.h>

#include "hyper3d/extractor.hpp"
#include "hyper3d/layers.hpp"
#include "hyper3d/representation.hpp"

namespace hyper3d {

struct VAEConfig {
  int triplane_res = 32;  // r_T
  int grid_res = 8;       // r_G; 0 is the naive triplane
  int token_width = 1024;  // C_e
  int latent_channels = 16;  // C_z

  int encoder_blocks = 4;       // cross-attention + self-attention blocks
  int encoder_self_layers = 8;  // trailing self-attention layers
  int encoder_heads = 16;
  int encoder_head_dim = 64;
  int decoder_self_layers = 8;
  int decoder_heads = 16;
  int decoder_head_dim = 32;
  int ff_mult = 4;

  int conv_channels = 256;    // channels entering each conv branch
  int feature_channels = 32;  // C of the decoded planes and grid
  int res_blocks = 5;         // per branch, spread over the upsampling stages
  int mlp_hidden = 64;
  int mlp_layers = 5;

  int num_frequencies = 8;
  int octree_level = 6;
  int octree_channels = 64;  // C_oct
  int input_points = 0;      // 0: use every leaf; otherwise subsample or pad to this count

  static constexpr int kUpsampleStages = 3;

  bool grid_off() const { return grid_res == 0; }
  int decoded_res() const { return triplane_res << kUpsampleStages; }
  int decoded_grid_res() const { return grid_res << kUpsampleStages; }
  int64_t tokens() const { return token_length(triplane_res, grid_res); }
  int input_channels() const { return fourier_channels(num_frequencies) + octree_channels; }
  int decoder_width() const { return decoder_heads * decoder_head_dim; }
  /// Residual blocks before each upsampling stage and at the output resolution.
  std::array<int, kUpsampleStages + 1> res_blocks_per_stage() const;

  void validate() const;
  nlohmann::json to_json() const;
  static VAEConfig from_json(const nlohmann::json& j);
};

/// Named presets: "paper" (layer counts and widths as published, r_T=32,
/// r_G=8), "tiny" (r_T=8, r_G=4, overfit and gradient tests), "desk"
/// (r_T=32, r_G=8 at CPU scale) and "desk-large" (r_T=64, r_G=16 at CPU
/// scale).
VAEConfig vae_preset(const std::string& name);

struct Posterior {
  torch::Tensor mu;      // [L, C_z]
  torch::Tensor logvar;  // [L, C_z], clamped to [-30, 20]
};

/// Decoded hybrid triplane as tensors: planes [C, 3R, R] stacked XY, YZ, XZ
/// along the rows; grid [C, R_G, R_G, R_G] indexed [c][x][y][z], undefined
/// when the grid is off.
struct DecodedFields {
  torch::Tensor planes;
  torch::Tensor grid;
};

/// 2D or 3D convolutional upsampler: residual blocks interleaved with three
/// x2 transposed convolutions (kernel 2, stride 2), channels halving per
/// stage down to the output width.
class UpsamplerImpl : public torch::nn::Module {
 public:
  UpsamplerImpl(const VAEConfig& config, int dims);
  torch::Tensor forward(torch::Tensor x);

 private:
  torch::nn::ModuleList stages_{nullptr};
};
TORCH_MODULE(Upsampler);

class VAEModelImpl : public torch::nn::Module {
 public:
  explicit VAEModelImpl(const VAEConfig& config);

  const VAEConfig& config() const { return config_; }
  /// Learnable query tokens e = [e_T; e_G], [L, C_e].
  torch::Tensor tokens() const;
  torch::Tensor& triplane_tokens() { return triplane_tokens_; }
  torch::Tensor& grid_tokens() { return grid_tokens_; }

  /// P: [N, input_channels]. Throws ConfigError for an empty P.
  Posterior encode(const torch::Tensor& points);
  /// z: [L, C_z]. Throws ConfigError when L disagrees with the config.
  DecodedFields decode(const torch::Tensor& z);
  /// F_q = [f_XY, f_YZ, f_XZ, g] per point, [M, 4C] (or [M, 3C] with the grid off).
  torch::Tensor query(const DecodedFields& fields, const torch::Tensor& points) const;
  /// Geometry MLP logits, [M].
  torch::Tensor predict_occupancy(const DecodedFields& fields, const torch::Tensor& points);

  torch::nn::Sequential& geometry_mlp() { return mlp_; }

 private:
  VAEConfig config_;
  torch::Tensor triplane_tokens_, grid_tokens_;
  torch::nn::Linear input_proj_{nullptr};
  torch::nn::ModuleList encoder_blocks_{nullptr}, encoder_layers_{nullptr};
  torch::nn::LayerNorm head_norm_{nullptr};
  torch::nn::Linear head_{nullptr};
  torch::nn::Linear decoder_in_{nullptr};
  torch::nn::ModuleList decoder_layers_{nullptr};
  torch::nn::LayerNorm decoder_norm_{nullptr};
  torch::nn::Linear plane_proj_{nullptr}, grid_proj_{nullptr};
  Upsampler plane_up_{nullptr}, grid_up_{nullptr};
  torch::nn::Sequential mlp_{nullptr};
};
TORCH_MODULE(VAEModel);

/// Builds a model with deterministic parameters from `seed`.
VAEModel make_vae(const VAEConfig& config, uint64_t seed);

/// z = mu + exp(logvar / 2) * eps with eps ~ N(0, I) drawn from `seed`.
torch::Tensor reparameterize(const torch::Tensor& mu, const torch::Tensor& logvar, uint64_t seed);

struct VAELoss {
  torch::Tensor total, bce, kl;
};
/// bce: mean soft-target binary cross-entropy on logits; kl: mean over tokens
/// and channels of 0.5 (mu^2 + exp(logvar) - logvar - 1); total = bce + lambda kl.
/// Throws ConfigError for targets outside [0, 1] or negative lambda.
VAELoss vae_loss(const torch::Tensor& logits, const torch::Tensor& targets, const torch::Tensor& mu,
                 const torch::Tensor& logvar, double lambda);

HybridTriplane to_hybrid(const DecodedFields& fields);
DecodedFields from_hybrid(const HybridTriplane& h);

/// Per leaf at the configured level: Fourier(centre) followed by its octree
/// feature. Channel count = 3 + 6 F + C_oct.
PointSet build_input(const SignedField& field, const OctreeFeatureExtractor& extractor, const VAEConfig& config);
PointSet build_input(const OctreeFeatures& features, const VAEConfig& config);
/// Rows as a [N, C] float tensor. With `input_points` > 0 the rows are
/// subsampled without replacement (or padded by repetition) to that count
/// using `seed`.
torch::Tensor input_tensor(const PointSet& input, const VAEConfig& config, uint64_t seed);
torch::Tensor points_tensor(std::span<const Vec3> points);

void save_vae(const std::filesystem::path& path, VAEModel& model, const nlohmann::json& extra = nlohmann::json::object());
VAEModel load_vae(const std::filesystem::path& path);
/// Loads a checkpoint and checks it against an expected latent layout.
VAEModel load_vae(const std::filesystem::path& path, int expected_triplane_res, int expected_grid_res);

}  // namespace hyper3d
