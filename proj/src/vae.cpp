#include "hyper3d/vae.hpp"

#include <cmath>

#include "hyper3d/archive.hpp"
#include "hyper3d/errors.hpp"
#include "hyper3d/nn_util.hpp"

namespace hyper3d {

namespace F = torch::nn::functional;

// ---------------------------------------------------------------------------
// Config

std::array<int, VAEConfig::kUpsampleStages + 1> VAEConfig::res_blocks_per_stage() const {
  std::array<int, kUpsampleStages + 1> n{};
  for (int s = 0; s < kUpsampleStages; ++s) n[static_cast<size_t>(s)] = res_blocks / kUpsampleStages + (s < res_blocks % kUpsampleStages);
  return n;
}

void VAEConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("vae config: " + what);
  };
  require(triplane_res >= 1, "triplane_res must be >= 1");
  require(grid_res >= 0, "grid_res must be >= 0");
  require(grid_res <= triplane_res, "grid_res must not exceed triplane_res");
  require(token_width >= 1 && latent_channels >= 1, "token_width and latent_channels must be positive");
  require(encoder_blocks >= 1, "encoder needs at least one cross-attention block");
  require(encoder_self_layers >= 0 && decoder_self_layers >= 0, "layer counts must be non-negative");
  require(encoder_heads >= 1 && encoder_head_dim >= 1 && decoder_heads >= 1 && decoder_head_dim >= 1,
          "head counts and dims must be positive");
  require(ff_mult >= 1, "ff_mult must be >= 1");
  require(conv_channels >= 1 && feature_channels >= 1 && res_blocks >= 0, "conv widths must be positive");
  require(mlp_hidden >= 1 && mlp_layers >= 2, "geometry MLP needs >= 2 layers");
  require(num_frequencies >= 0, "num_frequencies must be >= 0");
  require(octree_level >= 1 && octree_level <= 9, "octree_level must lie in [1, 9]");
  require(octree_channels >= 0, "octree_channels must be >= 0");
  require(input_points >= 0, "input_points must be >= 0");
}

nlohmann::json VAEConfig::to_json() const {
  return {{"triplane_res", triplane_res},
          {"grid_res", grid_res},
          {"token_width", token_width},
          {"latent_channels", latent_channels},
          {"encoder_blocks", encoder_blocks},
          {"encoder_self_layers", encoder_self_layers},
          {"encoder_heads", encoder_heads},
          {"encoder_head_dim", encoder_head_dim},
          {"decoder_self_layers", decoder_self_layers},
          {"decoder_heads", decoder_heads},
          {"decoder_head_dim", decoder_head_dim},
          {"ff_mult", ff_mult},
          {"conv_channels", conv_channels},
          {"feature_channels", feature_channels},
          {"res_blocks", res_blocks},
          {"mlp_hidden", mlp_hidden},
          {"mlp_layers", mlp_layers},
          {"num_frequencies", num_frequencies},
          {"octree_level", octree_level},
          {"octree_channels", octree_channels},
          {"input_points", input_points}};
}

VAEConfig VAEConfig::from_json(const nlohmann::json& j) {
  VAEConfig c = j.contains("preset") ? vae_preset(j.at("preset").get<std::string>()) : VAEConfig{};
  try {
#define H3D_FIELD(name) c.name = j.value(#name, c.name)
    H3D_FIELD(triplane_res);
    H3D_FIELD(grid_res);
    H3D_FIELD(token_width);
    H3D_FIELD(latent_channels);
    H3D_FIELD(encoder_blocks);
    H3D_FIELD(encoder_self_layers);
    H3D_FIELD(encoder_heads);
    H3D_FIELD(encoder_head_dim);
    H3D_FIELD(decoder_self_layers);
    H3D_FIELD(decoder_heads);
    H3D_FIELD(decoder_head_dim);
    H3D_FIELD(ff_mult);
    H3D_FIELD(conv_channels);
    H3D_FIELD(feature_channels);
    H3D_FIELD(res_blocks);
    H3D_FIELD(mlp_hidden);
    H3D_FIELD(mlp_layers);
    H3D_FIELD(num_frequencies);
    H3D_FIELD(octree_level);
    H3D_FIELD(octree_channels);
    H3D_FIELD(input_points);
#undef H3D_FIELD
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("vae config: ") + e.what());
  }
  if (j.value("grid_off", false)) c.grid_res = 0;
  c.validate();
  return c;
}

VAEConfig vae_preset(const std::string& name) {
  VAEConfig c;
  if (name == "paper") return c;
  // CPU-scale presets keep the layer structure but shrink widths and depth.
  c.token_width = 64;
  c.encoder_blocks = 1;
  c.encoder_self_layers = 1;
  c.encoder_heads = 4;
  c.encoder_head_dim = 16;
  c.decoder_self_layers = 1;
  c.decoder_heads = 4;
  c.decoder_head_dim = 16;
  c.ff_mult = 2;
  c.conv_channels = 32;
  c.feature_channels = 8;
  c.input_points = 2048;
  if (name == "tiny") {
    c.triplane_res = 8;
    c.grid_res = 4;
    return c;
  }
  // Desk scale: one shared architecture for (32,8) and (64,16) so a desk model
  // upscales directly into desk-large. At 16384 tokens each self-attention
  // pass dominates a CPU step, so only the one inside the encoder block stays.
  c.token_width = 32;
  c.encoder_self_layers = 0;
  c.encoder_heads = 1;
  c.encoder_head_dim = 8;
  c.decoder_self_layers = 0;
  c.decoder_heads = 1;
  c.decoder_head_dim = 32;  // sets the decoder width; no decoder attention runs
  c.conv_channels = 16;
  if (name == "desk") return c;
  if (name == "desk-large") {
    c.triplane_res = 64;
    c.grid_res = 16;
    return c;
  }
  throw ConfigError("unknown vae preset '" + name + "' (expected paper, tiny, desk or desk-large)");
}

// ---------------------------------------------------------------------------
// Modules

UpsamplerImpl::UpsamplerImpl(const VAEConfig& config, int dims) {
  stages_ = register_module("stages", torch::nn::ModuleList());
  const auto blocks = config.res_blocks_per_stage();
  int64_t ch = config.conv_channels;
  for (int s = 0; s <= VAEConfig::kUpsampleStages; ++s) {
    auto stage = torch::nn::Sequential();
    for (int b = 0; b < blocks[static_cast<size_t>(s)]; ++b) stage->push_back("res" + std::to_string(b), ResBlock(ch, dims));
    if (s < VAEConfig::kUpsampleStages) {
      const int64_t next = s + 1 == VAEConfig::kUpsampleStages ? config.feature_channels
                                                              : std::max<int64_t>(ch / 2, config.feature_channels);
      if (dims == 2) {
        stage->push_back("up", torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(ch, next, 2).stride(2)));
      } else {
        stage->push_back("up", torch::nn::ConvTranspose3d(torch::nn::ConvTranspose3dOptions(ch, next, 2).stride(2)));
      }
      ch = next;
    }
    stages_->push_back(stage);
  }
}

torch::Tensor UpsamplerImpl::forward(torch::Tensor x) {
  for (const auto& stage : *stages_) {
    auto seq = stage->as<torch::nn::Sequential>();
    if (!seq->is_empty()) x = seq->forward(x);
  }
  return x;
}

VAEModelImpl::VAEModelImpl(const VAEConfig& config) : config_(config) {
  config.validate();
  const int64_t Ce = config.token_width;
  const int64_t r = config.triplane_res, rg = config.grid_res;
  triplane_tokens_ = register_parameter("triplane_tokens", torch::zeros({3 * r * r, Ce}));
  if (rg > 0) grid_tokens_ = register_parameter("grid_tokens", torch::zeros({rg * rg * rg, Ce}));

  input_proj_ = register_module("input_proj", torch::nn::Linear(config.input_channels(), Ce));
  encoder_blocks_ = register_module("encoder_blocks", torch::nn::ModuleList());
  for (int i = 0; i < config.encoder_blocks; ++i) {
    encoder_blocks_->push_back(CrossSelfBlock(Ce, config.encoder_heads, config.encoder_head_dim, config.ff_mult));
  }
  encoder_layers_ = register_module("encoder_layers", torch::nn::ModuleList());
  for (int i = 0; i < config.encoder_self_layers; ++i) {
    encoder_layers_->push_back(SelfAttentionLayer(Ce, config.encoder_heads, config.encoder_head_dim, config.ff_mult));
  }
  head_norm_ = register_module("head_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({Ce})));
  head_ = register_module("head", torch::nn::Linear(Ce, 2 * config.latent_channels));

  const int64_t Cd = config.decoder_width();
  decoder_in_ = register_module("decoder_in", torch::nn::Linear(config.latent_channels, Cd));
  decoder_layers_ = register_module("decoder_layers", torch::nn::ModuleList());
  for (int i = 0; i < config.decoder_self_layers; ++i) {
    decoder_layers_->push_back(SelfAttentionLayer(Cd, config.decoder_heads, config.decoder_head_dim, config.ff_mult));
  }
  decoder_norm_ = register_module("decoder_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({Cd})));
  plane_proj_ = register_module("plane_proj", torch::nn::Linear(Cd, config.conv_channels));
  plane_up_ = register_module("plane_up", Upsampler(config, 2));
  if (rg > 0) {
    grid_proj_ = register_module("grid_proj", torch::nn::Linear(Cd, config.conv_channels));
    grid_up_ = register_module("grid_up", Upsampler(config, 3));
  }

  const int64_t feat = (rg > 0 ? 4 : 3) * config.feature_channels;
  mlp_ = register_module("mlp", torch::nn::Sequential());
  for (int i = 0; i < config.mlp_layers; ++i) {
    const int64_t in = i == 0 ? feat : config.mlp_hidden;
    const int64_t out = i + 1 == config.mlp_layers ? 1 : config.mlp_hidden;
    mlp_->push_back("fc" + std::to_string(i), torch::nn::Linear(in, out));
    if (i + 1 < config.mlp_layers) mlp_->push_back("act" + std::to_string(i), torch::nn::SiLU());
  }
}

torch::Tensor VAEModelImpl::tokens() const {
  return grid_tokens_.defined() ? torch::cat({triplane_tokens_, grid_tokens_}, 0) : triplane_tokens_;
}

Posterior VAEModelImpl::encode(const torch::Tensor& points) {
  if (points.dim() != 2 || points.size(0) == 0) throw ConfigError("encode: input point set is empty");
  if (points.size(1) != config_.input_channels()) {
    throw ConfigError("encode: input has " + std::to_string(points.size(1)) + " channels, model expects " +
                      std::to_string(config_.input_channels()));
  }
  const torch::Tensor x = input_proj_(points.to(triplane_tokens_.dtype())).unsqueeze(0);
  torch::Tensor t = tokens().unsqueeze(0);
  for (const auto& block : *encoder_blocks_) t = block->as<CrossSelfBlock>()->forward(t, x);
  for (const auto& layer : *encoder_layers_) t = layer->as<SelfAttentionLayer>()->forward(t);
  const torch::Tensor h = head_(head_norm_(t)).squeeze(0);
  const int64_t Cz = config_.latent_channels;
  return {h.slice(1, 0, Cz), h.slice(1, Cz, 2 * Cz).clamp(-30.0, 20.0)};
}

DecodedFields VAEModelImpl::decode(const torch::Tensor& z) {
  const int64_t L = config_.tokens();
  if (z.dim() != 2 || z.size(0) != L || z.size(1) != config_.latent_channels) {
    throw ConfigError("decode: latent has shape " + shape_string(z.sizes()) + " but the config (r_T=" +
                      std::to_string(config_.triplane_res) + ", r_G=" + std::to_string(config_.grid_res) + ") needs [" +
                      std::to_string(L) + ", " + std::to_string(config_.latent_channels) + "]");
  }
  torch::Tensor y = decoder_in_(z).unsqueeze(0);
  for (const auto& layer : *decoder_layers_) y = layer->as<SelfAttentionLayer>()->forward(y);
  y = decoder_norm_(y).squeeze(0);

  const int64_t r = config_.triplane_res, rg = config_.grid_res, T = 3 * r * r;
  DecodedFields out;
  // Token (p*r + v)*r + u sits at row p*r + v, column u of the stacked image.
  const torch::Tensor zt = plane_proj_(y.slice(0, 0, T)).view({3 * r, r, -1}).permute({2, 0, 1}).unsqueeze(0);
  out.planes = plane_up_(zt).squeeze(0);
  if (rg > 0) {
    const torch::Tensor zg = grid_proj_(y.slice(0, T, L)).view({rg, rg, rg, -1}).permute({3, 0, 1, 2}).unsqueeze(0);
    out.grid = grid_up_(zg).squeeze(0);
  }
  return out;
}

torch::Tensor VAEModelImpl::query(const DecodedFields& fields, const torch::Tensor& points) const {
  const auto opts = F::GridSampleFuncOptions().mode(torch::kBilinear).padding_mode(torch::kBorder).align_corners(false);
  const torch::Tensor q = points.to(fields.planes.dtype());
  const int64_t M = q.size(0);
  const int64_t R = fields.planes.size(2);
  std::vector<torch::Tensor> parts;
  for (int p = 0; p < 3; ++p) {
    const auto [au, av] = kPlaneAxes[static_cast<size_t>(p)];
    const torch::Tensor plane = fields.planes.slice(1, p * R, (p + 1) * R).unsqueeze(0);
    // grid_sample reads (x, y) = (column u, row v).
    const torch::Tensor uv = torch::stack({q.select(1, au), q.select(1, av)}, 1).view({1, 1, M, 2});
    parts.push_back(F::grid_sample(plane, uv, opts).view({-1, M}).t());
  }
  if (fields.grid.defined()) {
    // Grid is [c][x][y][z] = (D, H, W); grid_sample reads (x, y, z) = (W, H, D).
    const torch::Tensor xyz = torch::stack({q.select(1, 2), q.select(1, 1), q.select(1, 0)}, 1).view({1, 1, 1, M, 3});
    parts.push_back(F::grid_sample(fields.grid.unsqueeze(0), xyz, opts).view({-1, M}).t());
  }
  return torch::cat(parts, 1);
}

torch::Tensor VAEModelImpl::predict_occupancy(const DecodedFields& fields, const torch::Tensor& points) {
  if (fields.grid.defined() == config_.grid_off()) {
    throw ConfigError("predict_occupancy: representation and model disagree on the grid component");
  }
  return mlp_->forward(query(fields, points)).squeeze(1);
}

VAEModel make_vae(const VAEConfig& config, uint64_t seed) {
  VAEModel m(config);
  init_parameters(*m, seed, 1.0);
  return m;
}

torch::Tensor reparameterize(const torch::Tensor& mu, const torch::Tensor& logvar, uint64_t seed) {
  if (mu.sizes() != logvar.sizes()) throw ConfigError("reparameterize: mu and logvar shapes differ");
  auto gen = make_generator(seed);
  const torch::Tensor eps = at::randn(mu.sizes(), gen, mu.options().requires_grad(false));
  return mu + torch::exp(0.5 * logvar.clamp(-30.0, 20.0)) * eps;
}

VAELoss vae_loss(const torch::Tensor& logits, const torch::Tensor& targets, const torch::Tensor& mu,
                 const torch::Tensor& logvar, double lambda) {
  if (lambda < 0.0) throw ConfigError("vae_loss: lambda must be >= 0");
  if (targets.numel() != logits.numel()) throw ConfigError("vae_loss: logits and targets differ in size");
  if (targets.numel() == 0 || targets.min().item<double>() < 0.0 || targets.max().item<double>() > 1.0) {
    throw ConfigError("vae_loss: targets must be non-empty and lie in [0, 1]");
  }
  VAELoss l;
  l.bce = F::binary_cross_entropy_with_logits(logits, targets.to(logits.dtype()));
  l.kl = 0.5 * (mu.pow(2) + logvar.exp() - logvar - 1.0).mean();
  l.total = l.bce + lambda * l.kl;
  return l;
}

HybridTriplane to_hybrid(const DecodedFields& fields) {
  const torch::Tensor planes = fields.planes.detach().to(torch::kFloat32);
  const int64_t C = planes.size(0), R = planes.size(2);
  const torch::Tensor p = planes.view({C, 3, R, R}).permute({1, 0, 2, 3}).contiguous();
  std::vector<float> pv(p.data_ptr<float>(), p.data_ptr<float>() + p.numel());
  std::vector<float> gv;
  int rg = 0;
  if (fields.grid.defined()) {
    const torch::Tensor g = fields.grid.detach().to(torch::kFloat32).contiguous();
    rg = static_cast<int>(g.size(1));
    gv.assign(g.data_ptr<float>(), g.data_ptr<float>() + g.numel());
  }
  return HybridTriplane(static_cast<int>(C), static_cast<int>(R), rg, std::move(pv), std::move(gv));
}

DecodedFields from_hybrid(const HybridTriplane& h) {
  const int64_t C = h.channels(), R = h.res(), RG = h.grid_res();
  DecodedFields f;
  f.planes = torch::from_blob(const_cast<float*>(h.planes().data()), {3, C, R, R}, torch::kFloat32)
                 .permute({1, 0, 2, 3})
                 .reshape({C, 3 * R, R})
                 .clone();
  if (h.has_grid()) f.grid = torch::from_blob(const_cast<float*>(h.grid().data()), {C, RG, RG, RG}, torch::kFloat32).clone();
  return f;
}

// ---------------------------------------------------------------------------
// Inputs

PointSet build_input(const OctreeFeatures& features, const VAEConfig& config) {
  if (features.size() == 0) throw ConfigError("build_input: no octree leaves");
  if (features.channels != config.octree_channels) {
    throw ConfigError("build_input: octree features have " + std::to_string(features.channels) +
                      " channels, config expects " + std::to_string(config.octree_channels));
  }
  PointSet p;
  p.positions = features.positions;
  const int fc = fourier_channels(config.num_frequencies);
  p.channels = fc + features.channels;
  p.features.resize(p.size() * static_cast<size_t>(p.channels));
  for (size_t i = 0; i < p.size(); ++i) {
    float* row = p.features.data() + i * static_cast<size_t>(p.channels);
    fourier_embed_point(p.positions[i], config.num_frequencies, std::span<float>(row, static_cast<size_t>(fc)));
    std::copy_n(features.features.data() + i * static_cast<size_t>(features.channels), features.channels, row + fc);
  }
  return p;
}

PointSet build_input(const SignedField& field, const OctreeFeatureExtractor& extractor, const VAEConfig& config) {
  const Octree tree = build_octree(field, config.octree_level);
  return build_input(extract_features(extractor, tree, config.octree_level), config);
}

torch::Tensor input_tensor(const PointSet& input, const VAEConfig& config, uint64_t seed) {
  const auto N = static_cast<int64_t>(input.size());
  if (N == 0) throw ConfigError("input_tensor: empty point set");
  torch::Tensor all = torch::from_blob(const_cast<float*>(input.features.data()), {N, input.channels}, torch::kFloat32);
  const int64_t target = config.input_points;
  if (target == 0 || target == N) return all.clone();
  auto gen = make_generator(seed);
  torch::Tensor idx;
  if (N > target) {
    idx = at::randperm(N, gen, torch::kInt64).slice(0, 0, target);
  } else {
    idx = torch::cat({torch::arange(N, torch::kInt64), at::randint(N, {target - N}, gen, torch::kInt64)});
  }
  return all.index_select(0, idx);
}

torch::Tensor points_tensor(std::span<const Vec3> points) {
  torch::Tensor t = torch::empty({static_cast<int64_t>(points.size()), 3}, torch::kFloat32);
  auto a = t.accessor<float, 2>();
  for (size_t i = 0; i < points.size(); ++i) {
    for (int c = 0; c < 3; ++c) a[static_cast<int64_t>(i)][c] = static_cast<float>(points[i][c]);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_vae(const std::filesystem::path& path, VAEModel& model, const nlohmann::json& extra) {
  Archive a;
  a.meta = extra;
  a.meta["kind"] = "hyper3d_vae";
  a.meta["config"] = model->config().to_json();
  a.meta["token_length"] = model->config().tokens();
  store_module(*model, a, "model/");
  save_archive(path, a);
}

namespace {

VAEModel model_from_archive(const Archive& a, const std::filesystem::path& path) {
  if (a.meta.value("kind", "") != "hyper3d_vae") throw ConfigError("'" + path.string() + "' is not a VAE checkpoint");
  VAEModel m(VAEConfig::from_json(a.meta.at("config")));
  restore_module(*m, a, "model/");
  return m;
}

}  // namespace

VAEModel load_vae(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("VAE checkpoint not found at '" + path.string() + "'");
  return model_from_archive(load_archive(path), path);
}

VAEModel load_vae(const std::filesystem::path& path, int expected_triplane_res, int expected_grid_res) {
  VAEModel m = load_vae(path);
  const VAEConfig& c = m->config();
  if (c.triplane_res != expected_triplane_res || c.grid_res != expected_grid_res) {
    throw ConfigError("checkpoint '" + path.string() + "' has " + std::to_string(c.tokens()) + " latent tokens (r_T=" +
                      std::to_string(c.triplane_res) + ", r_G=" + std::to_string(c.grid_res) + ") but the configuration needs " +
                      std::to_string(token_length(expected_triplane_res, expected_grid_res)) + " (r_T=" +
                      std::to_string(expected_triplane_res) + ", r_G=" + std::to_string(expected_grid_res) + ")");
  }
  return m;
}

}  // namespace hyper3d
