#include "hyper3d/extractor.hpp"

#include <algorithm>
#include <cmath>


#include "hyper3d/archive.hpp"
#include "hyper3d/errors.hpp"
#include "hyper3d/nn_util.hpp"

namespace hyper3d {

namespace F = torch::nn::functional;

int ExtractorConfig::max_level() const { return levels.empty() ? 0 : *std::max_element(levels.begin(), levels.end()); }

bool ExtractorConfig::supports(int level) const { return std::find(levels.begin(), levels.end(), level) != levels.end(); }

void ExtractorConfig::validate(bool allow_shallow) const {
  if (levels.empty()) throw ConfigError("extractor config: no supervised levels");
  const int lo = allow_shallow ? 1 : 6;
  for (int l : levels) {
    if (l < lo || l > kMaxOctreeDepth) {
      throw ConfigError("extractor config: level " + std::to_string(l) + " outside [" + std::to_string(lo) + ", 9]");
    }
  }
  if (channels < 1 || num_frequencies < 0 || steps < 0 || !(lr > 0.0) || nodes_per_level < 0) {
    throw ConfigError("extractor config: channels, frequencies, steps and lr must be positive");
  }
}

nlohmann::json ExtractorConfig::to_json() const {
  return {{"levels", levels}, {"channels", channels}, {"num_frequencies", num_frequencies},
          {"steps", steps},   {"lr", lr},             {"seed", seed},
          {"nodes_per_level", nodes_per_level}};
}

ExtractorConfig ExtractorConfig::from_json(const nlohmann::json& j) {
  ExtractorConfig c;
  try {
    c.levels = j.value("levels", c.levels);
    c.channels = j.value("channels", c.channels);
    c.num_frequencies = j.value("num_frequencies", c.num_frequencies);
    c.steps = j.value("steps", c.steps);
    c.lr = j.value("lr", c.lr);
    c.seed = j.value("seed", c.seed);
    c.nodes_per_level = j.value("nodes_per_level", c.nodes_per_level);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("extractor config: ") + e.what());
  }
  return c;
}

namespace {

constexpr int kNodeExtra = 3;

torch::Tensor node_inputs(const std::vector<OctreeNode>& nodes, int level, int num_frequencies) {
  const int fc = fourier_channels(num_frequencies);
  const int width = fc + kNodeExtra;
  torch::Tensor x = torch::empty({static_cast<int64_t>(nodes.size()), width}, torch::kFloat32);
  float* out = x.data_ptr<float>();
  for (size_t i = 0; i < nodes.size(); ++i) {
    const OctreeNode& n = nodes[i];
    float* row = out + i * static_cast<size_t>(width);
    fourier_embed_point(n.center, num_frequencies, std::span<float>(row, static_cast<size_t>(fc)));
    row[fc] = static_cast<float>(level) / kMaxOctreeDepth;
    row[fc + 1] = static_cast<float>(std::clamp(n.sdf / n.half_size, -8.0, 8.0) / 8.0);
    row[fc + 2] = static_cast<float>(n.sdf);
  }
  return x;
}

torch::Tensor parent_index(const std::vector<OctreeNode>& nodes) {
  torch::Tensor idx = torch::empty({static_cast<int64_t>(nodes.size())}, torch::kInt64);
  auto* p = idx.data_ptr<int64_t>();
  for (size_t i = 0; i < nodes.size(); ++i) p[i] = nodes[i].parent;
  return idx;
}

}  // namespace

OctreeNetImpl::OctreeNetImpl(const ExtractorConfig& config) : config_(config) {
  const int64_t in = fourier_channels(config.num_frequencies) + kNodeExtra;
  const int64_t C = config.channels;
  local_ = register_module("local", torch::nn::Sequential(torch::nn::Linear(in, C), torch::nn::SiLU(), torch::nn::Linear(C, C)));
  message_ = register_module("message", torch::nn::Linear(C, C));
  root_ = register_parameter("root", torch::zeros({1, C}));
  split_heads_ = register_module("split_heads", torch::nn::ModuleDict());
  sdf_heads_ = register_module("sdf_heads", torch::nn::ModuleDict());
  for (int l : config.levels) {
    split_heads_->update({{std::to_string(l), std::make_shared<torch::nn::LinearImpl>(C, 1)}});
    sdf_heads_->update({{std::to_string(l), std::make_shared<torch::nn::LinearImpl>(C, 1)}});
  }
}

torch::Tensor OctreeNetImpl::level_features(const torch::Tensor& inputs, const torch::Tensor& parent_features) {
  return F::silu(local_->forward(inputs) + message_(parent_features));
}

std::pair<torch::Tensor, torch::Tensor> OctreeNetImpl::heads(int level, const torch::Tensor& features) {
  const std::string key = std::to_string(level);
  return {split_heads_[key]->as<torch::nn::Linear>()->forward(features).squeeze(1),
          sdf_heads_[key]->as<torch::nn::Linear>()->forward(features).squeeze(1)};
}

std::vector<OctreeNetImpl::LevelOutput> OctreeNetImpl::forward(const Octree& tree, int max_level) {
  std::vector<LevelOutput> out;
  const int top = std::min(max_level, tree.depth());
  torch::Tensor parent_features = root_;
  for (int l = 0; l <= top; ++l) {
    const auto& nodes = tree.level(l);
    LevelOutput lo;
    if (nodes.empty()) {
      lo.features = torch::zeros({0, config_.channels});
      out.push_back(lo);
      parent_features = lo.features;
      continue;
    }
    const torch::Tensor msg = l == 0 ? parent_features : parent_features.index_select(0, parent_index(nodes));
    lo.features = level_features(node_inputs(nodes, l, config_.num_frequencies), msg);
    if (config_.supports(l)) std::tie(lo.split_logit, lo.sdf_scaled) = heads(l, lo.features);
    parent_features = lo.features;
    out.push_back(std::move(lo));
  }
  return out;
}

OctreeFeatureExtractor make_extractor(const ExtractorConfig& config) {
  config.validate(true);
  OctreeFeatureExtractor e{config, OctreeNet(config)};
  init_parameters(*e.net, derive_seed(config.seed, 0x0c7));
  return e;
}

namespace {

// Per-level tensors of one training tree, built once.
struct LevelData {
  torch::Tensor inputs;      // [n, in]
  torch::Tensor parent;      // [n] index into the previous level
  torch::Tensor crossing;    // [n] float 0/1
  torch::Tensor sdf_scaled;  // [n]
};

std::vector<LevelData> level_data(const Octree& tree, int depth, int num_frequencies) {
  std::vector<LevelData> out(static_cast<size_t>(depth) + 1);
  for (int l = 0; l <= depth; ++l) {
    const auto& nodes = tree.level(l);
    const auto n = static_cast<int64_t>(nodes.size());
    LevelData& d = out[static_cast<size_t>(l)];
    d.inputs = node_inputs(nodes, l, num_frequencies);
    d.parent = parent_index(nodes);
    d.crossing = torch::empty({n});
    d.sdf_scaled = torch::empty({n});
    auto crossing = d.crossing.accessor<float, 1>();
    auto sdf = d.sdf_scaled.accessor<float, 1>();
    for (int64_t i = 0; i < n; ++i) {
      const OctreeNode& node = nodes[static_cast<size_t>(i)];
      crossing[i] = Octree::crosses_surface(node) ? 1.0f : 0.0f;
      sdf[i] = static_cast<float>(node.sdf / node.half_size);
    }
  }
  return out;
}

}  // namespace

OctreeFeatureExtractor train_extractor(const std::vector<SignedField>& dataset, const ExtractorConfig& config,
                                       const std::function<void(const ExtractorStepLog&)>& on_step) {
  if (dataset.empty()) throw ConfigError("train_extractor: empty dataset");
  config.validate();
  OctreeFeatureExtractor e = make_extractor(config);
  const int depth = config.max_level();

  std::vector<std::vector<LevelData>> trees;
  for (const SignedField& f : dataset) {
    const Octree tree = build_octree(f, depth);
    if (tree.empty()) throw ConfigError("train_extractor: a dataset shape does not cross the domain");
    trees.push_back(level_data(tree, depth, config.num_frequencies));
  }

  torch::optim::AdamW opt(e.net->parameters(), torch::optim::AdamWOptions(config.lr).weight_decay(0.0));
  e.net->train();
  for (int step = 0; step < config.steps; ++step) {
    const size_t s = static_cast<size_t>(step) % trees.size();
    const auto& levels = trees[s];
    // Supervised node subsets, then every ancestor they need, deepest first.
    std::vector<torch::Tensor> sampled(levels.size()), needed(levels.size());
    auto gen = make_generator(derive_seed(config.seed, static_cast<uint64_t>(step)));
    for (int l : config.levels) {
      const int64_t n = levels[static_cast<size_t>(l)].crossing.size(0);
      if (n == 0) continue;
      sampled[static_cast<size_t>(l)] = config.nodes_per_level == 0 || n <= config.nodes_per_level
                                            ? torch::arange(n, torch::kInt64)
                                            : std::get<0>(at::randperm(n, gen, torch::kInt64).slice(0, 0, config.nodes_per_level).sort());
    }
    for (int l = depth; l >= 0; --l) {
      std::vector<torch::Tensor> parts;
      if (sampled[static_cast<size_t>(l)].defined()) parts.push_back(sampled[static_cast<size_t>(l)]);
      if (l < depth && needed[static_cast<size_t>(l) + 1].defined()) {
        parts.push_back(levels[static_cast<size_t>(l) + 1].parent.index_select(0, needed[static_cast<size_t>(l) + 1]));
      }
      if (!parts.empty()) needed[static_cast<size_t>(l)] = std::get<0>(torch::_unique(torch::cat(parts), true));
    }

    torch::Tensor split_loss = torch::zeros({});
    torch::Tensor sdf_loss = torch::zeros({});
    torch::Tensor parent_features = e.net->root();
    torch::Tensor parent_ids = torch::zeros({1}, torch::kInt64);
    for (int l = 0; l <= depth; ++l) {
      const torch::Tensor& ids = needed[static_cast<size_t>(l)];
      if (!ids.defined()) break;
      const LevelData& d = levels[static_cast<size_t>(l)];
      const torch::Tensor msg =
          l == 0 ? parent_features
                 : parent_features.index_select(0, torch::searchsorted(parent_ids, d.parent.index_select(0, ids)));
      const torch::Tensor h = e.net->level_features(d.inputs.index_select(0, ids), msg);
      if (config.supports(l) && sampled[static_cast<size_t>(l)].defined()) {
        const torch::Tensor rows = torch::searchsorted(ids, sampled[static_cast<size_t>(l)]);
        const auto [split, sdf] = e.net->heads(l, h.index_select(0, rows));
        split_loss = split_loss + F::binary_cross_entropy_with_logits(split, d.crossing.index_select(0, sampled[static_cast<size_t>(l)]));
        sdf_loss = sdf_loss + F::l1_loss(sdf, d.sdf_scaled.index_select(0, sampled[static_cast<size_t>(l)]));
      }
      parent_features = h;
      parent_ids = ids;
    }
    const torch::Tensor total = split_loss + sdf_loss;
    if (!std::isfinite(total.item<double>())) {
      throw RuntimeFailure("train_extractor: non-finite loss at step " + std::to_string(step));
    }
    opt.zero_grad();
    total.backward();
    opt.step();
    if (on_step) on_step({step, split_loss.item<double>(), sdf_loss.item<double>(), total.item<double>()});
  }
  e.net->eval();
  return e;
}

namespace {

void check_level(const OctreeFeatureExtractor& e, const Octree& tree, int level) {
  if (!e.config.supports(level)) {
    throw ConfigError("extractor does not support level " + std::to_string(level) + " (trained levels: " +
                      nlohmann::json(e.config.levels).dump() + ")");
  }
  if (tree.depth() < level) {
    throw ConfigError("octree depth " + std::to_string(tree.depth()) + " is shallower than level " + std::to_string(level));
  }
}

}  // namespace

OctreeFeatures extract_features(const OctreeFeatureExtractor& e, const Octree& tree, int level) {
  check_level(e, tree, level);
  const auto leaves = tree.leaf_indices(level);
  if (leaves.empty()) throw ConfigError("extract_features: the shape has no surface-carrying nodes at level " + std::to_string(level));
  torch::NoGradGuard no_grad;
  OctreeNet net = e.net;
  const auto outputs = net->forward(tree, level);
  const torch::Tensor idx = torch::tensor(std::vector<int64_t>(leaves.begin(), leaves.end()), torch::kInt64);
  const torch::Tensor feats = outputs[static_cast<size_t>(level)].features.index_select(0, idx).contiguous();

  OctreeFeatures f;
  f.level = level;
  f.channels = e.config.channels;
  for (int32_t i : leaves) {
    f.positions.push_back(tree.level(level)[static_cast<size_t>(i)].center);
    f.half_sizes.push_back(tree.level(level)[static_cast<size_t>(i)].half_size);
  }
  f.features.assign(feats.data_ptr<float>(), feats.data_ptr<float>() + feats.numel());
  return f;
}

ExtractorAccuracy evaluate_extractor(const OctreeFeatureExtractor& e, const Octree& tree, int level) {
  check_level(e, tree, level);
  torch::NoGradGuard no_grad;
  OctreeNet net = e.net;
  const auto outputs = net->forward(tree, level);
  const auto& o = outputs[static_cast<size_t>(level)];
  const auto& nodes = tree.level(level);
  ExtractorAccuracy acc;
  acc.nodes = nodes.size();
  size_t correct = 0;
  double err = 0.0;
  const auto split = o.split_logit.accessor<float, 1>();
  const auto sdf = o.sdf_scaled.accessor<float, 1>();
  for (size_t i = 0; i < nodes.size(); ++i) {
    const bool crossing = Octree::crosses_surface(nodes[i]);
    const auto k = static_cast<int64_t>(i);
    correct += (split[k] > 0.0f) == crossing;
    if (crossing) {
      err += std::abs(static_cast<double>(sdf[k]) * nodes[i].half_size - nodes[i].sdf);
      ++acc.leaves;
    }
  }
  acc.split_accuracy = nodes.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(nodes.size());
  acc.sdf_mae = acc.leaves ? err / static_cast<double>(acc.leaves) : 0.0;
  return acc;
}

void save_extractor(const std::filesystem::path& path, const OctreeFeatureExtractor& e) {
  Archive a;
  a.meta = {{"kind", "octree_extractor"}, {"config", e.config.to_json()}};
  store_module(*e.net, a);
  save_archive(path, a);
}

OctreeFeatureExtractor load_extractor(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("extractor checkpoint not found at '" + path.string() +
                      "'; train one with `hyper3d train-extractor --out <dir>`");
  }
  const Archive a = load_archive(path);
  if (a.meta.value("kind", "") != "octree_extractor") throw ConfigError("'" + path.string() + "' is not an extractor checkpoint");
  OctreeFeatureExtractor e = make_extractor(ExtractorConfig::from_json(a.meta.at("config")));
  restore_module(*e.net, a);
  e.net->eval();
  return e;
}

}  // namespace hyper3d
