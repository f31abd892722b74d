#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "hyper3d/geometry.hpp"
#include "hyper3d/octree.hpp"

namespace hyper3d {

struct ExtractorConfig {
  std::vector<int> levels{6, 7, 8, 9};  // supervised levels; features are available at these
  int channels = 64;                    // C_oct
  int num_frequencies = 6;              // Fourier bands of the node centre
  int steps = 2000;
  double lr = 1e-3;
  uint64_t seed = 0;
  int nodes_per_level = 4096;  // nodes supervised per level and step; 0 uses every node

  int max_level() const;
  bool supports(int level) const;
  /// Throws ConfigError for an empty level list or levels outside [6, 9]
  /// (outside [1, 9] when `allow_shallow` is set, used by unit tests).
  void validate(bool allow_shallow = false) const;
  nlohmann::json to_json() const;
  static ExtractorConfig from_json(const nlohmann::json& j);
};

/// Hierarchical per-node network. A node's feature is
///   h = SiLU(local(x_node) + message(h_parent)),
/// with x_node = [Fourier(centre), level / 9, clamp(sdf / half, +-8) / 8, sdf]
/// and a learned root message. Each supervised level has a split-logit head
/// and a head predicting sdf / half.
class OctreeNetImpl : public torch::nn::Module {
 public:
  explicit OctreeNetImpl(const ExtractorConfig& config);

  struct LevelOutput {
    torch::Tensor features;     // [n_l, C_oct]
    torch::Tensor split_logit;  // [n_l], defined at supervised levels
    torch::Tensor sdf_scaled;   // [n_l], prediction of sdf / half
  };
  /// Runs levels 0..max_level (capped at the tree depth).
  std::vector<LevelOutput> forward(const Octree& tree, int max_level);

  /// One level of the hierarchy: node inputs [n, in] and the features of
  /// each node's parent [n, C] (the root message at level 0).
  torch::Tensor level_features(const torch::Tensor& inputs, const torch::Tensor& parent_features);
  /// Split logit and sdf / half predictions of a supervised level.
  std::pair<torch::Tensor, torch::Tensor> heads(int level, const torch::Tensor& features);
  const torch::Tensor& root() const { return root_; }

 private:
  ExtractorConfig config_;
  torch::nn::Sequential local_{nullptr};
  torch::nn::Linear message_{nullptr};
  torch::Tensor root_;
  torch::nn::ModuleDict split_heads_{nullptr}, sdf_heads_{nullptr};
};
TORCH_MODULE(OctreeNet);

struct OctreeFeatureExtractor {
  ExtractorConfig config;
  OctreeNet net{nullptr};
};

struct ExtractorStepLog {
  int step = 0;
  double split_bce = 0.0;
  double sdf_l1 = 0.0;
  double total = 0.0;
};

OctreeFeatureExtractor make_extractor(const ExtractorConfig& config);

/// Trains on octrees of every field built to max_level. Each step covers one
/// shape (cycling through the dataset) and all supervised levels.
OctreeFeatureExtractor train_extractor(const std::vector<SignedField>& dataset, const ExtractorConfig& config,
                                       const std::function<void(const ExtractorStepLog&)>& on_step = {});

/// One row per surface-carrying node at `level`, positions = node centres.
OctreeFeatures extract_features(const OctreeFeatureExtractor& extractor, const Octree& tree, int level);

struct ExtractorAccuracy {
  double split_accuracy = 0.0;  // over all nodes at the level
  double sdf_mae = 0.0;         // over surface-carrying nodes, domain units
  size_t nodes = 0;
  size_t leaves = 0;
};
ExtractorAccuracy evaluate_extractor(const OctreeFeatureExtractor& extractor, const Octree& tree, int level);

void save_extractor(const std::filesystem::path& path, const OctreeFeatureExtractor& extractor);
OctreeFeatureExtractor load_extractor(const std::filesystem::path& path);

}  // namespace hyper3d
