#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyper3d/extractor.hpp"
#include "hyper3d/shape_spec.hpp"
#include "hyper3d/vae.hpp"

namespace hyper3d {

struct TrainConfig {
  int steps = 1000;
  int batch_size = 1;  // shapes per optimizer step (gradients accumulated)
  double lr = 1e-4;
  double weight_decay = 0.01;
  int supervision_points = 40960;
  int perturbations = 4;       // k
  double perturb_scale = 1.0;  // fraction of the leaf half size
  int uniform_points = 4096;   // extra uniform samples of [-1,1]^3 per step; they pin down the far field
  double kl_weight = 1e-4;     // lambda
  bool sample_posterior = true;
  uint64_t seed = 0;
  int checkpoint_every = 0;  // 0: only the final checkpoint
  int log_every = 50;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Everything the trainer needs per shape; the octree features come from the
/// frozen extractor and are computed once.
struct ShapeSample {
  std::string name;
  SignedField field;
  OctreeFeatures features;
  PointSet input;
};

ShapeSample prepare_shape(const std::string& name, const SignedField& field, const OctreeFeatureExtractor& extractor,
                          const VAEConfig& config);
std::vector<ShapeSample> prepare_dataset(const std::vector<NamedShape>& shapes, const OctreeFeatureExtractor& extractor,
                                         const VAEConfig& config);

/// perturb_leaves(k, scale) pool, subsampled to `supervision_points` (without
/// replacement when the pool is large enough, with replacement otherwise),
/// plus `uniform_points` uniform domain samples; targets from the field.
OccupancyTarget make_supervision(const SignedField& field, const OctreeFeatures& features, const TrainConfig& config,
                                 uint64_t seed);

struct StepLog {
  int step = 0;
  double bce = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

struct TrainOptions {
  std::filesystem::path out_dir;      // loss.csv and checkpoints; empty disables both
  std::filesystem::path resume_from;  // training checkpoint to continue from
  std::function<void(const StepLog&)> on_step;
};

struct TrainResult {
  VAEModel model{nullptr};
  std::vector<StepLog> history;  // steps run in this call
  std::filesystem::path checkpoint;
};

/// Seeded training loop. Step s draws its input subset, posterior noise and
/// supervision from derive_seed(seed, s, ...), so resuming reproduces an
/// uninterrupted run. A non-finite loss raises RuntimeFailure naming the step
/// and the loss components.
TrainResult train(const std::vector<ShapeSample>& data, const VAEConfig& vae_config, const TrainConfig& config,
                  const TrainOptions& options = {});
/// Continues from an existing model (fine-tuning, upscaled initialisation).
TrainResult train(const std::vector<ShapeSample>& data, VAEModel model, const TrainConfig& config,
                  const TrainOptions& options = {});

/// Mean loss of the model on every shape with posterior means and a fixed
/// supervision draw; used to compare models on equal terms.
StepLog evaluate_loss(VAEModel& model, const std::vector<ShapeSample>& data, const TrainConfig& config, uint64_t seed);

}  // namespace hyper3d
