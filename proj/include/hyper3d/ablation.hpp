#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyper3d/metrics.hpp"
#include "hyper3d/training.hpp"

namespace hyper3d {

struct AblationEntry {
  std::string name;  // e.g. "hybrid (32,8)"
  VAEConfig config;
};

struct AblationOptions {
  TrainConfig train;  // its seed is replaced by each entry of `seeds`
  std::vector<uint64_t> seeds{0};
  int recon_resolution = 128;
  int gt_resolution = 256;
  MetricOptions metrics;
  std::filesystem::path out_dir;  // per-run logs and checkpoints; empty keeps everything in memory
};

struct AblationRun {
  std::string name;
  VAEConfig config;
  uint64_t seed = 0;
  std::vector<MetricReport> shapes;
  MetricReport mean;  // averaged over shapes
  double final_loss = 0.0;
  double train_seconds = 0.0;
};

struct AblationReport {
  std::vector<AblationRun> runs;

  nlohmann::json to_json() const;
  /// One row per (config, seed), columns as in format_metric_table.
  std::string table() const;
};

/// Trains every config under every seed on the same shapes and scores the
/// posterior-mean reconstructions against the analytic surfaces.
AblationReport run_ablation(const std::vector<AblationEntry>& entries, const std::vector<NamedShape>& shapes,
                            const OctreeFeatureExtractor& extractor, const AblationOptions& options);

/// Averages the metric fields of several reports (infinite chamfers stay infinite).
MetricReport mean_report(const std::vector<MetricReport>& reports);

}  // namespace hyper3d
