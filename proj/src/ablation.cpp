#include "hyper3d/ablation.hpp"

#include <chrono>


#include "hyper3d/errors.hpp"
#include "hyper3d/log.hpp"
#include "hyper3d/pipeline.hpp"

namespace hyper3d {

MetricReport mean_report(const std::vector<MetricReport>& reports) {
  MetricReport m;
  if (reports.empty()) return m;
  m.options = reports.front().options;
  for (const MetricReport& r : reports) {
    m.f_score += r.f_score;
    m.chamfer_x10k += r.chamfer_x10k;
    m.normal_consistency += r.normal_consistency;
    m.surface_iou += r.surface_iou;
  }
  const double n = static_cast<double>(reports.size());
  m.f_score /= n;
  m.chamfer_x10k /= n;
  m.normal_consistency /= n;
  m.surface_iou /= n;
  return m;
}

nlohmann::json AblationReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const AblationRun& r : runs) {
    nlohmann::json shapes = nlohmann::json::array();
    for (const MetricReport& s : r.shapes) shapes.push_back(s.to_json());
    out.push_back({{"name", r.name},
                   {"config", r.config.to_json()},
                   {"token_length", r.config.tokens()},
                   {"seed", r.seed},
                   {"mean", r.mean.to_json()},
                   {"final_loss", r.final_loss},
                   {"train_seconds", r.train_seconds},
                   {"shapes", shapes}});
  }
  return {{"runs", out}};
}

std::string AblationReport::table() const {
  std::vector<MetricReport> rows;
  for (const AblationRun& r : runs) rows.push_back(r.mean);
  return format_metric_table(rows);
}

AblationReport run_ablation(const std::vector<AblationEntry>& entries, const std::vector<NamedShape>& shapes,
                            const OctreeFeatureExtractor& extractor, const AblationOptions& options) {
  if (entries.empty()) throw ConfigError("ablation: no configurations given");
  if (shapes.empty()) throw ConfigError("ablation: empty dataset");
  if (options.seeds.empty()) throw ConfigError("ablation: no seeds given");

  std::vector<SignedField> fields;
  std::vector<Mesh> references;
  for (const NamedShape& s : shapes) {
    fields.push_back(analytic_shape(s.spec));
    references.push_back(ground_truth_mesh(fields.back(), options.gt_resolution));
  }

  AblationReport report;
  for (const AblationEntry& entry : entries) {
    entry.config.validate();
    std::vector<ShapeSample> data;
    for (size_t i = 0; i < shapes.size(); ++i) data.push_back(prepare_shape(shapes[i].name, fields[i], extractor, entry.config));

    for (uint64_t seed : options.seeds) {
      AblationRun run;
      run.name = entry.name;
      run.config = entry.config;
      run.seed = seed;

      TrainConfig tc = options.train;
      tc.seed = seed;
      TrainOptions to;
      if (!options.out_dir.empty()) {
        to.out_dir = options.out_dir / (entry.name + "_seed" + std::to_string(seed));
      }
      log_info(strformat("ablation: training '%s' (r_T=%d, r_G=%d, tokens=%lld) seed %llu", entry.name.c_str(),
                         entry.config.triplane_res, entry.config.grid_res, static_cast<long long>(entry.config.tokens()),
                         static_cast<unsigned long long>(seed)));
      const auto t0 = std::chrono::steady_clock::now();
      TrainResult trained = train(data, entry.config, tc, to);
      run.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      run.final_loss = evaluate_loss(trained.model, data, tc, seed).bce;

      for (size_t i = 0; i < data.size(); ++i) {
        const Mesh recon = reconstruct(trained.model, data[i].input, options.recon_resolution, seed);
        MetricReport m = evaluate(recon, references[i], options.metrics);
        m.shape_id = data[i].name;
        m.config = entry.name;
        m.triplane_res = entry.config.triplane_res;
        m.grid_res = entry.config.grid_res;
        m.seed = seed;
        run.shapes.push_back(m);
      }
      run.mean = mean_report(run.shapes);
      run.mean.shape_id = "mean of " + std::to_string(run.shapes.size());
      run.mean.config = entry.name;
      run.mean.triplane_res = entry.config.triplane_res;
      run.mean.grid_res = entry.config.grid_res;
      run.mean.seed = seed;
      log_info(strformat("ablation: '%s' seed %llu: F %.4f  CD %.2f  NC %.4f  IoU %.4f  (%.0f s)", entry.name.c_str(),
                         static_cast<unsigned long long>(seed), run.mean.f_score, run.mean.chamfer_x10k,
                         run.mean.normal_consistency, run.mean.surface_iou, run.train_seconds));
      report.runs.push_back(std::move(run));
    }
  }
  return report;
}

}  // namespace hyper3d
