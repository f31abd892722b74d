// hyper3d: command-line driver for the shape VAE pipeline.
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hyper3d/ablation.hpp"
#include "hyper3d/errors.hpp"
#include "hyper3d/log.hpp"
#include "hyper3d/metrics.hpp"
#include "hyper3d/nn_util.hpp"
#include "hyper3d/obj_io.hpp"
#include "hyper3d/pipeline.hpp"
#include "hyper3d/shape_spec.hpp"
#include "hyper3d/training.hpp"
#include "hyper3d/upscale.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hyper3d;

namespace {

constexpr const char* kToolVersion = "0.3.0";
constexpr const char* kDefaultExtractor = "runs/extractor/extractor.h3d";

std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

// Flags shared by the commands; unset values leave the config untouched.
struct Args {
  std::string command;
  fs::path config_path;
  std::optional<uint64_t> seed;
  fs::path out;
  fs::path checkpoint;
  fs::path extractor;
  std::vector<std::string> shapes;
  std::optional<int> resolution;
  bool grid_off = false;
  std::optional<int> triplane_res;
  std::optional<int> grid_res;
  std::optional<int> steps;
  fs::path recon;
  fs::path gt;
  std::string upsample_mode = "mean-preserving";
  bool quiet = false;
};

// Resolved run configuration. A manifest written by an earlier run is also
// accepted as --config: its "config" block is used verbatim.
json resolve_config(const Args& a) {
  json cfg = json::object();
  if (!a.config_path.empty()) {
    cfg = read_json(a.config_path);
    if (cfg.contains("manifest_version")) cfg = cfg.at("config");
  }
  for (const char* key : {"vae", "train", "extractor", "data", "reconstruct", "evaluate", "ablation"}) {
    if (!cfg.contains(key)) cfg[key] = json::object();
  }
  if (a.seed) cfg["seed"] = *a.seed;
  if (!cfg.contains("seed")) cfg["seed"] = 0;
  if (a.grid_off) cfg["vae"]["grid_res"] = 0;
  if (a.triplane_res) cfg["vae"]["triplane_res"] = *a.triplane_res;
  if (a.grid_res) cfg["vae"]["grid_res"] = *a.grid_res;
  if (a.resolution) cfg["reconstruct"]["resolution"] = *a.resolution;
  if (!a.extractor.empty()) cfg["extractor_checkpoint"] = a.extractor.string();
  if (!cfg.contains("extractor_checkpoint")) cfg["extractor_checkpoint"] = kDefaultExtractor;
  if (!a.shapes.empty()) cfg["data"]["shapes"] = a.shapes;
  if (a.steps) {
    if (a.command == "train-extractor") {
      cfg["extractor"]["steps"] = *a.steps;
    } else {
      cfg["train"]["steps"] = *a.steps;
    }
  }
  return cfg;
}

uint64_t run_seed(const json& cfg) { return cfg.at("seed").get<uint64_t>(); }

VAEConfig vae_config(const json& cfg) {
  json v = cfg.at("vae");
  if (!v.contains("preset")) v["preset"] = "desk";
  return VAEConfig::from_json(v);
}

TrainConfig train_config(const json& cfg) {
  json t = cfg.at("train");
  t["seed"] = run_seed(cfg);
  return TrainConfig::from_json(t);
}

SignedField load_field(const fs::path& path, int mesh_resolution) {
  const std::string ext = path.extension().string();
  if (ext == ".obj") return mesh_to_field(normalize_to_unit_cube(read_obj(path)), mesh_resolution);
  return analytic_shape(load_shape_spec(path));
}

struct Dataset {
  std::vector<std::string> names;
  std::vector<SignedField> fields;
  std::vector<NamedShape> analytic;  // when every shape is analytic
};

// Explicit shape files, or a synthetic corpus of `corpus_size` shapes.
Dataset load_dataset(const json& data) {
  Dataset d;
  const int mesh_res = data.value("mesh_resolution", 128);
  if (data.contains("shapes") && !data.at("shapes").empty()) {
    bool all_analytic = true;
    for (const auto& p : data.at("shapes")) {
      const fs::path path = p.get<std::string>();
      d.names.push_back(path.stem().string());
      d.fields.push_back(load_field(path, mesh_res));
      if (path.extension() == ".obj") {
        all_analytic = false;
      } else {
        d.analytic.push_back({path.stem().string(), load_shape_spec(path)});
      }
    }
    if (!all_analytic) d.analytic.clear();
    return d;
  }
  d.analytic = make_synthetic_corpus(data.value("corpus_size", 16), data.value("corpus_seed", uint64_t{0}));
  for (const NamedShape& s : d.analytic) {
    d.names.push_back(s.name);
    d.fields.push_back(analytic_shape(s.spec));
  }
  return d;
}

fs::path require_out(const Args& a) {
  if (a.out.empty()) throw ConfigError(a.command + ": --out is required");
  fs::create_directories(a.out);
  return a.out;
}

fs::path require_shape(const Args& a) {
  if (a.shapes.size() != 1) throw ConfigError(a.command + ": exactly one --shape is required");
  return a.shapes.front();
}

fs::path require_checkpoint(const Args& a) {
  if (a.checkpoint.empty()) throw ConfigError(a.command + ": --checkpoint is required");
  return a.checkpoint;
}

json path_list(const std::vector<fs::path>& paths) {
  json j = json::array();
  for (const auto& p : paths) j.push_back(p.string());
  return j;
}

void write_manifest(const Args& a, const json& cfg, const json& inputs, const json& outputs, const std::string& started,
                    const json& extra = json::object()) {
  json m = {{"manifest_version", 1},
            {"command", a.command},
            {"tool_version", kToolVersion},
            {"config", cfg},
            {"seed", run_seed(cfg)},
            {"inputs", inputs},
            {"outputs", outputs},
            {"started", started},
            {"finished", timestamp()}};
  m.update(extra);
  write_json(a.out / "manifest.json", m);
}

// ---------------------------------------------------------------------------

void cmd_preprocess(const Args& a) {
  const std::string started = timestamp();
  const json cfg = resolve_config(a);
  const fs::path out = require_out(a);
  const fs::path shape = require_shape(a);
  const VAEConfig vc = vae_config(cfg);
  const fs::path extractor_path = cfg.at("extractor_checkpoint").get<std::string>();
  const OctreeFeatureExtractor extractor = load_extractor(extractor_path);

  const SignedField field = load_field(shape, cfg.at("data").value("mesh_resolution", 128));
  const fs::path field_copy = out / ("field" + shape.extension().string());
  fs::copy_file(shape, field_copy, fs::copy_options::overwrite_existing);
  const Octree tree = build_octree(field, vc.octree_level);
  save_octree(out / "octree.h3o", tree);
  const OctreeFeatures features = extract_features(extractor, tree, vc.octree_level);
  save_features(out / "features.h3f", features);
  log_info(strformat("preprocess: %zu nodes, %zu leaves at level %d", tree.node_count(), features.size(), vc.octree_level));
  write_manifest(a, cfg, {{"shape", shape.string()}, {"extractor", extractor_path.string()}},
                 path_list({field_copy, out / "octree.h3o", out / "features.h3f"}), started);
}

void cmd_train_extractor(const Args& a) {
  const std::string started = timestamp();
  json cfg = resolve_config(a);
  const fs::path out = require_out(a);
  cfg["extractor"]["seed"] = run_seed(cfg);
  const ExtractorConfig ec = ExtractorConfig::from_json(cfg.at("extractor"));
  const Dataset data = load_dataset(cfg.at("data"));

  std::ofstream csv(out / "loss.csv");
  csv << "step,split_bce,sdf_l1,total\n";
  const OctreeFeatureExtractor e = train_extractor(data.fields, ec, [&](const ExtractorStepLog& s) {
    csv << s.step << ',' << s.split_bce << ',' << s.sdf_l1 << ',' << s.total << '\n';
    if (s.step % 100 == 0 || s.step + 1 == ec.steps) {
      log_info(strformat("extractor step %5d  split %.5f  sdf %.5f", s.step, s.split_bce, s.sdf_l1));
    }
  });
  save_extractor(out / "extractor.h3d", e);

  json accuracy = json::array();
  for (size_t i = 0; i < data.fields.size(); ++i) {
    const Octree tree = build_octree(data.fields[i], ec.max_level());
    json per_level = json::object();
    for (int l : ec.levels) {
      const ExtractorAccuracy acc = evaluate_extractor(e, tree, l);
      per_level[std::to_string(l)] = {{"split_accuracy", acc.split_accuracy}, {"sdf_mae", acc.sdf_mae}};
    }
    accuracy.push_back({{"shape", data.names[i]}, {"levels", per_level}});
  }
  write_json(out / "accuracy.json", accuracy);
  write_manifest(a, cfg, {{"shapes", data.names}}, path_list({out / "extractor.h3d", out / "loss.csv", out / "accuracy.json"}),
                 started);
}

void cmd_train_vae(const Args& a) {
  const std::string started = timestamp();
  const json cfg = resolve_config(a);
  const fs::path out = require_out(a);
  const VAEConfig vc = vae_config(cfg);
  const TrainConfig tc = train_config(cfg);
  const fs::path extractor_path = cfg.at("extractor_checkpoint").get<std::string>();
  const OctreeFeatureExtractor extractor = load_extractor(extractor_path);
  const Dataset data = load_dataset(cfg.at("data"));

  std::vector<ShapeSample> samples;
  for (size_t i = 0; i < data.fields.size(); ++i) samples.push_back(prepare_shape(data.names[i], data.fields[i], extractor, vc));
  log_info(strformat("train-vae: %zu shapes, r_T=%d r_G=%d, %lld tokens", samples.size(), vc.triplane_res, vc.grid_res,
                     static_cast<long long>(vc.tokens())));

  TrainOptions opts;
  opts.out_dir = out;
  TrainResult result;
  if (!a.checkpoint.empty()) {
    // A training checkpoint from this config resumes; anything else initialises.
    const Archive meta_only = load_archive(a.checkpoint);
    if (meta_only.meta.contains("train_config") && meta_only.meta.at("config") == vc.to_json()) {
      opts.resume_from = a.checkpoint;
      result = train(samples, vc, tc, opts);
    } else {
      result = train(samples, load_vae(a.checkpoint, vc.triplane_res, vc.grid_res), tc, opts);
    }
  } else {
    result = train(samples, vc, tc, opts);
  }
  write_manifest(a, cfg, {{"shapes", data.names}, {"extractor", extractor_path.string()}, {"checkpoint", a.checkpoint.string()}},
                 path_list({result.checkpoint, out / "loss.csv"}), started,
                 {{"token_length", vc.tokens()},
                  {"final_loss", result.history.empty() ? json(nullptr) : json(result.history.back().total)}});
}

void cmd_upscale(const Args& a) {
  const std::string started = timestamp();
  const json cfg = resolve_config(a);
  const fs::path out = require_out(a);
  if (!a.triplane_res || !a.grid_res) throw ConfigError("upscale: --triplane-res and --grid-res are required");
  TokenUpsampling mode;
  if (a.upsample_mode == "mean-preserving") {
    mode = TokenUpsampling::MeanPreserving;
  } else if (a.upsample_mode == "interpolate") {
    mode = TokenUpsampling::Interpolate;
  } else {
    throw ConfigError("upscale: --mode must be mean-preserving or interpolate");
  }
  VAEModel low = load_vae(require_checkpoint(a));
  VAEModel high = upscale_tokens(low, *a.triplane_res, a.grid_off ? 0 : *a.grid_res, mode);
  const fs::path path = out / "upscaled.h3d";
  save_vae(path, high, {{"upscaled_from", a.checkpoint.string()}});
  log_info(strformat("upscale: %lld -> %lld tokens", static_cast<long long>(low->config().tokens()),
                     static_cast<long long>(high->config().tokens())));
  write_manifest(a, cfg, {{"checkpoint", a.checkpoint.string()}}, path_list({path}), started,
                 {{"token_length", high->config().tokens()}, {"mode", a.upsample_mode}});
}

// Loads the checkpoint, checking it against any r_T / r_G the user asked for.
VAEModel load_requested_vae(const Args& a, const json& cfg) {
  const fs::path ckpt = require_checkpoint(a);
  const json& v = cfg.at("vae");
  if (v.contains("triplane_res") || v.contains("grid_res")) {
    const VAEModel probe = load_vae(ckpt);
    return load_vae(ckpt, v.value("triplane_res", probe->config().triplane_res), v.value("grid_res", probe->config().grid_res));
  }
  return load_vae(ckpt);
}

void cmd_reconstruct(const Args& a) {
  const std::string started = timestamp();
  const json cfg = resolve_config(a);
  const fs::path out = require_out(a);
  const fs::path shape = require_shape(a);
  VAEModel model = load_requested_vae(a, cfg);
  const fs::path extractor_path = cfg.at("extractor_checkpoint").get<std::string>();
  const OctreeFeatureExtractor extractor = load_extractor(extractor_path);
  const int resolution = cfg.at("reconstruct").value("resolution", 128);

  const SignedField field = load_field(shape, cfg.at("data").value("mesh_resolution", 128));
  const PointSet input = build_input(field, extractor, model->config());
  const Mesh mesh = reconstruct(model, input, resolution, run_seed(cfg));
  if (mesh.empty()) throw RuntimeFailure("reconstruct: the decoded occupancy never crosses 0.5; no surface extracted");
  write_obj(out / "mesh.obj", mesh);
  log_info(strformat("reconstruct: %zu vertices, %zu faces", mesh.vertices.size(), mesh.faces.size()));
  write_manifest(a, cfg, {{"checkpoint", a.checkpoint.string()}, {"shape", shape.string()}, {"extractor", extractor_path.string()}},
                 path_list({out / "mesh.obj"}), started);
}

Mesh load_mesh_or_shape(const fs::path& path, int resolution) {
  if (path.extension() == ".obj") return read_obj(path);
  return ground_truth_mesh(analytic_shape(load_shape_spec(path)), resolution);
}

MetricOptions metric_options(const json& e, uint64_t seed) {
  MetricOptions m;
  m.n_samples = e.value("n_samples", m.n_samples);
  m.tau = e.value("tau", m.tau);
  m.iou_band = e.value("iou_band", m.iou_band);
  m.iou_resolution = e.value("iou_resolution", m.iou_resolution);
  m.normalize = e.value("normalize", m.normalize);
  m.seed = seed;
  return m;
}

void cmd_evaluate(const Args& a) {
  const std::string started = timestamp();
  const json cfg = resolve_config(a);
  const fs::path out = require_out(a);
  if (a.recon.empty() || a.gt.empty()) throw ConfigError("evaluate: --recon and --gt are required");
  const int gt_res = cfg.at("evaluate").value("gt_resolution", 256);
  const Mesh recon = read_obj(a.recon);
  const Mesh gt = load_mesh_or_shape(a.gt, gt_res);
  MetricReport r = evaluate(recon, gt, metric_options(cfg.at("evaluate"), run_seed(cfg)));
  r.shape_id = a.gt.stem().string();
  r.config = cfg.at("evaluate").value("label", a.recon.stem().string());
  r.seed = run_seed(cfg);
  write_json(out / "report.json", r.to_json());
  const std::string table = format_metric_table({r});
  std::ofstream(out / "report.txt") << table;
  std::cout << table;
  write_manifest(a, cfg, {{"recon", a.recon.string()}, {"gt", a.gt.string()}},
                 path_list({out / "report.json", out / "report.txt"}), started);
}

void cmd_visualize(const Args& a) {
  const std::string started = timestamp();
  const json cfg = resolve_config(a);
  const fs::path out = require_out(a);
  const fs::path shape = require_shape(a);
  VAEModel model = load_requested_vae(a, cfg);
  const fs::path extractor_path = cfg.at("extractor_checkpoint").get<std::string>();
  const OctreeFeatureExtractor extractor = load_extractor(extractor_path);
  const SignedField field = load_field(shape, cfg.at("data").value("mesh_resolution", 128));
  const DecodedFields fields = encode_to_fields(model, build_input(field, extractor, model->config()), run_seed(cfg));
  const auto written = write_visualization(to_hybrid(fields), out);
  write_manifest(a, cfg, {{"checkpoint", a.checkpoint.string()}, {"shape", shape.string()}}, path_list(written), started);
}

void cmd_ablation(const Args& a) {
  const std::string started = timestamp();
  const json cfg = resolve_config(a);
  const fs::path out = require_out(a);
  const json& ab = cfg.at("ablation");
  const VAEConfig base = vae_config(cfg);
  std::vector<AblationEntry> entries;
  if (!ab.contains("configs") || ab.at("configs").empty()) {
    entries.push_back({"base", base});
  } else {
    for (const json& c : ab.at("configs")) {
      json v = base.to_json();
      v.update(c);
      v.erase("name");
      VAEConfig vc = VAEConfig::from_json(v);
      entries.push_back({c.value("name", "r" + std::to_string(vc.triplane_res) + "_g" + std::to_string(vc.grid_res)), vc});
    }
  }
  const Dataset data = load_dataset(cfg.at("data"));
  if (data.analytic.empty()) throw ConfigError("ablation: needs analytic shapes (JSON specs or the synthetic corpus)");
  AblationOptions opts;
  opts.train = train_config(cfg);
  opts.seeds = ab.value("seeds", std::vector<uint64_t>{run_seed(cfg)});
  opts.recon_resolution = ab.value("recon_resolution", 128);
  opts.gt_resolution = ab.value("gt_resolution", 256);
  opts.metrics = metric_options(cfg.at("evaluate"), run_seed(cfg));
  opts.out_dir = out;
  const fs::path extractor_path = cfg.at("extractor_checkpoint").get<std::string>();
  const AblationReport report = run_ablation(entries, data.analytic, load_extractor(extractor_path), opts);
  write_json(out / "ablation.json", report.to_json());
  std::ofstream(out / "ablation.txt") << report.table();
  std::cout << report.table();
  write_manifest(a, cfg, {{"shapes", data.names}, {"extractor", extractor_path.string()}},
                 path_list({out / "ablation.json", out / "ablation.txt"}), started);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyper3d: octree-input VAE with a hybrid triplane latent"};
  app.require_subcommand(1);
  Args a;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", a.config_path, "JSON config (or a manifest from an earlier run)");
    sub->add_option("--seed", a.seed, "Run seed");
    sub->add_option("--out", a.out, "Output directory");
    sub->add_option("--extractor", a.extractor, std::string("Octree extractor checkpoint (default ") + kDefaultExtractor + ")");
    sub->add_flag("--quiet", a.quiet, "Only log warnings");
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--triplane-res", a.triplane_res, "Latent triplane resolution r_T");
    sub->add_option("--grid-res", a.grid_res, "Latent grid resolution r_G");
    sub->add_flag("--grid-off", a.grid_off, "Naive triplane (r_G = 0)");
  };

  auto* pre = app.add_subcommand("preprocess", "Build the octree and leaf features of a shape");
  add_common(pre);
  pre->add_option("--shape", a.shapes, "Shape spec (.json) or mesh (.obj)");

  auto* tex = app.add_subcommand("train-extractor", "Train the octree feature extractor");
  add_common(tex);
  tex->add_option("--shape", a.shapes, "Training shapes (default: synthetic corpus)");
  tex->add_option("--steps", a.steps, "Training steps");

  auto* tvae = app.add_subcommand("train-vae", "Train the VAE");
  add_common(tvae);
  add_model(tvae);
  tvae->add_option("--shape", a.shapes, "Training shapes (default: synthetic corpus)");
  tvae->add_option("--steps", a.steps, "Training steps");
  tvae->add_option("--checkpoint", a.checkpoint, "Resume from a training checkpoint or start from a model");

  auto* up = app.add_subcommand("upscale", "Upsample the latent tokens of a trained model");
  add_common(up);
  add_model(up);
  up->add_option("--checkpoint", a.checkpoint, "Low-resolution VAE checkpoint");
  up->add_option("--mode", a.upsample_mode, "mean-preserving or interpolate");

  auto* rec = app.add_subcommand("reconstruct", "Encode a shape and extract the decoded surface as OBJ");
  add_common(rec);
  add_model(rec);
  rec->add_option("--checkpoint", a.checkpoint, "VAE checkpoint");
  rec->add_option("--shape", a.shapes, "Shape spec (.json) or mesh (.obj)");
  rec->add_option("--resolution", a.resolution, "Marching cubes resolution");

  auto* ev = app.add_subcommand("evaluate", "Score a reconstruction against a reference");
  add_common(ev);
  ev->add_option("--recon", a.recon, "Reconstructed mesh (.obj)")->required();
  ev->add_option("--gt", a.gt, "Reference mesh (.obj) or analytic shape spec (.json)")->required();

  auto* vis = app.add_subcommand("visualize", "Write channel-mean images of the decoded planes and grid");
  add_common(vis);
  add_model(vis);
  vis->add_option("--checkpoint", a.checkpoint, "VAE checkpoint");
  vis->add_option("--shape", a.shapes, "Shape spec (.json) or mesh (.obj)");

  auto* abl = app.add_subcommand("ablation", "Train and score several configurations on one corpus");
  add_common(abl);
  add_model(abl);
  abl->add_option("--steps", a.steps, "Training steps per run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  a.command = app.get_subcommands().front()->get_name();
  set_log_quiet(a.quiet);

  try {
    if (a.command == "preprocess") cmd_preprocess(a);
    else if (a.command == "train-extractor") cmd_train_extractor(a);
    else if (a.command == "train-vae") cmd_train_vae(a);
    else if (a.command == "upscale") cmd_upscale(a);
    else if (a.command == "reconstruct") cmd_reconstruct(a);
    else if (a.command == "evaluate") cmd_evaluate(a);
    else if (a.command == "visualize") cmd_visualize(a);
    else if (a.command == "ablation") cmd_ablation(a);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const RuntimeFailure& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 3;
  } catch (const c10::Error& e) {
    std::cerr << "failure: " << e.what_without_backtrace() << '\n';
    return 3;
  }
  return 0;
}
