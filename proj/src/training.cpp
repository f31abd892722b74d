#include "hyper3d/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>


#include "hyper3d/archive.hpp"
#include "hyper3d/errors.hpp"
#include "hyper3d/log.hpp"
#include "hyper3d/nn_util.hpp"

namespace hyper3d {

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("train config: " + what);
  };
  require(steps >= 0, "steps must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(lr > 0.0, "lr must be positive");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(supervision_points >= 1, "supervision_points must be >= 1");
  require(perturbations >= 1, "perturbations must be >= 1");
  require(perturb_scale >= 0.0 && perturb_scale <= 1.0, "perturb_scale must lie in [0, 1]");
  require(uniform_points >= 0, "uniform_points must be >= 0");
  require(kl_weight >= 0.0, "kl_weight must be >= 0");
  require(checkpoint_every >= 0 && log_every >= 0, "cadences must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"steps", steps},
          {"batch_size", batch_size},
          {"lr", lr},
          {"weight_decay", weight_decay},
          {"supervision_points", supervision_points},
          {"perturbations", perturbations},
          {"perturb_scale", perturb_scale},
          {"uniform_points", uniform_points},
          {"kl_weight", kl_weight},
          {"sample_posterior", sample_posterior},
          {"seed", seed},
          {"checkpoint_every", checkpoint_every},
          {"log_every", log_every}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
#define H3D_FIELD(name) c.name = j.value(#name, c.name)
    H3D_FIELD(steps);
    H3D_FIELD(batch_size);
    H3D_FIELD(lr);
    H3D_FIELD(weight_decay);
    H3D_FIELD(supervision_points);
    H3D_FIELD(perturbations);
    H3D_FIELD(perturb_scale);
    H3D_FIELD(uniform_points);
    H3D_FIELD(kl_weight);
    H3D_FIELD(sample_posterior);
    H3D_FIELD(seed);
    H3D_FIELD(checkpoint_every);
    H3D_FIELD(log_every);
#undef H3D_FIELD
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

ShapeSample prepare_shape(const std::string& name, const SignedField& field, const OctreeFeatureExtractor& extractor,
                          const VAEConfig& config) {
  ShapeSample s{name, field, {}, {}};
  const Octree tree = build_octree(field, config.octree_level);
  s.features = extract_features(extractor, tree, config.octree_level);
  s.input = build_input(s.features, config);
  return s;
}

std::vector<ShapeSample> prepare_dataset(const std::vector<NamedShape>& shapes, const OctreeFeatureExtractor& extractor,
                                         const VAEConfig& config) {
  std::vector<ShapeSample> out;
  out.reserve(shapes.size());
  for (const NamedShape& s : shapes) out.push_back(prepare_shape(s.name, analytic_shape(s.spec), extractor, config));
  return out;
}

OccupancyTarget make_supervision(const SignedField& field, const OctreeFeatures& features, const TrainConfig& config,
                                 uint64_t seed) {
  const std::vector<Vec3> pool = perturb_leaves(features, config.perturbations, config.perturb_scale, derive_seed(seed, 1));
  const size_t n = static_cast<size_t>(config.supervision_points);
  std::vector<Vec3> points;
  points.reserve(n + static_cast<size_t>(config.uniform_points));
  std::mt19937_64 rng(derive_seed(seed, 2));
  if (pool.size() == n) {
    points = pool;
  } else if (pool.size() > n) {
    std::vector<uint32_t> idx(pool.size());
    for (uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // Partial Fisher-Yates: the first n entries are a uniform subset.
    for (size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      points.push_back(pool[idx[i]]);
    }
  } else {
    std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
    for (size_t i = 0; i < n; ++i) points.push_back(pool[pick(rng)]);
  }
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < config.uniform_points; ++i) points.push_back({u(rng), u(rng), u(rng)});
  return occupancy_targets(field, points);
}

namespace {

std::string optim_key(const std::string& name, const char* what) { return "optim/" + name + "/" + what; }

void store_optimizer(const VAEModel& model, torch::optim::AdamW& opt, Archive& a) {
  for (const auto& item : model->named_parameters()) {
    auto it = opt.state().find(item.value().unsafeGetTensorImpl());
    if (it == opt.state().end()) continue;
    const auto& st = static_cast<const torch::optim::AdamWParamState&>(*it->second);
    a.tensors[optim_key(item.key(), "exp_avg")] = to_archive_tensor(st.exp_avg());
    a.tensors[optim_key(item.key(), "exp_avg_sq")] = to_archive_tensor(st.exp_avg_sq());
    a.tensors[optim_key(item.key(), "step")] = {{1}, {static_cast<float>(st.step())}};
  }
}

void restore_optimizer(const VAEModel& model, torch::optim::AdamW& opt, const Archive& a) {
  for (const auto& item : model->named_parameters()) {
    if (!a.contains(optim_key(item.key(), "step"))) continue;
    auto st = std::make_unique<torch::optim::AdamWParamState>();
    st->step(static_cast<int64_t>(a.at(optim_key(item.key(), "step")).data.at(0)));
    st->exp_avg(from_archive_tensor(a.at(optim_key(item.key(), "exp_avg"))));
    st->exp_avg_sq(from_archive_tensor(a.at(optim_key(item.key(), "exp_avg_sq"))));
    opt.state()[item.value().unsafeGetTensorImpl()] = std::move(st);
  }
}

void save_training_checkpoint(const std::filesystem::path& path, VAEModel& model, torch::optim::AdamW& opt, int step,
                              const TrainConfig& config) {
  Archive a;
  a.meta = {{"kind", "hyper3d_vae"},
            {"config", model->config().to_json()},
            {"token_length", model->config().tokens()},
            {"train_config", config.to_json()},
            {"step", step}};
  store_module(*model, a, "model/");
  store_optimizer(model, opt, a);
  save_archive(path, a);
}

VAELoss forward_shape(VAEModel& model, const ShapeSample& shape, const TrainConfig& config, uint64_t seed, bool sample) {
  const torch::Tensor P = input_tensor(shape.input, model->config(), derive_seed(seed, 11));
  const Posterior post = model->encode(P);
  const torch::Tensor z = sample ? reparameterize(post.mu, post.logvar, derive_seed(seed, 12)) : post.mu;
  const DecodedFields fields = model->decode(z);
  const OccupancyTarget sup = make_supervision(shape.field, shape.features, config, derive_seed(seed, 13));
  const torch::Tensor logits = model->predict_occupancy(fields, points_tensor(sup.points));
  const torch::Tensor targets = torch::from_blob(const_cast<float*>(sup.targets.data()),
                                                 {static_cast<int64_t>(sup.targets.size())}, torch::kFloat32)
                                    .clone();
  return vae_loss(logits, targets, post.mu, post.logvar, config.kl_weight);
}

}  // namespace

TrainResult train(const std::vector<ShapeSample>& data, const VAEConfig& vae_config, const TrainConfig& config,
                  const TrainOptions& options) {
  return train(data, make_vae(vae_config, derive_seed(config.seed, 0x7ae)), config, options);
}

TrainResult train(const std::vector<ShapeSample>& data, VAEModel model, const TrainConfig& config, const TrainOptions& options) {
  if (data.empty()) throw ConfigError("train: empty dataset");
  config.validate();
  torch::optim::AdamW opt(model->parameters(), torch::optim::AdamWOptions(config.lr).weight_decay(config.weight_decay));

  int start = 0;
  if (!options.resume_from.empty()) {
    if (!std::filesystem::exists(options.resume_from)) {
      throw ConfigError("resume checkpoint not found at '" + options.resume_from.string() + "'");
    }
    const Archive a = load_archive(options.resume_from);
    if (VAEConfig::from_json(a.meta.at("config")).to_json() != model->config().to_json()) {
      throw ConfigError("resume checkpoint was trained with a different VAE configuration");
    }
    restore_module(*model, a, "model/");
    restore_optimizer(model, opt, a);
    start = a.meta.value("step", 0);
  }

  std::ofstream csv;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    const auto csv_path = options.out_dir / "loss.csv";
    const bool append = start > 0 && std::filesystem::exists(csv_path);
    csv.open(csv_path, append ? std::ios::app : std::ios::trunc);
    if (!csv) throw ConfigError("cannot write '" + csv_path.string() + "'");
    if (!append) csv << "step,bce,kl,total\n";
  }

  TrainResult result;
  model->train();
  const int B = config.batch_size;
  for (int step = start; step < config.steps; ++step) {
    opt.zero_grad();
    StepLog log{step, 0.0, 0.0, 0.0};
    for (int b = 0; b < B; ++b) {
      const size_t s = (static_cast<size_t>(step) * static_cast<size_t>(B) + static_cast<size_t>(b)) % data.size();
      const VAELoss loss = forward_shape(model, data[s], config, derive_seed(config.seed, static_cast<uint64_t>(step), static_cast<uint64_t>(b)),
                                         config.sample_posterior);
      const double bce = loss.bce.item<double>(), kl = loss.kl.item<double>(), total = loss.total.item<double>();
      if (!std::isfinite(bce) || !std::isfinite(kl) || !std::isfinite(total)) {
        char msg[256];
        std::snprintf(msg, sizeof msg, "non-finite loss at step %d (shape '%s'): bce=%g kl=%g total=%g", step,
                      data[s].name.c_str(), bce, kl, total);
        throw RuntimeFailure(msg);
      }
      (loss.total / B).backward();
      log.bce += bce / B;
      log.kl += kl / B;
      log.total += total / B;
    }
    opt.step();
    result.history.push_back(log);
    if (csv.is_open()) csv << log.step << ',' << log.bce << ',' << log.kl << ',' << log.total << '\n';
    if (options.on_step) options.on_step(log);
    if (config.log_every > 0 && (step % config.log_every == 0 || step + 1 == config.steps)) {
      log_info(strformat("step %6d  bce %.5f  kl %.4f  total %.5f", step, log.bce, log.kl, log.total));
    }
    if (!options.out_dir.empty() && config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_%06d.h3d", step + 1);
      save_training_checkpoint(options.out_dir / name, model, opt, step + 1, config);
    }
  }
  model->eval();
  if (!options.out_dir.empty()) {
    result.checkpoint = options.out_dir / "final.h3d";
    save_training_checkpoint(result.checkpoint, model, opt, std::max(start, config.steps), config);
  }
  result.model = model;
  return result;
}

StepLog evaluate_loss(VAEModel& model, const std::vector<ShapeSample>& data, const TrainConfig& config, uint64_t seed) {
  torch::NoGradGuard no_grad;
  StepLog out;
  for (size_t s = 0; s < data.size(); ++s) {
    const VAELoss l = forward_shape(model, data[s], config, derive_seed(seed, s), false);
    out.bce += l.bce.item<double>() / static_cast<double>(data.size());
    out.kl += l.kl.item<double>() / static_cast<double>(data.size());
    out.total += l.total.item<double>() / static_cast<double>(data.size());
  }
  return out;
}

}  // namespace hyper3d
