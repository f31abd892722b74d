#include <doctest.h>

#include <fstream>

#include "hyper3d/errors.hpp"
#include "hyper3d/nn_util.hpp"
#include "hyper3d/upscale.hpp"
#include "nn_fixtures.hpp"

using namespace hyper3d;
using hyper3d::testing::micro_config;
using hyper3d::testing::sphere_field;
using hyper3d::testing::untrained_extractor;

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hyper3d_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TrainConfig quick_train(int steps) {
  TrainConfig t;
  t.steps = steps;
  t.lr = 1e-3;
  t.supervision_points = 256;
  t.uniform_points = 64;
  t.log_every = 0;
  t.seed = 17;
  return t;
}

}  // namespace

TEST_CASE("supervision uses the whole pool when it matches the budget") {
  const VAEConfig c = micro_config();
  const OctreeFeatureExtractor e = untrained_extractor(c.octree_level, c.octree_channels);
  const SignedField field = sphere_field();
  const ShapeSample s = prepare_shape("sphere", field, e, c);
  TrainConfig t;
  t.uniform_points = 0;
  t.perturbations = 4;
  t.supervision_points = static_cast<int>(4 * s.features.size());
  const OccupancyTarget sup = make_supervision(field, s.features, t, 9);
  REQUIRE(sup.points.size() == 4 * s.features.size());
  // Same stream as the pool itself: the sample is the pool, in order.
  const auto pool = perturb_leaves(s.features, 4, 1.0, derive_seed(9, 1));
  CHECK((sup.points == pool));
}

TEST_CASE("supervision targets lie in [0,1] and concentrate on the band") {
  VAEConfig c = micro_config();
  c.octree_level = 6;
  const OctreeFeatureExtractor e = untrained_extractor(6, c.octree_channels);
  const SignedField field = sphere_field();
  const ShapeSample s = prepare_shape("sphere", field, e, c);
  TrainConfig t;
  t.uniform_points = 0;
  t.supervision_points = 4000;
  const OccupancyTarget sup = make_supervision(field, s.features, t, 2);
  CHECK(sup.points.size() == 4000);
  size_t fractional = 0;
  for (float v : sup.targets) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
    fractional += v > 0.0f && v < 1.0f;
  }
  CHECK(static_cast<double>(fractional) / 4000.0 > 0.2);

  t.supervision_points = static_cast<int>(10 * s.features.size());  // larger than the pool
  t.uniform_points = 100;
  const OccupancyTarget big = make_supervision(field, s.features, t, 2);
  CHECK(big.points.size() == 10 * s.features.size() + 100);
}

TEST_CASE("training logs every step and resumes exactly") {
  const VAEConfig c = micro_config();
  const OctreeFeatureExtractor e = untrained_extractor(c.octree_level, c.octree_channels);
  const std::vector<ShapeSample> data = {prepare_shape("sphere", sphere_field(), e, c),
                                         prepare_shape("small", sphere_field(0.3), e, c)};
  TrainConfig t = quick_train(6);
  t.batch_size = 2;
  t.checkpoint_every = 3;

  const fs::path full = scratch_dir("full");
  TrainOptions o1;
  o1.out_dir = full;
  const TrainResult a = train(data, c, t, o1);
  REQUIRE(a.history.size() == 6);
  CHECK(fs::exists(full / "checkpoint_000003.h3d"));
  CHECK(fs::exists(full / "final.h3d"));
  for (const StepLog& s : a.history) CHECK(std::abs(s.total - (s.bce + t.kl_weight * s.kl)) < 1e-6);

  const fs::path resumed = scratch_dir("resumed");
  TrainOptions o2;
  o2.out_dir = resumed;
  o2.resume_from = full / "checkpoint_000003.h3d";
  const TrainResult b = train(data, c, t, o2);
  REQUIRE(b.history.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(b.history[static_cast<size_t>(i)].step == a.history[static_cast<size_t>(i) + 3].step);
    CHECK(b.history[static_cast<size_t>(i)].total == a.history[static_cast<size_t>(i) + 3].total);
  }
  for (const auto& p : a.model->named_parameters()) CHECK(torch::equal(p.value(), b.model->named_parameters()[p.key()]));

  std::ifstream csv(full / "loss.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "step,bce,kl,total");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("non-finite loss aborts with the step and components") {
  const VAEConfig c = micro_config();
  const OctreeFeatureExtractor e = untrained_extractor(c.octree_level, c.octree_channels);
  const std::vector<ShapeSample> data = {prepare_shape("sphere", sphere_field(), e, c)};
  VAEModel m = make_vae(c, 1);
  {
    torch::NoGradGuard ng;
    m->geometry_mlp()->parameters().front().fill_(std::numeric_limits<float>::quiet_NaN());
  }
  try {
    train(data, m, quick_train(3));
    FAIL("expected a RuntimeFailure");
  } catch (const RuntimeFailure& err) {
    const std::string msg = err.what();
    CHECK(msg.find("step 0") != std::string::npos);
    CHECK(msg.find("bce=") != std::string::npos);
    CHECK(msg.find("kl=") != std::string::npos);
  }
}

TEST_CASE("training configs validate") {
  TrainConfig t;
  t.batch_size = 0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json({{"perturb_scale", 2.0}}), ConfigError);
  const TrainConfig r = TrainConfig::from_json(TrainConfig{}.to_json());
  CHECK(r.to_json() == TrainConfig{}.to_json());
}

TEST_CASE("token upsampling: constants, ordering and pooling") {
  const int64_t C = 3;
  for (TokenUpsampling mode : {TokenUpsampling::MeanPreserving, TokenUpsampling::Interpolate}) {
    const torch::Tensor constant = torch::full({3 * 4 * 4, C}, 0.75);
    CHECK((upsample_plane_tokens(constant, 4, 8, mode) - 0.75).abs().max().item<double>() < 1e-6);
    const torch::Tensor gconst = torch::full({8, C}, -2.0);
    CHECK((upsample_grid_tokens(gconst, 2, 6, mode) + 2.0).abs().max().item<double>() < 1e-6);
  }

  // Plane p holds the value p everywhere: ordering must keep planes apart.
  torch::Tensor planes = torch::zeros({3 * 16, 1});
  for (int p = 0; p < 3; ++p) planes.slice(0, p * 16, (p + 1) * 16).fill_(p);
  const torch::Tensor up = upsample_plane_tokens(planes, 4, 8, TokenUpsampling::Interpolate);
  for (int p = 0; p < 3; ++p) CHECK(up.slice(0, p * 64, (p + 1) * 64).eq(p).all().item<bool>());

  // A ramp along u is reproduced at interior fine texel centres.
  torch::Tensor ramp = torch::zeros({3 * 16, 1});
  for (int v = 0; v < 4; ++v) {
    for (int u = 0; u < 4; ++u) ramp[v * 4 + u][0] = -1.0 + (u + 0.5) * 0.5;
  }
  const torch::Tensor fine = upsample_plane_tokens(ramp, 4, 8, TokenUpsampling::Interpolate);
  for (int u = 1; u < 7; ++u) CHECK(fine[3 * 8 + u][0].item<double>() == doctest::Approx(-1.0 + (u + 0.5) * 0.25).epsilon(1e-6));

  auto gen = make_generator(5);
  const torch::Tensor e = at::randn({3 * 16, C}, gen, torch::kFloat32);
  const torch::Tensor mp = upsample_plane_tokens(e, 4, 12, TokenUpsampling::MeanPreserving);
  CHECK((downsample_plane_tokens(mp, 12, 4) - e).abs().max().item<double>() < 1e-5);
  const torch::Tensor g = at::randn({27, C}, gen, torch::kFloat32);
  CHECK((downsample_grid_tokens(upsample_grid_tokens(g, 3, 6, TokenUpsampling::MeanPreserving), 6, 3) - g).abs().max().item<double>() < 1e-5);
  CHECK(torch::equal(upsample_plane_tokens(e, 4, 4, TokenUpsampling::MeanPreserving), e));

  CHECK_THROWS_AS(upsample_plane_tokens(e, 4, 6, TokenUpsampling::Interpolate), ConfigError);
  CHECK_THROWS_AS(upsample_plane_tokens(e, 4, 2, TokenUpsampling::Interpolate), ConfigError);
}

TEST_CASE("upscale_tokens builds a larger model with the other weights copied") {
  VAEConfig c = micro_config();
  VAEModel low = make_vae(c, 3);
  VAEModel high = upscale_tokens(low, 8, 4);
  CHECK(high->config().tokens() == 3 * 64 + 64);
  auto low_params = low->named_parameters();
  for (const auto& p : high->named_parameters()) {
    if (p.key().ends_with("tokens")) continue;
    CHECK(torch::equal(p.value(), low_params[p.key()]));
  }
  torch::NoGradGuard ng;
  const DecodedFields f = high->decode(torch::zeros({high->config().tokens(), c.latent_channels}));
  CHECK(f.planes.size(2) == 64);

  const auto path = fs::temp_directory_path() / "hyper3d_test_upscaled.h3d";
  save_vae(path, high);
  CHECK(load_vae(path, 8, 4)->config().tokens() == 256);
  fs::remove(path);

  CHECK_THROWS_AS(upscale_tokens(low, 6, 4), ConfigError);
  CHECK_THROWS_AS(upscale_tokens(low, 8, 0), ConfigError);
  c.grid_res = 0;
  CHECK_THROWS_AS(upscale_tokens(make_vae(c, 1), 8, 4), ConfigError);
}

TEST_CASE("upscaling (32,8) to (64,16) gives 16384 tokens") {
  VAEConfig c = micro_config();
  c.triplane_res = 32;
  c.grid_res = 8;
  VAEModel high = upscale_tokens(make_vae(c, 0), 64, 16);
  CHECK(high->tokens().size(0) == 16384);
}
