#include <doctest.h>

#include <cmath>
#include <random>

#include "hyper3d/errors.hpp"
#include "hyper3d/nn_util.hpp"
#include "nn_fixtures.hpp"

using namespace hyper3d;
using hyper3d::testing::micro_config;
using hyper3d::testing::sphere_field;
using hyper3d::testing::untrained_extractor;

namespace {

torch::Tensor random_input(const VAEConfig& c, int64_t n, uint64_t seed) {
  auto gen = make_generator(seed);
  return at::randn({n, c.input_channels()}, gen, torch::kFloat32);
}

}  // namespace

TEST_CASE("decoded resolutions are eight times the latent ones") {
  const VAEConfig c = vae_preset("tiny");
  CHECK(c.decoded_res() == 64);
  CHECK(c.decoded_grid_res() == 32);
  VAEModel m = make_vae(micro_config(), 1);
  torch::NoGradGuard ng;
  const DecodedFields f = m->decode(torch::zeros({m->config().tokens(), m->config().latent_channels}));
  CHECK(f.planes.sizes() == torch::IntArrayRef{4, 3 * 32, 32});
  CHECK(f.grid.sizes() == torch::IntArrayRef{4, 16, 16, 16});
}

TEST_CASE("paper layout (32,8) encodes to 3584 x 16") {
  VAEConfig c = vae_preset("desk");
  c.latent_channels = 16;
  VAEModel m = make_vae(c, 0);
  torch::NoGradGuard ng;
  const Posterior p = m->encode(random_input(c, 50, 1));
  CHECK(p.mu.sizes() == torch::IntArrayRef{3584, 16});
  CHECK(p.logvar.sizes() == torch::IntArrayRef{3584, 16});
  CHECK(m->tokens().sizes() == torch::IntArrayRef{3584, c.token_width});
}

TEST_CASE("encode output length is independent of the point count") {
  VAEModel m = make_vae(micro_config(), 2);
  torch::NoGradGuard ng;
  for (int64_t n : {1, 7, 300}) CHECK(m->encode(random_input(m->config(), n, 5)).mu.size(0) == 56);
  CHECK_THROWS_AS(m->encode(torch::zeros({0, m->config().input_channels()})), ConfigError);
}

TEST_CASE("encode is invariant to the order of input points") {
  VAEModel m = make_vae(micro_config(), 4);
  torch::NoGradGuard ng;
  const torch::Tensor P = random_input(m->config(), 97, 9);
  auto gen = make_generator(11);
  const torch::Tensor perm = at::randperm(97, gen, torch::kInt64);
  const Posterior a = m->encode(P);
  const Posterior b = m->encode(P.index_select(0, perm));
  CHECK((a.mu - b.mu).abs().max().item<double>() < 1e-5);
  CHECK((a.logvar - b.logvar).abs().max().item<double>() < 1e-5);
}

TEST_CASE("reparameterize: moments, determinism and the collapsed limit") {
  const torch::Tensor mu = torch::zeros({10000, 4});
  const torch::Tensor lv = torch::zeros({10000, 4});
  const torch::Tensor z = reparameterize(mu, lv, 42);
  const torch::Tensor mean = z.mean(0), var = z.var(0);
  for (int c = 0; c < 4; ++c) {
    CHECK(std::abs(mean[c].item<double>()) < 0.05);
    CHECK(std::abs(var[c].item<double>() - 1.0) < 0.05);
  }
  CHECK(torch::equal(z, reparameterize(mu, lv, 42)));
  CHECK_FALSE(torch::equal(z, reparameterize(mu, lv, 43)));
  const torch::Tensor m2 = torch::randn({5, 3});
  const torch::Tensor z2 = reparameterize(m2, torch::full({5, 3}, -1e4), 1);
  CHECK((z2 - m2).abs().max().item<double>() < 1e-6);
  CHECK_THROWS_AS(reparameterize(mu, torch::zeros({3, 4}), 0), ConfigError);
}

TEST_CASE("decode is deterministic and checks the token count") {
  VAEModel m = make_vae(micro_config(), 6);
  torch::NoGradGuard ng;
  const torch::Tensor z = torch::randn({56, 4});
  const DecodedFields a = m->decode(z), b = m->decode(z);
  CHECK(torch::equal(a.planes, b.planes));
  CHECK(torch::equal(a.grid, b.grid));
  try {
    m->decode(torch::zeros({55, 4}));
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("55") != std::string::npos);
    CHECK(msg.find("56") != std::string::npos);
  }
}

TEST_CASE("grid-off model has no grid parameters and decodes a plain triplane") {
  VAEConfig c = micro_config();
  c.grid_res = 0;
  VAEModel m = make_vae(c, 1);
  for (const auto& p : m->named_parameters()) CHECK(p.key().find("grid") == std::string::npos);
  torch::NoGradGuard ng;
  const DecodedFields f = m->decode(torch::zeros({48, 4}));
  CHECK_FALSE(f.grid.defined());
  CHECK(m->query(f, torch::zeros({5, 3})).size(1) == 3 * c.feature_channels);
}

TEST_CASE("torch query agrees with the scalar hybrid triplane lookup") {
  VAEModel m = make_vae(micro_config(), 8);
  torch::NoGradGuard ng;
  const DecodedFields f = m->decode(torch::randn({56, 4}));
  const HybridTriplane h = to_hybrid(f);
  const DecodedFields back = from_hybrid(h);
  CHECK(torch::equal(back.planes, f.planes));
  CHECK(torch::equal(back.grid, f.grid));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 500; ++i) pts.push_back({u(rng), u(rng), u(rng)});
  pts.push_back({1.0, -1.0, 1.0});
  const torch::Tensor q = m->query(f, points_tensor(pts));
  double worst = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const std::vector<float> ref = query_hybrid(h, pts[i]);
    for (size_t c = 0; c < ref.size(); ++c) {
      worst = std::max(worst, std::abs(q[static_cast<int64_t>(i)][static_cast<int64_t>(c)].item<double>() - ref[c]));
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("predict_occupancy returns one logit per point; zero MLP gives 0.5") {
  VAEModel m = make_vae(micro_config(), 9);
  torch::NoGradGuard ng;
  const DecodedFields f = m->decode(torch::randn({56, 4}));
  CHECK(m->predict_occupancy(f, torch::zeros({17, 3})).sizes() == torch::IntArrayRef{17});
  for (auto& p : m->geometry_mlp()->parameters()) p.zero_();
  const torch::Tensor logits = m->predict_occupancy(f, torch::rand({33, 3}) * 2 - 1);
  CHECK(logits.abs().max().item<double>() == 0.0);
  CHECK(torch::sigmoid(logits).eq(0.5).all().item<bool>());
}

TEST_CASE("vae_loss matches a scalar loop") {
  auto gen = make_generator(21);
  const torch::Tensor logits = at::randn({40}, gen, torch::kFloat64) * 3;
  const torch::Tensor targets = at::rand({40}, gen, torch::kFloat64);
  const torch::Tensor mu = at::randn({6, 3}, gen, torch::kFloat64);
  const torch::Tensor lv = at::randn({6, 3}, gen, torch::kFloat64);
  const VAELoss l = vae_loss(logits, targets, mu, lv, 0.37);

  double bce = 0.0;
  for (int i = 0; i < 40; ++i) {
    const double x = logits[i].item<double>(), y = targets[i].item<double>();
    const double p = 1.0 / (1.0 + std::exp(-x));
    bce += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  bce /= 40.0;
  double kl = 0.0;
  for (int i = 0; i < 6; ++i) {
    for (int c = 0; c < 3; ++c) {
      const double m = mu[i][c].item<double>(), v = lv[i][c].item<double>();
      kl += 0.5 * (m * m + std::exp(v) - v - 1.0);
    }
  }
  kl /= 18.0;
  CHECK(std::abs(l.bce.item<double>() - bce) < 1e-6);
  CHECK(std::abs(l.kl.item<double>() - kl) < 1e-6);
  CHECK(std::abs(l.total.item<double>() - (bce + 0.37 * kl)) < 1e-6);
}

TEST_CASE("vae_loss limits and errors") {
  const torch::Tensor t = torch::tensor({0.0f, 1.0f, 1.0f, 0.0f});
  const torch::Tensor logits = torch::tensor({-15.0f, 15.0f, 15.0f, -15.0f});
  const torch::Tensor z = torch::zeros({2, 2});
  const VAELoss l = vae_loss(logits, t, z, z, 1e-4);
  CHECK(l.bce.item<double>() < 1e-6);
  CHECK(l.kl.item<double>() == 0.0);
  CHECK(vae_loss(logits, t, torch::randn({3, 2}), torch::randn({3, 2}), 1.0).kl.item<double>() >= 0.0);
  CHECK_THROWS_AS(vae_loss(logits, torch::tensor({0.0f, 1.2f, 0.5f, 0.5f}), z, z, 1e-4), ConfigError);
  CHECK_THROWS_AS(vae_loss(logits, t, z, z, -1.0), ConfigError);
}

TEST_CASE("build_input layout") {
  VAEConfig c = micro_config();
  c.num_frequencies = 8;
  c.octree_channels = 64;
  CHECK(c.input_channels() == 115);
  c.octree_level = 6;
  ExtractorConfig ec;
  ec.channels = 64;
  ec.levels = {6};
  OctreeFeatureExtractor e = make_extractor(ec);
  const SignedField field = sphere_field();
  const PointSet p = build_input(field, e, c);
  const Octree tree = build_octree(field, 6);
  CHECK(p.size() == tree.leaf_count(6));
  CHECK(p.channels == 115);

  OctreeFeatures f = extract_features(e, tree, 6);
  std::fill(f.features.begin(), f.features.end(), 0.0f);
  const PointSet z = build_input(f, c);
  std::vector<float> fourier(51);
  for (size_t i = 0; i < z.size(); i += 97) {
    fourier_embed_point(z.positions[i], 8, fourier);
    for (int k = 0; k < 51; ++k) CHECK(z.row(i)[static_cast<size_t>(k)] == fourier[static_cast<size_t>(k)]);
    for (int k = 51; k < 115; ++k) CHECK(z.row(i)[static_cast<size_t>(k)] == 0.0f);
  }
}

TEST_CASE("input_tensor subsamples or pads deterministically") {
  VAEConfig c = micro_config();
  PointSet p;
  p.channels = c.input_channels();
  for (int i = 0; i < 10; ++i) {
    p.positions.push_back({0, 0, 0});
    for (int k = 0; k < p.channels; ++k) p.features.push_back(static_cast<float>(i));
  }
  c.input_points = 4;
  const torch::Tensor a = input_tensor(p, c, 5);
  CHECK(a.size(0) == 4);
  CHECK(torch::equal(a, input_tensor(p, c, 5)));
  CHECK(std::get<0>(torch::_unique(a.select(1, 0))).size(0) == 4);
  c.input_points = 25;
  const torch::Tensor b = input_tensor(p, c, 5);
  CHECK(b.size(0) == 25);
  CHECK(torch::equal(b.slice(0, 0, 10).select(1, 0), torch::arange(10, torch::kFloat32)));
}

TEST_CASE("checkpoint round trip and layout mismatch message") {
  VAEModel m = make_vae(micro_config(), 12);
  const auto path = std::filesystem::temp_directory_path() / "hyper3d_test_vae.h3d";
  save_vae(path, m);
  VAEModel back = load_vae(path);
  for (const auto& p : m->named_parameters()) CHECK(torch::equal(p.value(), back->named_parameters()[p.key()]));
  try {
    load_vae(path, 8, 4);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("56") != std::string::npos);
    CHECK(msg.find("256") != std::string::npos);
  }
  CHECK_THROWS_AS(load_vae(path.string() + ".missing"), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("loss gradients match central differences in double precision") {
  VAEConfig c = micro_config();
  VAEModel m = make_vae(c, 31);
  m->to(torch::kFloat64);
  auto gen = make_generator(77);
  const torch::Tensor P = at::randn({40, c.input_channels()}, gen, torch::kFloat64);
  const torch::Tensor pts = at::rand({64, 3}, gen, torch::kFloat64) * 2 - 1;
  const torch::Tensor targets = at::rand({64}, gen, torch::kFloat64);
  auto loss_fn = [&] {
    const Posterior post = m->encode(P);
    const torch::Tensor z = reparameterize(post.mu, post.logvar, 5);
    return vae_loss(m->predict_occupancy(m->decode(z), pts), targets, post.mu, post.logvar, 0.1).total;
  };
  m->zero_grad();
  loss_fn().backward();

  std::vector<std::pair<torch::Tensor, torch::Tensor>> params;
  for (auto& p : m->parameters()) params.emplace_back(p, p.grad().clone());
  std::mt19937_64 rng(4);
  int checked = 0;
  double worst = 0.0;
  for (int attempt = 0; attempt < 2000 && checked < 10; ++attempt) {
    auto& [p, g] = params[rng() % params.size()];
    const int64_t i = static_cast<int64_t>(rng() % static_cast<uint64_t>(p.numel()));
    const double analytic = g.view(-1)[i].item<double>();
    if (std::abs(analytic) < 1e-4) continue;
    torch::NoGradGuard ng;
    const double orig = p.view(-1)[i].item<double>();
    const double h = 1e-4;
    p.view(-1)[i] = orig + h;
    const double up = loss_fn().item<double>();
    p.view(-1)[i] = orig - h;
    const double down = loss_fn().item<double>();
    p.view(-1)[i] = orig;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(analytic - numeric) / std::max(std::abs(analytic), std::abs(numeric)));
    ++checked;
  }
  CHECK(checked == 10);
  CHECK(worst < 1e-3);
}
