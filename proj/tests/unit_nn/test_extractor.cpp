#include <doctest.h>

#include "hyper3d/errors.hpp"
#include "nn_fixtures.hpp"

using namespace hyper3d;
using hyper3d::testing::sphere_field;
using hyper3d::testing::untrained_extractor;

TEST_CASE("untrained extractor emits finite features of the configured width") {
  const OctreeFeatureExtractor e = untrained_extractor(6, 24);
  const Octree tree = build_octree(sphere_field(), 6);
  const OctreeFeatures f = extract_features(e, tree, 6);
  CHECK(f.channels == 24);
  CHECK(f.size() == tree.leaf_count(6));
  CHECK(f.features.size() == f.size() * 24);
  for (float v : f.features) REQUIRE(std::isfinite(v));
  const auto leaves = tree.leaf_indices(6);
  for (size_t i = 0; i < f.size(); i += 211) CHECK((f.positions[i] == tree.level(6)[static_cast<size_t>(leaves[i])].center));

  const OctreeFeatures again = extract_features(e, tree, 6);
  CHECK(again.features == f.features);
}

TEST_CASE("extract_features rejects unsupported levels and shallow trees") {
  const OctreeFeatureExtractor e = untrained_extractor(6, 8);
  CHECK_THROWS_AS(extract_features(e, build_octree(sphere_field(), 7), 7), ConfigError);
  CHECK_THROWS_AS(extract_features(e, build_octree(sphere_field(), 5), 6), ConfigError);
}

TEST_CASE("extractor config validation") {
  ExtractorConfig c;
  CHECK_NOTHROW(c.validate());
  c.levels = {5, 6};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(c.validate(true));
  c.levels = {};
  CHECK_THROWS_AS(c.validate(true), ConfigError);
  CHECK_THROWS_AS(train_extractor({}, ExtractorConfig{}), ConfigError);
  ExtractorConfig shallow;
  shallow.levels = {3};
  CHECK_THROWS_AS(train_extractor({sphere_field()}, shallow), ConfigError);
}

TEST_CASE("short extractor training is seeded and round-trips through disk") {
  ExtractorConfig c;
  c.levels = {6};
  c.channels = 16;
  c.steps = 5;
  c.nodes_per_level = 512;
  const OctreeFeatureExtractor a = train_extractor({sphere_field()}, c);
  const OctreeFeatureExtractor b = train_extractor({sphere_field()}, c);
  const Octree tree = build_octree(sphere_field(), 6);
  const OctreeFeatures fa = extract_features(a, tree, 6);
  CHECK(extract_features(b, tree, 6).features == fa.features);

  const auto path = std::filesystem::temp_directory_path() / "hyper3d_test_extractor.h3d";
  save_extractor(path, a);
  CHECK(extract_features(load_extractor(path), tree, 6).features == fa.features);
  std::filesystem::remove(path);

  try {
    load_extractor("/nonexistent/extractor.h3d");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("/nonexistent/extractor.h3d") != std::string::npos);
    CHECK(msg.find("train-extractor") != std::string::npos);
  }
}
