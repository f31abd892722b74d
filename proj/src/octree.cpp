#include "hyper3d/octree.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <random>

#include "hyper3d/errors.hpp"

namespace hyper3d {

namespace {

constexpr char kOctreeMagic[8] = {'H', '3', 'D', 'O', 'C', 'T', 'R', 'E'};
constexpr char kFeaturesMagic[8] = {'H', '3', 'D', 'F', 'E', 'A', 'T', 'S'};
constexpr uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("unexpected end of file");
  return v;
}

void check_magic(std::istream& in, const char (&magic)[8], const char* what) {
  char buf[8];
  in.read(buf, 8);
  if (!in || std::memcmp(buf, magic, 8) != 0) throw ConfigError(std::string("not a ") + what + " file");
  const auto version = get<uint32_t>(in);
  if (version != kFormatVersion) {
    throw ConfigError(std::string(what) + " file version " + std::to_string(version) + " is not supported");
  }
}

}  // namespace

Octree::Octree(int depth, std::vector<std::vector<OctreeNode>> levels) : depth_(depth), levels_(std::move(levels)) {}

size_t Octree::node_count() const {
  size_t n = 0;
  for (const auto& l : levels_) n += l.size();
  return n;
}

bool Octree::crosses_surface(const OctreeNode& n) {
  constexpr double kSqrt3 = 1.7320508075688772;
  return std::abs(n.sdf) <= kSqrt3 * n.half_size;
}

std::vector<int32_t> Octree::leaf_indices(int l) const {
  std::vector<int32_t> out;
  if (l < 0 || l >= static_cast<int>(levels_.size())) return out;
  const auto& nodes = levels_[static_cast<size_t>(l)];
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (crosses_surface(nodes[i])) out.push_back(static_cast<int32_t>(i));
  }
  return out;
}

size_t Octree::leaf_count(int l) const { return leaf_indices(l).size(); }

Octree build_octree(const SignedField& field, int depth) {
  if (depth < 1 || depth > kMaxOctreeDepth) {
    throw ConfigError("build_octree: depth must lie in [1, " + std::to_string(kMaxOctreeDepth) + "]");
  }
  std::vector<std::vector<OctreeNode>> levels(1);
  OctreeNode root;
  root.center = {};
  root.half_size = 1.0;
  root.sdf = field.sdf(root.center);
  levels[0].push_back(root);

  for (int l = 0; l < depth; ++l) {
    auto& current = levels[static_cast<size_t>(l)];
    std::vector<OctreeNode> next;
    for (size_t i = 0; i < current.size(); ++i) {
      OctreeNode& node = current[i];
      if (!Octree::crosses_surface(node)) continue;
      node.split = true;
      node.first_child = static_cast<int32_t>(next.size());
      const double h = node.half_size * 0.5;
      for (int o = 0; o < 8; ++o) {
        OctreeNode child;
        child.center = node.center + Vec3{(o & 1) ? h : -h, (o & 2) ? h : -h, (o & 4) ? h : -h};
        child.half_size = h;
        child.sdf = field.sdf(child.center);
        child.parent = static_cast<int32_t>(i);
        next.push_back(child);
      }
    }
    if (next.empty()) break;
    levels.push_back(std::move(next));
  }
  // Keep one (possibly empty) vector per level so level(l) is valid up to depth.
  levels.resize(static_cast<size_t>(depth) + 1);
  return Octree(depth, std::move(levels));
}

void write_octree(std::ostream& out, const Octree& tree) {
  out.write(kOctreeMagic, 8);
  put<uint32_t>(out, kFormatVersion);
  put<uint32_t>(out, static_cast<uint32_t>(tree.depth()));
  for (int l = 0; l <= tree.depth(); ++l) {
    const auto& nodes = tree.level(l);
    put<uint64_t>(out, nodes.size());
    for (const OctreeNode& n : nodes) {
      put<double>(out, n.center.x);
      put<double>(out, n.center.y);
      put<double>(out, n.center.z);
      put<double>(out, n.half_size);
      put<double>(out, n.sdf);
      put<uint8_t>(out, n.split ? 1 : 0);
      put<int32_t>(out, n.parent);
      put<int32_t>(out, n.first_child);
    }
  }
}

Octree read_octree(std::istream& in) {
  check_magic(in, kOctreeMagic, "octree");
  const auto depth = static_cast<int>(get<uint32_t>(in));
  if (depth < 1 || depth > kMaxOctreeDepth) throw ConfigError("octree file has invalid depth");
  std::vector<std::vector<OctreeNode>> levels(static_cast<size_t>(depth) + 1);
  for (auto& nodes : levels) {
    const auto count = get<uint64_t>(in);
    nodes.resize(count);
    for (OctreeNode& n : nodes) {
      n.center.x = get<double>(in);
      n.center.y = get<double>(in);
      n.center.z = get<double>(in);
      n.half_size = get<double>(in);
      n.sdf = get<double>(in);
      n.split = get<uint8_t>(in) != 0;
      n.parent = get<int32_t>(in);
      n.first_child = get<int32_t>(in);
    }
  }
  return Octree(depth, std::move(levels));
}

void save_octree(const std::filesystem::path& path, const Octree& tree) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write octree file '" + path.string() + "'");
  write_octree(out, tree);
}

Octree load_octree(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read octree file '" + path.string() + "'");
  return read_octree(in);
}

void save_features(const std::filesystem::path& path, const OctreeFeatures& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write features file '" + path.string() + "'");
  out.write(kFeaturesMagic, 8);
  put<uint32_t>(out, kFormatVersion);
  put<uint32_t>(out, static_cast<uint32_t>(f.level));
  put<uint64_t>(out, f.size());
  put<uint32_t>(out, static_cast<uint32_t>(f.channels));
  for (size_t i = 0; i < f.size(); ++i) {
    put<double>(out, f.positions[i].x);
    put<double>(out, f.positions[i].y);
    put<double>(out, f.positions[i].z);
    put<double>(out, f.half_sizes[i]);
  }
  out.write(reinterpret_cast<const char*>(f.features.data()),
            static_cast<std::streamsize>(f.features.size() * sizeof(float)));
}

OctreeFeatures load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read features file '" + path.string() + "'");
  check_magic(in, kFeaturesMagic, "octree features");
  OctreeFeatures f;
  f.level = static_cast<int>(get<uint32_t>(in));
  const auto n = get<uint64_t>(in);
  f.channels = static_cast<int>(get<uint32_t>(in));
  f.positions.resize(n);
  f.half_sizes.resize(n);
  for (size_t i = 0; i < n; ++i) {
    f.positions[i].x = get<double>(in);
    f.positions[i].y = get<double>(in);
    f.positions[i].z = get<double>(in);
    f.half_sizes[i] = get<double>(in);
  }
  f.features.resize(n * static_cast<size_t>(f.channels));
  in.read(reinterpret_cast<char*>(f.features.data()), static_cast<std::streamsize>(f.features.size() * sizeof(float)));
  if (!in) throw ConfigError("features file '" + path.string() + "' is truncated");
  return f;
}

std::vector<Vec3> perturb_leaves(const OctreeFeatures& features, int k, double scale, uint64_t seed) {
  if (k < 1) throw ConfigError("perturb_leaves: k must be >= 1");
  if (scale < 0.0 || scale > 1.0) throw ConfigError("perturb_leaves: scale must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(features.size() * static_cast<size_t>(k));
  for (size_t i = 0; i < features.size(); ++i) {
    const double r = scale * features.half_sizes[i];
    for (int j = 0; j < k; ++j) {
      Vec3 p = features.positions[i];
      for (int a = 0; a < 3; ++a) p[a] = std::clamp(p[a] + r * uniform(rng), -1.0, 1.0);
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace hyper3d
