#include "hyper3d/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>

#include <spdlog/spdlog.h>

#include "hyper3d/errors.hpp"
#include "hyper3d/kdtree.hpp"
#include "hyper3d/representation.hpp"

namespace hyper3d {

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Region classification of the closest point (Ericson, Real-Time Collision Detection 5.1.5).
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return norm(ap);
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return norm(bp);
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return norm(p - (a + ab * (d1 / (d1 - d3))));
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return norm(cp);
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return norm(p - (a + ac * (d2 / (d2 - d6))));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return norm(p - (b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)))));
  }
  const double denom = va + vb + vc;
  if (!(std::abs(denom) > 0.0)) return std::min({norm(ap), norm(bp), norm(cp)});
  const double v = vb / denom, w = vc / denom;
  return norm(p - (a + ab * v + ac * w));
}

namespace {

struct Samples {
  PointSet a, b;
};

Samples sample_pair(const Mesh& recon, const Mesh& gt, const SampleOptions& opt) {
  if (recon.empty() || gt.empty()) throw ConfigError("metric requires two non-empty meshes");
  return {sample_surface(recon, opt.n_samples, opt.seed), sample_surface(gt, opt.n_samples, opt.seed)};
}

// Nearest-neighbour distances from every point of `from` to `to`.
std::vector<KdTree::Hit> nearest_all(const std::vector<Vec3>& from, const KdTree& to) {
  std::vector<KdTree::Hit> hits(from.size());
  for (size_t i = 0; i < from.size(); ++i) hits[i] = to.nearest(from[i]);
  return hits;
}

double fraction_within(const std::vector<KdTree::Hit>& hits, double tau) {
  size_t n = 0;
  for (const auto& h : hits) n += h.distance_sq <= tau * tau;
  return static_cast<double>(n) / static_cast<double>(hits.size());
}

double mean_distance(const std::vector<KdTree::Hit>& hits) {
  double s = 0.0;
  for (const auto& h : hits) s += std::sqrt(h.distance_sq);
  return s / static_cast<double>(hits.size());
}

double mean_abs_cos(const PointSet& from, const PointSet& to, const std::vector<KdTree::Hit>& hits) {
  double s = 0.0;
  for (size_t i = 0; i < hits.size(); ++i) s += std::abs(dot(from.normals[i], to.normals[hits[i].index]));
  return s / static_cast<double>(hits.size());
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

double f_score(const Mesh& recon, const Mesh& gt, double tau, SampleOptions opt) {
  if (recon.empty() || gt.empty()) {
    spdlog::warn("f_score: empty mesh, scoring 0");
    return 0.0;
  }
  const Samples s = sample_pair(recon, gt, opt);
  const KdTree ta(s.a.positions), tb(s.b.positions);
  const double precision = fraction_within(nearest_all(s.a.positions, tb), tau);
  const double recall = fraction_within(nearest_all(s.b.positions, ta), tau);
  return harmonic(precision, recall);
}

double chamfer_points(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw ConfigError("chamfer: empty point set");
  const KdTree ta(a), tb(b);
  return 0.5 * (mean_distance(nearest_all(a, tb)) + mean_distance(nearest_all(b, ta)));
}

double chamfer(const Mesh& recon, const Mesh& gt, SampleOptions opt) {
  const Samples s = sample_pair(recon, gt, opt);
  return chamfer_points(s.a.positions, s.b.positions);
}

double normal_consistency(const Mesh& recon, const Mesh& gt, SampleOptions opt) {
  const Samples s = sample_pair(recon, gt, opt);
  const KdTree ta(s.a.positions), tb(s.b.positions);
  return 0.5 * (mean_abs_cos(s.a, s.b, nearest_all(s.a.positions, tb)) +
                mean_abs_cos(s.b, s.a, nearest_all(s.b.positions, ta)));
}

namespace {

std::vector<uint64_t> band_voxels(const Mesh& mesh, double band, int res) {
  const size_t total = static_cast<size_t>(res) * res * res;
  std::vector<uint64_t> bits((total + 63) / 64, 0);
  const double cell = 2.0 / res;
  auto to_index_lo = [&](double v) { return std::clamp(static_cast<int>(std::ceil((v + 1.0) / cell - 0.5)), 0, res - 1); };
  auto to_index_hi = [&](double v) { return std::clamp(static_cast<int>(std::floor((v + 1.0) / cell - 0.5)), 0, res - 1); };
  for (const Face& f : mesh.faces) {
    const Vec3 &a = mesh.vertices[f[0]], &b = mesh.vertices[f[1]], &c = mesh.vertices[f[2]];
    const Vec3 lo = cwise_min(a, cwise_min(b, c)) - Vec3{band, band, band};
    const Vec3 hi = cwise_max(a, cwise_max(b, c)) + Vec3{band, band, band};
    if (hi.x < -1.0 || hi.y < -1.0 || hi.z < -1.0 || lo.x > 1.0 || lo.y > 1.0 || lo.z > 1.0) continue;
    const int i0 = to_index_lo(lo.x), i1 = to_index_hi(hi.x);
    const int j0 = to_index_lo(lo.y), j1 = to_index_hi(hi.y);
    const int k0 = to_index_lo(lo.z), k1 = to_index_hi(hi.z);
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        for (int k = k0; k <= k1; ++k) {
          const size_t id = (static_cast<size_t>(i) * res + j) * res + k;
          if (bits[id >> 6] >> (id & 63) & 1) continue;
          const Vec3 p{-1.0 + (i + 0.5) * cell, -1.0 + (j + 0.5) * cell, -1.0 + (k + 0.5) * cell};
          if (point_triangle_distance(p, a, b, c) < band) bits[id >> 6] |= uint64_t{1} << (id & 63);
        }
      }
    }
  }
  return bits;
}

}  // namespace

double surface_iou(const Mesh& recon, const Mesh& gt, double band, int resolution) {
  if (band <= 0.0 || resolution < 1) throw ConfigError("surface_iou: band and resolution must be positive");
  if (recon.empty() || gt.empty()) {
    spdlog::warn("surface_iou: empty mesh, scoring 0");
    return 0.0;
  }
  const auto a = band_voxels(recon, band, resolution);
  const auto b = band_voxels(gt, band, resolution);
  size_t inter = 0, uni = 0;
  for (size_t w = 0; w < a.size(); ++w) {
    inter += static_cast<size_t>(std::popcount(a[w] & b[w]));
    uni += static_cast<size_t>(std::popcount(a[w] | b[w]));
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["f_score"] = f_score;
  j["chamfer_x10000"] = std::isfinite(chamfer_x10k) ? nlohmann::json(chamfer_x10k) : nlohmann::json(nullptr);
  j["normal_consistency"] = normal_consistency;
  j["surface_iou"] = surface_iou;
  j["provenance"] = {{"shape_id", shape_id},
                     {"config", config},
                     {"triplane_res", triplane_res},
                     {"grid_res", grid_res},
                     {"latent_tokens", token_length(triplane_res, grid_res)},
                     {"seed", seed},
                     {"n_samples", options.n_samples},
                     {"sample_seed", options.seed},
                     {"tau", options.tau},
                     {"iou_band", options.iou_band},
                     {"iou_resolution", options.iou_resolution},
                     {"normalized", options.normalize}};
  return j;
}

MetricReport evaluate(const Mesh& recon, const Mesh& gt, const MetricOptions& opt) {
  if (gt.empty()) throw ConfigError("evaluate: ground-truth mesh is empty");
  MetricReport r;
  r.options = opt;
  if (recon.empty()) {
    spdlog::warn("evaluate: reconstruction is empty");
    r.chamfer_x10k = std::numeric_limits<double>::infinity();
    return r;
  }
  const Mesh a = opt.normalize ? normalize_to_unit_cube(recon) : recon;
  const Mesh b = opt.normalize ? normalize_to_unit_cube(gt) : gt;
  const Samples s = sample_pair(a, b, {opt.n_samples, opt.seed});
  const KdTree ta(s.a.positions), tb(s.b.positions);
  const auto ab = nearest_all(s.a.positions, tb);
  const auto ba = nearest_all(s.b.positions, ta);
  r.f_score = harmonic(fraction_within(ab, opt.tau), fraction_within(ba, opt.tau));
  r.chamfer_x10k = 0.5 * (mean_distance(ab) + mean_distance(ba)) * 1e4;
  r.normal_consistency = 0.5 * (mean_abs_cos(s.a, s.b, ab) + mean_abs_cos(s.b, s.a, ba));
  r.surface_iou = surface_iou(a, b, opt.iou_band, opt.iou_resolution);
  return r;
}

std::string format_metric_table(const std::vector<MetricReport>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "| %-16s | %4s | %4s | %6s | %8s | %10s | %7s | %11s |\n", "Representation", "r_T",
                "r_G", "Tokens", "F-Score", "CD x 10000", "NC", "Surface IoU");
  out += line;
  out += "|------------------|------|------|--------|----------|------------|---------|-------------|\n";
  for (const MetricReport& r : rows) {
    const char* kind = r.grid_res > 0 ? "hybrid triplane" : "naive triplane";
    std::snprintf(line, sizeof line, "| %-16s | %4d | %4d | %6lld | %8.4f | %10.2f | %7.4f | %11.4f |\n",
                  r.config.empty() ? kind : r.config.c_str(), r.triplane_res, r.grid_res,
                  static_cast<long long>(token_length(r.triplane_res, r.grid_res)), r.f_score, r.chamfer_x10k,
                  r.normal_consistency, r.surface_iou);
    out += line;
  }
  return out;
}

}  // namespace hyper3d
