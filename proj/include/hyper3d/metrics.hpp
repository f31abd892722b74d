#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hyper3d/geometry.hpp"

namespace hyper3d {

/// Closest distance from p to triangle (a, b, c).
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct SampleOptions {
  size_t n_samples = 100000;
  uint64_t seed = 0;
};

/// Surface-sample metrics. Both meshes are sampled with the same seed, so
/// identical meshes produce identical samples. Inputs are used as given;
/// `evaluate` applies the [-1,1] normalization.
double f_score(const Mesh& recon, const Mesh& gt, double tau = 0.05, SampleOptions opt = {});
/// Symmetric mean of un-squared nearest-neighbour distances, (d(R->G) + d(G->R)) / 2.
double chamfer(const Mesh& recon, const Mesh& gt, SampleOptions opt = {});
/// Symmetric mean |cos| between each sample normal and its nearest counterpart's.
double normal_consistency(const Mesh& recon, const Mesh& gt, SampleOptions opt = {});
/// IoU of the voxels of a V^3 lattice over [-1,1]^3 whose centres lie within
/// `band` of each surface.
double surface_iou(const Mesh& recon, const Mesh& gt, double band = 0.01, int resolution = 256);

/// Point-set versions used by the mesh metrics.
double chamfer_points(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

struct MetricOptions {
  size_t n_samples = 100000;
  uint64_t seed = 0;
  double tau = 0.05;
  double iou_band = 0.01;
  int iou_resolution = 256;
  bool normalize = true;  // scale each mesh's bounding box to [-1,1] first
};

struct MetricReport {
  double f_score = 0.0;
  double chamfer_x10k = 0.0;
  double normal_consistency = 0.0;
  double surface_iou = 0.0;

  std::string shape_id;
  std::string config;
  int triplane_res = 0;
  int grid_res = 0;
  uint64_t seed = 0;
  MetricOptions options;

  nlohmann::json to_json() const;
};

/// All four metrics. An empty reconstruction scores F = NC = IoU = 0 and an
/// infinite chamfer, with a logged warning.
MetricReport evaluate(const Mesh& recon, const Mesh& gt, const MetricOptions& opt = {});

/// Rows in the column order Representation | r_T | r_G | tokens | F-Score |
/// CD x 10000 | NC | Surface IoU.
std::string format_metric_table(const std::vector<MetricReport>& rows);

}  // namespace hyper3d
