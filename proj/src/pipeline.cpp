#include "hyper3d/pipeline.hpp"

#include <algorithm>

#include "hyper3d/errors.hpp"
#include "hyper3d/image_io.hpp"

namespace hyper3d {

DecodedFields encode_to_fields(VAEModel& model, const PointSet& input, uint64_t seed) {
  torch::NoGradGuard no_grad;
  model->eval();
  const Posterior post = model->encode(input_tensor(input, model->config(), seed));
  return model->decode(post.mu);
}

DenseVolume occupancy_volume(VAEModel& model, const DecodedFields& fields, int resolution, int64_t batch) {
  if (resolution < 8) throw ConfigError("marching cubes resolution must be >= 8");
  torch::NoGradGuard no_grad;
  DenseVolume vol;
  vol.cells = resolution;
  const int n = vol.points_per_axis();
  const int64_t total = static_cast<int64_t>(n) * n * n;
  vol.values.resize(static_cast<size_t>(total));
  std::vector<Vec3> pts;
  for (int64_t start = 0; start < total; start += batch) {
    const int64_t end = std::min(total, start + batch);
    pts.clear();
    for (int64_t idx = start; idx < end; ++idx) {
      const int i = static_cast<int>(idx / (static_cast<int64_t>(n) * n));
      const int j = static_cast<int>((idx / n) % n);
      const int k = static_cast<int>(idx % n);
      pts.push_back(vol.lattice_point(i, j, k));
    }
    const torch::Tensor prob = torch::sigmoid(model->predict_occupancy(fields, points_tensor(pts))).contiguous();
    std::copy_n(prob.data_ptr<float>(), end - start, vol.values.begin() + start);
  }
  return vol;
}

Mesh fields_to_mesh(VAEModel& model, const DecodedFields& fields, int resolution) {
  return marching_cubes(occupancy_volume(model, fields, resolution), 0.5);
}

Mesh reconstruct(VAEModel& model, const PointSet& input, int resolution, uint64_t seed) {
  return fields_to_mesh(model, encode_to_fields(model, input, seed), resolution);
}

Mesh ground_truth_mesh(const SignedField& field, int resolution) {
  return marching_cubes([&](const Vec3& p) { return -field.sdf(p); }, resolution, 0.0);
}

std::vector<std::filesystem::path> write_visualization(const HybridTriplane& h, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const int C = h.channels(), R = h.res();
  const char* plane_names[3] = {"xy", "yz", "xz"};
  const size_t plane_size = static_cast<size_t>(C) * R * R;
  for (int p = 0; p < 3; ++p) {
    const auto block = h.planes().subspan(p * plane_size, plane_size);
    std::vector<float> mean(static_cast<size_t>(R) * R, 0.0f);
    for (int c = 0; c < C; ++c) {
      for (size_t t = 0; t < mean.size(); ++t) mean[t] += block[c * mean.size() + t] / static_cast<float>(C);
    }
    // Image rows run top-down; flip so +v points up.
    std::vector<float> image(mean.size());
    for (int v = 0; v < R; ++v) std::copy_n(mean.begin() + v * R, R, image.begin() + (R - 1 - v) * R);
    const auto png = dir / (std::string("plane_") + plane_names[p] + ".png");
    const auto npy = dir / (std::string("plane_") + plane_names[p] + ".npy");
    write_png_gray(png, R, R, image);
    write_npy(npy, {C, R, R}, block);
    written.push_back(png);
    written.push_back(npy);
  }
  if (h.has_grid()) {
    const int G = h.grid_res();
    std::vector<float> mean(static_cast<size_t>(G) * G * G, 0.0f);
    for (int c = 0; c < C; ++c) {
      for (size_t t = 0; t < mean.size(); ++t) mean[t] += h.grid()[c * mean.size() + t] / static_cast<float>(C);
    }
    const char* axis_names[3] = {"x", "y", "z"};
    for (int axis = 0; axis < 3; ++axis) {
      // Remaining axes in (x, y, z) order become (column, row).
      std::vector<float> image(static_cast<size_t>(G) * G, 0.0f);
      for (int x = 0; x < G; ++x) {
        for (int y = 0; y < G; ++y) {
          for (int z = 0; z < G; ++z) {
            const int idx[3] = {x, y, z};
            const int a = axis == 0 ? 1 : 0, b = axis == 2 ? 1 : 2;
            const int row = G - 1 - idx[b], col = idx[a];
            image[static_cast<size_t>(row) * G + col] += mean[(static_cast<size_t>(x) * G + y) * G + z] / static_cast<float>(G);
          }
        }
      }
      const auto png = dir / (std::string("grid_mean_") + axis_names[axis] + ".png");
      write_png_gray(png, G, G, image);
      written.push_back(png);
    }
    const auto npy = dir / "grid.npy";
    write_npy(npy, {C, G, G, G}, h.grid());
    written.push_back(npy);
  }
  return written;
}

}  // namespace hyper3d
