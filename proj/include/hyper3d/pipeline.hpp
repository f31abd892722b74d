#pragma once

#include <filesystem>
#include <vector>

#include "hyper3d/marching_cubes.hpp"
#include "hyper3d/vae.hpp"

namespace hyper3d {

/// Deterministic encode -> decode using the posterior mean.
DecodedFields encode_to_fields(VAEModel& model, const PointSet& input, uint64_t seed = 0);

/// Predicted occupancy probabilities on the (resolution+1)^3 lattice.
DenseVolume occupancy_volume(VAEModel& model, const DecodedFields& fields, int resolution, int64_t batch = 65536);

/// Marching cubes at occupancy 0.5 over the decoded fields.
Mesh fields_to_mesh(VAEModel& model, const DecodedFields& fields, int resolution);
Mesh reconstruct(VAEModel& model, const PointSet& input, int resolution, uint64_t seed = 0);

/// Reference surface of an analytic field: marching cubes on the zero level
/// set of the signed distance.
Mesh ground_truth_mesh(const SignedField& field, int resolution);

/// Writes, for each plane, a channel-mean PNG and the raw [C, R, R] array as
/// NPY; with a grid, the channel-mean grid averaged along x, y and z as PNGs
/// plus the raw [C, X, Y, Z] array. Returns the written paths.
std::vector<std::filesystem::path> write_visualization(const HybridTriplane& h, const std::filesystem::path& dir);

}  // namespace hyper3d
