#pragma once

#include <cstdint>
#include <string>

#include <torch/torch.h>

#include "hyper3d/archive.hpp"

namespace hyper3d {

/// splitmix64 mix of a base seed with stream identifiers.
uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0);

torch::Generator make_generator(uint64_t seed);

/// Deterministic initialisation from `seed`: weights of rank >= 2 get
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero, normalisation scales one.
/// Parameters whose name ends in "tokens" are drawn from N(0, token_std^2).
void init_parameters(torch::nn::Module& module, uint64_t seed, double token_std = 1.0);

/// Copies every named parameter (and buffer) into the archive under prefix.
void store_module(const torch::nn::Module& module, Archive& archive, const std::string& prefix = "");
/// Loads parameters by name; throws ConfigError on a missing tensor or a
/// shape mismatch, naming both shapes.
void restore_module(torch::nn::Module& module, const Archive& archive, const std::string& prefix = "");

ArchiveTensor to_archive_tensor(const torch::Tensor& t);
torch::Tensor from_archive_tensor(const ArchiveTensor& t);

std::string shape_string(c10::IntArrayRef shape);

}  // namespace hyper3d
