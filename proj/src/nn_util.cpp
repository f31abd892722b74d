#include "hyper3d/nn_util.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>
#include <string_view>

#include "hyper3d/errors.hpp"

namespace hyper3d {

uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) {
  auto mix = [](uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

torch::Generator make_generator(uint64_t seed) { return at::make_generator<at::CPUGeneratorImpl>(seed); }

void init_parameters(torch::nn::Module& module, uint64_t seed, double token_std) {
  torch::NoGradGuard no_grad;
  auto gen = make_generator(seed);
  for (auto& item : module.named_parameters()) {
    const std::string& name = item.key();
    torch::Tensor& p = item.value();
    const std::string_view n(name);
    if (n.ends_with("tokens")) {
      p.normal_(0.0, token_std, gen);
    } else if (n.ends_with("bias")) {
      p.zero_();
    } else if (p.dim() >= 2) {
      // Linear [out, in]; Conv [out, in, k...]; ConvTranspose [in, out, k...].
      const bool transposed = n.find("up") != std::string_view::npos && p.dim() >= 4;
      const int64_t receptive = p[0][0].numel();
      const int64_t fan_in = (transposed ? p.size(0) : p.size(1)) * receptive;
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      p.uniform_(-bound, bound, gen);
    } else {
      p.fill_(1.0);
    }
  }
}

ArchiveTensor to_archive_tensor(const torch::Tensor& t) {
  const torch::Tensor c = t.detach().to(torch::kFloat32).contiguous();
  ArchiveTensor a;
  a.shape.assign(c.sizes().begin(), c.sizes().end());
  a.data.assign(c.data_ptr<float>(), c.data_ptr<float>() + c.numel());
  return a;
}

torch::Tensor from_archive_tensor(const ArchiveTensor& t) {
  return torch::from_blob(const_cast<float*>(t.data.data()), t.shape, torch::kFloat32).clone();
}

std::string shape_string(c10::IntArrayRef shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + "]";
}

void store_module(const torch::nn::Module& module, Archive& archive, const std::string& prefix) {
  for (const auto& item : module.named_parameters()) archive.tensors[prefix + item.key()] = to_archive_tensor(item.value());
  for (const auto& item : module.named_buffers()) archive.tensors[prefix + item.key()] = to_archive_tensor(item.value());
}

void restore_module(torch::nn::Module& module, const Archive& archive, const std::string& prefix) {
  torch::NoGradGuard no_grad;
  auto load = [&](const std::string& name, torch::Tensor& dst) {
    const std::string key = prefix + name;
    if (!archive.contains(key)) throw ConfigError("checkpoint is missing tensor '" + key + "'");
    const ArchiveTensor& src = archive.at(key);
    if (c10::IntArrayRef(src.shape) != dst.sizes()) {
      throw ConfigError("checkpoint tensor '" + key + "' has shape " + shape_string(src.shape) +
                        " but the model expects " + shape_string(dst.sizes()));
    }
    dst.copy_(from_archive_tensor(src).to(dst.dtype()));
  };
  for (auto& item : module.named_parameters()) load(item.key(), item.value());
  for (auto& item : module.named_buffers()) load(item.key(), item.value());
}

}  // namespace hyper3d
