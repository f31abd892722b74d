#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace hyper3d {

struct ArchiveTensor {
  std::vector<int64_t> shape;
  std::vector<float> data;

  int64_t numel() const;
};

/// Versioned parameter archive: JSON metadata plus named float32 tensors.
/// Layout ("H3DARCH\0", version 1) is documented in docs/formats.md.
struct Archive {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, ArchiveTensor> tensors;

  const ArchiveTensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors.count(name) != 0; }
};

void save_archive(const std::filesystem::path& path, const Archive& archive);
Archive load_archive(const std::filesystem::path& path);

}  // namespace hyper3d
