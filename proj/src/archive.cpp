#include "hyper3d/archive.hpp"

#include <cstring>
#include <fstream>

#include "hyper3d/errors.hpp"

namespace hyper3d {

namespace {

constexpr char kMagic[8] = {'H', '3', 'D', 'A', 'R', 'C', 'H', '\0'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("archive is truncated");
  return v;
}

std::string get_string(std::istream& in, uint64_t n) {
  if (n > (1ULL << 32)) throw ConfigError("archive is corrupt (oversized string)");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw ConfigError("archive is truncated");
  return s;
}

}  // namespace

int64_t ArchiveTensor::numel() const {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

const ArchiveTensor& Archive::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ConfigError("archive has no tensor '" + name + "'");
  return it->second;
}

void save_archive(const std::filesystem::path& path, const Archive& archive) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write archive '" + path.string() + "'");
  out.write(kMagic, 8);
  put<uint32_t>(out, kVersion);
  const std::string meta = archive.meta.dump();
  put<uint64_t>(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  put<uint64_t>(out, archive.tensors.size());
  for (const auto& [name, t] : archive.tensors) {
    if (t.numel() != static_cast<int64_t>(t.data.size())) {
      throw ConfigError("archive tensor '" + name + "' has inconsistent shape");
    }
    put<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<uint32_t>(out, static_cast<uint32_t>(t.shape.size()));
    for (int64_t d : t.shape) put<int64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!out) throw RuntimeFailure("failed writing archive '" + path.string() + "'");
}

Archive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read archive '" + path.string() + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw ConfigError("'" + path.string() + "' is not a parameter archive");
  const auto version = get<uint32_t>(in);
  if (version != kVersion) throw ConfigError("archive version " + std::to_string(version) + " is not supported");
  Archive a;
  try {
    a.meta = nlohmann::json::parse(get_string(in, get<uint64_t>(in)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("archive metadata is not valid JSON: ") + e.what());
  }
  const auto count = get<uint64_t>(in);
  for (uint64_t i = 0; i < count; ++i) {
    const std::string name = get_string(in, get<uint32_t>(in));
    ArchiveTensor t;
    t.shape.resize(get<uint32_t>(in));
    for (auto& d : t.shape) d = get<int64_t>(in);
    t.data.resize(static_cast<size_t>(t.numel()));
    in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!in) throw ConfigError("archive '" + path.string() + "' is truncated");
    a.tensors.emplace(name, std::move(t));
  }
  return a;
}

}  // namespace hyper3d
