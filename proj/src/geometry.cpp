#include "hyper3d/geometry.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include "hyper3d/errors.hpp"

namespace hyper3d {

// ---------------------------------------------------------------------------
// Mesh

void Mesh::validate() const {
  const auto n = static_cast<uint32_t>(vertices.size());
  for (const Face& f : faces) {
    if (f[0] >= n || f[1] >= n || f[2] >= n) {
      throw ConfigError("mesh face references vertex index >= vertex count (" + std::to_string(n) + ")");
    }
  }
  if (!normals.empty() && normals.size() != vertices.size()) {
    throw ConfigError("mesh normal count does not match vertex count");
  }
}

Vec3 Mesh::face_normal(size_t f) const {
  const Face& t = faces[f];
  return normalized(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
}

double Mesh::face_area(size_t f) const {
  const Face& t = faces[f];
  return 0.5 * norm(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
}

double Mesh::area() const {
  double a = 0.0;
  for (size_t f = 0; f < faces.size(); ++f) a += face_area(f);
  return a;
}

// ---------------------------------------------------------------------------
// Shape specs

ShapeSpec ShapeSpec::sphere(double r, Vec3 c) {
  ShapeSpec s;
  s.kind = Kind::Sphere;
  s.radius = r;
  s.center = c;
  return s;
}

ShapeSpec ShapeSpec::box(Vec3 half, Vec3 c) {
  ShapeSpec s;
  s.kind = Kind::Box;
  s.half_extent = half;
  s.center = c;
  return s;
}

ShapeSpec ShapeSpec::torus(double major, double minor, Vec3 c, int axis) {
  ShapeSpec s;
  s.kind = Kind::Torus;
  s.major_radius = major;
  s.radius = minor;
  s.center = c;
  s.axis = axis;
  return s;
}

ShapeSpec ShapeSpec::capsule(Vec3 a, Vec3 b, double r) {
  ShapeSpec s;
  s.kind = Kind::Capsule;
  s.a = a;
  s.b = b;
  s.radius = r;
  return s;
}

ShapeSpec ShapeSpec::csg(Kind op, std::vector<ShapeSpec> children) {
  ShapeSpec s;
  s.kind = op;
  s.children = std::move(children);
  return s;
}

const char* kind_name(ShapeSpec::Kind kind) {
  switch (kind) {
    case ShapeSpec::Kind::Sphere: return "sphere";
    case ShapeSpec::Kind::Box: return "box";
    case ShapeSpec::Kind::Torus: return "torus";
    case ShapeSpec::Kind::Capsule: return "capsule";
    case ShapeSpec::Kind::Union: return "union";
    case ShapeSpec::Kind::Intersection: return "intersection";
    case ShapeSpec::Kind::Difference: return "difference";
  }
  return "unknown";
}

namespace {

double spec_sdf(const ShapeSpec& s, const Vec3& p) {
  using K = ShapeSpec::Kind;
  switch (s.kind) {
    case K::Sphere:
      return norm(p - s.center) - s.radius;
    case K::Box: {
      const Vec3 d = p - s.center;
      const Vec3 q{std::abs(d.x) - s.half_extent.x, std::abs(d.y) - s.half_extent.y,
                   std::abs(d.z) - s.half_extent.z};
      const Vec3 outside = cwise_max(q, Vec3{});
      return norm(outside) + std::min(std::max({q.x, q.y, q.z}), 0.0);
    }
    case K::Torus: {
      const Vec3 d = p - s.center;
      const int a0 = (s.axis + 1) % 3;
      const int a1 = (s.axis + 2) % 3;
      const double ring = std::hypot(d[a0], d[a1]) - s.major_radius;
      return std::hypot(ring, d[s.axis]) - s.radius;
    }
    case K::Capsule: {
      const Vec3 ab = s.b - s.a;
      const double len2 = dot(ab, ab);
      const double t = len2 > 0.0 ? std::clamp(dot(p - s.a, ab) / len2, 0.0, 1.0) : 0.0;
      return norm(p - (s.a + ab * t)) - s.radius;
    }
    case K::Union: {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& c : s.children) d = std::min(d, spec_sdf(c, p));
      return d;
    }
    case K::Intersection: {
      double d = -std::numeric_limits<double>::infinity();
      for (const auto& c : s.children) d = std::max(d, spec_sdf(c, p));
      return d;
    }
    case K::Difference: {
      double d = spec_sdf(s.children.front(), p);
      for (size_t i = 1; i < s.children.size(); ++i) d = std::max(d, -spec_sdf(s.children[i], p));
      return d;
    }
  }
  return 0.0;
}

void validate_spec(const ShapeSpec& s) {
  using K = ShapeSpec::Kind;
  switch (s.kind) {
    case K::Sphere:
      if (!(s.radius > 0.0)) throw ConfigError("sphere radius must be positive");
      break;
    case K::Box:
      if (!(s.half_extent.x > 0.0 && s.half_extent.y > 0.0 && s.half_extent.z > 0.0)) {
        throw ConfigError("box half extents must be positive");
      }
      break;
    case K::Torus:
      if (!(s.radius > 0.0 && s.major_radius > 0.0)) throw ConfigError("torus radii must be positive");
      if (s.axis < 0 || s.axis > 2) throw ConfigError("torus axis must be 0, 1 or 2");
      break;
    case K::Capsule:
      if (!(s.radius > 0.0)) throw ConfigError("capsule radius must be positive");
      break;
    case K::Union:
    case K::Intersection:
    case K::Difference:
      if (s.children.empty()) throw ConfigError(std::string(kind_name(s.kind)) + " needs at least one child");
      for (const auto& c : s.children) validate_spec(c);
      break;
  }
}

}  // namespace

std::pair<Vec3, Vec3> spec_bounds(const ShapeSpec& s) {
  using K = ShapeSpec::Kind;
  switch (s.kind) {
    case K::Sphere: {
      const Vec3 r{s.radius, s.radius, s.radius};
      return {s.center - r, s.center + r};
    }
    case K::Box:
      return {s.center - s.half_extent, s.center + s.half_extent};
    case K::Torus: {
      Vec3 r{s.major_radius + s.radius, s.major_radius + s.radius, s.major_radius + s.radius};
      r[s.axis] = s.radius;
      return {s.center - r, s.center + r};
    }
    case K::Capsule: {
      const Vec3 r{s.radius, s.radius, s.radius};
      return {cwise_min(s.a, s.b) - r, cwise_max(s.a, s.b) + r};
    }
    default: {
      Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
      for (const auto& c : s.children) {
        auto [clo, chi] = spec_bounds(c);
        lo = cwise_min(lo, clo);
        hi = cwise_max(hi, chi);
      }
      return {lo, hi};
    }
  }
}

namespace {

void check_contained(const ShapeSpec& s) {
  if (!s.is_primitive()) {
    for (const auto& c : s.children) check_contained(c);
    return;
  }
  constexpr double tol = 1e-9;
  auto [lo, hi] = spec_bounds(s);
  for (int i = 0; i < 3; ++i) {
    if (lo[i] < -1.0 - tol || hi[i] > 1.0 + tol) {
      throw ConfigError(std::string(kind_name(s.kind)) + " primitive exceeds the [-1,1]^3 domain");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// SignedField

SignedField SignedField::from_spec_unchecked(ShapeSpec spec) {
  SignedField f;
  f.kind_ = spec.is_primitive() ? Kind::AnalyticPrimitive : Kind::AnalyticCsg;
  f.spec_ = std::make_shared<const ShapeSpec>(std::move(spec));
  return f;
}

SignedField SignedField::from_voxels(VoxelData data) {
  if (data.resolution < 2 || data.values.size() != static_cast<size_t>(data.resolution) * data.resolution * data.resolution) {
    throw ConfigError("voxel field size does not match its resolution");
  }
  SignedField f;
  f.kind_ = Kind::VoxelGrid;
  f.voxels_ = std::make_shared<const VoxelData>(std::move(data));
  return f;
}

double SignedField::sdf(const Vec3& p) const {
  if (kind_ != Kind::VoxelGrid) return spec_sdf(*spec_, p);

  const VoxelData& v = *voxels_;
  const int n = v.resolution;
  int i0[3];
  double w[3];
  for (int a = 0; a < 3; ++a) {
    const double u = std::clamp((p[a] + 1.0) / v.cell - 0.5, 0.0, static_cast<double>(n - 1));
    i0[a] = std::min(static_cast<int>(u), n - 2);
    w[a] = u - i0[a];
  }
  auto at = [&](int dx, int dy, int dz) {
    return static_cast<double>(v.values[(static_cast<size_t>(i0[0] + dx) * n + (i0[1] + dy)) * n + (i0[2] + dz)]);
  };
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    acc += at(dx, dy, dz) * (dx ? w[0] : 1.0 - w[0]) * (dy ? w[1] : 1.0 - w[1]) * (dz ? w[2] : 1.0 - w[2]);
  }
  return acc;
}

void SignedField::sdf_batch(std::span<const Vec3> points, std::span<float> out) const {
  for (size_t i = 0; i < points.size(); ++i) out[i] = static_cast<float>(sdf(points[i]));
}

SignedField analytic_shape(const ShapeSpec& spec) {
  validate_spec(spec);
  check_contained(spec);
  return SignedField::from_spec_unchecked(spec);
}

// ---------------------------------------------------------------------------
// mesh_to_field

namespace {

bool axis_separates(const Vec3& axis, const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& half) {
  const double p0 = dot(axis, v0), p1 = dot(axis, v1), p2 = dot(axis, v2);
  const double r = half.x * std::abs(axis.x) + half.y * std::abs(axis.y) + half.z * std::abs(axis.z);
  return std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r;
}

// Separating axis test between a triangle and an axis-aligned box.
bool triangle_box_overlap(Vec3 v0, Vec3 v1, Vec3 v2, const Vec3& center, const Vec3& half) {
  v0 = v0 - center;
  v1 = v1 - center;
  v2 = v2 - center;
  const Vec3 e[3] = {v1 - v0, v2 - v1, v0 - v2};
  const Vec3 basis[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (const Vec3& b : basis) {
    if (axis_separates(b, v0, v1, v2, half)) return false;
  }
  const Vec3 n = cross(e[0], e[1]);
  if (axis_separates(n, v0, v1, v2, half)) return false;
  for (const Vec3& ei : e) {
    for (const Vec3& b : basis) {
      const Vec3 axis = cross(ei, b);
      if (dot(axis, axis) < 1e-30) continue;
      if (axis_separates(axis, v0, v1, v2, half)) return false;
    }
  }
  return true;
}

// Squared 1D distance transform of sampled function f (Felzenszwalb & Huttenlocher).
void distance_transform_1d(std::span<const double> f, std::span<double> d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = 0;
  z[0] = -inf;
  z[1] = inf;
  auto intersect = [&](int q, int p) {
    return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * q - 2.0 * p);
  };
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// Squared Euclidean distance (in cells) from every voxel to the nearest voxel with seed == true.
std::vector<double> squared_edt(const std::vector<uint8_t>& seed, int n) {
  constexpr double far = 1e12;
  std::vector<double> grid(seed.size());
  for (size_t i = 0; i < seed.size(); ++i) grid[i] = seed[i] ? 0.0 : far;

  std::vector<double> line_in(n), line_out(n);
  std::vector<int> v;
  std::vector<double> z;
  auto idx = [n](int x, int y, int zz) { return (static_cast<size_t>(x) * n + y) * n + zz; };
  for (int axis = 0; axis < 3; ++axis) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int t = 0; t < n; ++t) {
          const size_t id = axis == 0 ? idx(t, i, j) : (axis == 1 ? idx(i, t, j) : idx(i, j, t));
          line_in[t] = grid[id];
        }
        distance_transform_1d(line_in, line_out, v, z);
        for (int t = 0; t < n; ++t) {
          const size_t id = axis == 0 ? idx(t, i, j) : (axis == 1 ? idx(i, t, j) : idx(i, j, t));
          grid[id] = line_out[t];
        }
      }
    }
  }
  return grid;
}

}  // namespace

SignedField mesh_to_field(const Mesh& mesh, int resolution) {
  if (mesh.faces.empty()) throw ConfigError("mesh_to_field: mesh has no faces");
  if (resolution < 16) throw ConfigError("mesh_to_field: resolution must be >= 16");
  mesh.validate();
  for (const Vec3& v : mesh.vertices) {
    if (norm(v) > 1.0 + 1e-6) throw ConfigError("mesh_to_field: mesh is not normalized to the unit sphere");
  }

  const int n = resolution;
  const double cell = 2.0 / n;
  const Vec3 half{cell * 0.5, cell * 0.5, cell * 0.5};
  auto idx = [n](int x, int y, int z) { return (static_cast<size_t>(x) * n + y) * n + z; };
  auto to_cell = [&](double c) { return std::clamp(static_cast<int>(std::floor((c + 1.0) / cell)), 0, n - 1); };

  enum : uint8_t { kEmpty = 0, kSurface = 1, kOutside = 2 };
  std::vector<uint8_t> state(static_cast<size_t>(n) * n * n, kEmpty);

  for (const Face& f : mesh.faces) {
    const Vec3 &a = mesh.vertices[f[0]], &b = mesh.vertices[f[1]], &c = mesh.vertices[f[2]];
    const Vec3 lo = cwise_min(a, cwise_min(b, c)), hi = cwise_max(a, cwise_max(b, c));
    for (int x = to_cell(lo.x); x <= to_cell(hi.x); ++x) {
      for (int y = to_cell(lo.y); y <= to_cell(hi.y); ++y) {
        for (int z = to_cell(lo.z); z <= to_cell(hi.z); ++z) {
          const Vec3 center{-1.0 + (x + 0.5) * cell, -1.0 + (y + 0.5) * cell, -1.0 + (z + 0.5) * cell};
          if (triangle_box_overlap(a, b, c, center, half)) state[idx(x, y, z)] = kSurface;
        }
      }
    }
  }

  // Flood fill the exterior through non-surface voxels, 6-connected.
  std::deque<std::array<int, 3>> queue;
  auto push = [&](int x, int y, int z) {
    const size_t i = idx(x, y, z);
    if (state[i] == kEmpty) {
      state[i] = kOutside;
      queue.push_back({x, y, z});
    }
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      push(0, i, j);
      push(n - 1, i, j);
      push(i, 0, j);
      push(i, n - 1, j);
      push(i, j, 0);
      push(i, j, n - 1);
    }
  }
  constexpr int kSteps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!queue.empty()) {
    const auto [x, y, z] = queue.front();
    queue.pop_front();
    for (const auto& s : kSteps) {
      const int nx = x + s[0], ny = y + s[1], nz = z + s[2];
      if (nx < 0 || ny < 0 || nz < 0 || nx >= n || ny >= n || nz >= n) continue;
      push(nx, ny, nz);
    }
  }

  const size_t interior = static_cast<size_t>(std::count(state.begin(), state.end(), kEmpty));
  if (interior == 0) {
    throw ConfigError("mesh_to_field: flood fill found no interior; the mesh is not watertight");
  }

  std::vector<uint8_t> occupied(state.size()), free_space(state.size());
  for (size_t i = 0; i < state.size(); ++i) {
    occupied[i] = state[i] != kOutside;
    free_space[i] = !occupied[i];
  }
  const auto to_occupied = squared_edt(occupied, n);
  const auto to_free = squared_edt(free_space, n);

  SignedField::VoxelData data;
  data.resolution = n;
  data.cell = cell;
  data.values.resize(state.size());
  for (size_t i = 0; i < state.size(); ++i) {
    // Zero level sits on the faces between occupied and free voxels.
    const double d = occupied[i] ? -(std::sqrt(to_free[i]) - 0.5) : (std::sqrt(to_occupied[i]) - 0.5);
    data.values[i] = static_cast<float>(d * cell);
  }
  return SignedField::from_voxels(std::move(data));
}

// ---------------------------------------------------------------------------
// Sampling and embeddings

PointSet sample_surface(const Mesh& mesh, size_t n, uint64_t seed) {
  if (mesh.faces.empty()) throw ConfigError("sample_surface: mesh has no faces");
  mesh.validate();
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw ConfigError("sample_surface: every face has zero area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  PointSet out;
  out.positions.reserve(n);
  out.normals.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const double r = uniform(rng) * total;
    size_t f = static_cast<size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
    f = std::min(f, mesh.faces.size() - 1);
    const double s = std::sqrt(uniform(rng));
    const double t = uniform(rng);
    const Face& tri = mesh.faces[f];
    const Vec3 p = mesh.vertices[tri[0]] * (1.0 - s) + mesh.vertices[tri[1]] * (s * (1.0 - t)) +
                   mesh.vertices[tri[2]] * (s * t);
    out.positions.push_back(p);
    out.normals.push_back(mesh.face_normal(f));
  }
  return out;
}

void fourier_embed_point(const Vec3& p, int num_frequencies, std::span<float> out) {
  out[0] = static_cast<float>(p.x);
  out[1] = static_cast<float>(p.y);
  out[2] = static_cast<float>(p.z);
  double freq = std::numbers::pi;
  for (int k = 0; k < num_frequencies; ++k, freq *= 2.0) {
    float* row = out.data() + 3 + 6 * k;
    for (int a = 0; a < 3; ++a) {
      row[a] = static_cast<float>(std::sin(freq * p[a]));
      row[3 + a] = static_cast<float>(std::cos(freq * p[a]));
    }
  }
}

PointSet fourier_embed(const PointSet& points, int num_frequencies) {
  if (num_frequencies < 0) throw ConfigError("fourier_embed: num_frequencies must be >= 0");
  PointSet out;
  out.positions = points.positions;
  out.normals = points.normals;
  out.channels = fourier_channels(num_frequencies);
  out.features.resize(points.size() * out.channels);
  for (size_t i = 0; i < points.size(); ++i) {
    fourier_embed_point(points.positions[i], num_frequencies,
                        {out.features.data() + i * out.channels, static_cast<size_t>(out.channels)});
  }
  return out;
}

double semi_continuous_occupancy(double d, double band) {
  return std::clamp((band - d) / (2.0 * band), 0.0, 1.0);
}

OccupancyTarget occupancy_targets(const SignedField& field, std::span<const Vec3> points) {
  OccupancyTarget out;
  out.points.assign(points.begin(), points.end());
  out.targets.resize(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    out.targets[i] = static_cast<float>(semi_continuous_occupancy(field.sdf(points[i])));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalisation and primitive meshes

namespace {

std::pair<Vec3, Vec3> vertex_bounds(const Mesh& mesh) {
  Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (const Vec3& v : mesh.vertices) {
    lo = cwise_min(lo, v);
    hi = cwise_max(hi, v);
  }
  return {lo, hi};
}

Mesh transformed(const Mesh& mesh, const Vec3& shift, double scale) {
  Mesh out = mesh;
  for (Vec3& v : out.vertices) v = (v - shift) * scale;
  return out;
}

}  // namespace

Mesh normalize_to_unit_sphere(const Mesh& mesh) {
  if (mesh.vertices.empty()) return mesh;
  auto [lo, hi] = vertex_bounds(mesh);
  const Vec3 center = (lo + hi) * 0.5;
  double r = 0.0;
  for (const Vec3& v : mesh.vertices) r = std::max(r, norm(v - center));
  return transformed(mesh, center, r > 0.0 ? 1.0 / r : 1.0);
}

Mesh normalize_to_unit_cube(const Mesh& mesh) {
  if (mesh.vertices.empty()) return mesh;
  auto [lo, hi] = vertex_bounds(mesh);
  const Vec3 center = (lo + hi) * 0.5;
  const double half = 0.5 * std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
  return transformed(mesh, center, half > 0.0 ? 1.0 / half : 1.0);
}

Mesh scaled(const Mesh& mesh, double s) { return transformed(mesh, Vec3{}, s); }

Mesh make_icosphere(double radius, int subdivisions, Vec3 center) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                             {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : verts) v = normalized(v);
  std::vector<Face> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<uint32_t, uint32_t>, uint32_t> midpoint;
    auto mid = [&](uint32_t a, uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back(normalized((verts[a] + verts[b]) * 0.5));
      const auto id = static_cast<uint32_t>(verts.size() - 1);
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const uint32_t ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  Mesh m;
  m.normals = verts;
  for (Vec3& v : verts) v = center + v * radius;
  m.vertices = std::move(verts);
  m.faces = std::move(faces);
  return m;
}

Mesh make_box_mesh(Vec3 h, Vec3 c) {
  Mesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back(c + Vec3{(i & 1) ? h.x : -h.x, (i & 2) ? h.y : -h.y, (i & 4) ? h.z : -h.z});
  }
  // Two outward-facing triangles per cube face.
  m.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
             {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

}  // namespace hyper3d
