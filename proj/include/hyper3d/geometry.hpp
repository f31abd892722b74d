#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hyper3d {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  return n > 0.0 ? v / n : Vec3{};
}
constexpr Vec3 cwise_min(const Vec3& a, const Vec3& b) {
  return {a.x < b.x ? a.x : b.x, a.y < b.y ? a.y : b.y, a.z < b.z ? a.z : b.z};
}
constexpr Vec3 cwise_max(const Vec3& a, const Vec3& b) {
  return {a.x > b.x ? a.x : b.x, a.y > b.y ? a.y : b.y, a.z > b.z ? a.z : b.z};
}

using Face = std::array<uint32_t, 3>;

/// Triangle mesh. Normals are optional and, when present, per vertex.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> normals;

  bool empty() const { return faces.empty(); }
  /// Throws ConfigError when a face index is out of range or the normal count
  /// does not match the vertex count.
  void validate() const;
  double area() const;
  Vec3 face_normal(size_t f) const;
  double face_area(size_t f) const;
};

/// Surface or volume samples with optional normals and a row-major feature
/// matrix (size() x channels).
struct PointSet {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  int channels = 0;
  std::vector<float> features;

  size_t size() const { return positions.size(); }
  std::span<const float> row(size_t i) const {
    return {features.data() + i * static_cast<size_t>(channels), static_cast<size_t>(channels)};
  }
};

struct OccupancyTarget {
  std::vector<Vec3> points;
  std::vector<float> targets;
};

// ---------------------------------------------------------------------------
// Shape specs and signed fields

/// Node of an analytic shape description: a primitive or a CSG operator over
/// child nodes. Units are domain units of [-1,1]^3.
struct ShapeSpec {
  enum class Kind { Sphere, Box, Torus, Capsule, Union, Intersection, Difference };

  Kind kind = Kind::Sphere;
  Vec3 center{};
  double radius = 0.5;        // sphere radius, torus tube radius, capsule radius
  Vec3 half_extent{};         // box
  double major_radius = 0.0;  // torus ring radius
  int axis = 2;               // torus symmetry axis (0=x, 1=y, 2=z)
  Vec3 a{}, b{};              // capsule segment end points
  std::vector<ShapeSpec> children;

  static ShapeSpec sphere(double r, Vec3 c = {});
  static ShapeSpec box(Vec3 half, Vec3 c = {});
  static ShapeSpec torus(double major, double minor, Vec3 c = {}, int axis = 2);
  static ShapeSpec capsule(Vec3 a, Vec3 b, double r);
  static ShapeSpec csg(Kind op, std::vector<ShapeSpec> children);

  bool is_primitive() const { return kind <= Kind::Capsule; }
};

const char* kind_name(ShapeSpec::Kind kind);

/// Signed distance oracle, negative inside and positive outside. Immutable and
/// cheap to copy; safe to query from many threads.
class SignedField {
 public:
  enum class Kind { AnalyticPrimitive, AnalyticCsg, VoxelGrid };

  struct VoxelData {
    int resolution = 0;
    double cell = 0.0;
    std::vector<float> values;  // signed distance at voxel centres, x-major
  };

  /// Builds an analytic field without the domain containment check.
  static SignedField from_spec_unchecked(ShapeSpec spec);
  static SignedField from_voxels(VoxelData data);

  Kind kind() const { return kind_; }
  double sdf(const Vec3& p) const;
  void sdf_batch(std::span<const Vec3> points, std::span<float> out) const;
  const ShapeSpec* spec() const { return spec_.get(); }
  const VoxelData* voxels() const { return voxels_.get(); }

 private:
  Kind kind_ = Kind::AnalyticPrimitive;
  std::shared_ptr<const ShapeSpec> spec_;
  std::shared_ptr<const VoxelData> voxels_;
};

/// Axis-aligned bounds of the solid described by `spec` (conservative for CSG).
std::pair<Vec3, Vec3> spec_bounds(const ShapeSpec& spec);

/// Validated analytic field. Throws ConfigError when a primitive is malformed
/// or any primitive leaves [-1,1]^3.
SignedField analytic_shape(const ShapeSpec& spec);

/// Voxel occupancy field from a closed triangle mesh: triangles are
/// rasterised, the exterior is flood-filled from the domain boundary and the
/// signed distance comes from Euclidean distance transforms of the occupancy.
SignedField mesh_to_field(const Mesh& mesh, int resolution);

/// Area-uniform surface samples with face normals. Deterministic per seed.
PointSet sample_surface(const Mesh& mesh, size_t n, uint64_t seed);

/// Per point: [x, y, z] followed, for k = 0..F-1, by
/// sin(2^k pi x), sin(2^k pi y), sin(2^k pi z), cos(2^k pi x), cos(2^k pi y), cos(2^k pi z).
PointSet fourier_embed(const PointSet& points, int num_frequencies);
void fourier_embed_point(const Vec3& p, int num_frequencies, std::span<float> out);
constexpr int fourier_channels(int num_frequencies) { return 3 + 6 * num_frequencies; }

/// Half width of the semi-continuous occupancy band around the surface.
inline constexpr double kOccupancyBand = 0.02;

/// Linear ramp: 1 for d <= -band, 0 for d >= band, 0.5 at d = 0.
double semi_continuous_occupancy(double d, double band = kOccupancyBand);
OccupancyTarget occupancy_targets(const SignedField& field, std::span<const Vec3> points);

/// Recentres the bounding box at the origin and scales so that the farthest
/// vertex lies on the unit sphere.
Mesh normalize_to_unit_sphere(const Mesh& mesh);
/// Recentres the bounding box and scales its largest half extent to 1.
Mesh normalize_to_unit_cube(const Mesh& mesh);
Mesh scaled(const Mesh& mesh, double s);

Mesh make_icosphere(double radius, int subdivisions, Vec3 center = {});
Mesh make_box_mesh(Vec3 half_extent, Vec3 center = {});

}  // namespace hyper3d
