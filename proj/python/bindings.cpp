#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "hyper3d/errors.hpp"
#include "hyper3d/extractor.hpp"
#include "hyper3d/marching_cubes.hpp"
#include "hyper3d/metrics.hpp"
#include "hyper3d/octree.hpp"
#include "hyper3d/pipeline.hpp"
#include "hyper3d/representation.hpp"
#include "hyper3d/shape_spec.hpp"
#include "hyper3d/upscale.hpp"
#include "hyper3d/vae.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace hyper3d;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IndexArray = py::array_t<int64_t, py::array::c_style | py::array::forcecast>;

ShapeSpec parse_shape(const std::string& shape_json) { return shape_from_json(json::parse(shape_json)); }

std::vector<Vec3> to_points(const DoubleArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw ConfigError("expected an (N, 3) point array");
  std::vector<Vec3> out(static_cast<size_t>(a.shape(0)));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[static_cast<size_t>(i)] = {r(i, 0), r(i, 1), r(i, 2)};
  return out;
}

DoubleArray from_points(const std::vector<Vec3>& pts) {
  DoubleArray a({static_cast<py::ssize_t>(pts.size()), py::ssize_t{3}});
  auto w = a.mutable_unchecked<2>();
  for (size_t i = 0; i < pts.size(); ++i) {
    for (int k = 0; k < 3; ++k) w(static_cast<py::ssize_t>(i), k) = pts[i][k];
  }
  return a;
}

Mesh to_mesh(const DoubleArray& vertices, const IndexArray& faces) {
  Mesh m;
  m.vertices = to_points(vertices);
  if (faces.ndim() != 2 || faces.shape(1) != 3) throw ConfigError("expected an (F, 3) face array");
  auto f = faces.unchecked<2>();
  for (py::ssize_t i = 0; i < faces.shape(0); ++i) {
    m.faces.push_back({static_cast<uint32_t>(f(i, 0)), static_cast<uint32_t>(f(i, 1)), static_cast<uint32_t>(f(i, 2))});
  }
  m.validate();
  return m;
}

py::tuple from_mesh(const Mesh& m) {
  IndexArray faces({static_cast<py::ssize_t>(m.faces.size()), py::ssize_t{3}});
  auto w = faces.mutable_unchecked<2>();
  for (size_t i = 0; i < m.faces.size(); ++i) {
    for (int k = 0; k < 3; ++k) w(static_cast<py::ssize_t>(i), k) = m.faces[i][static_cast<size_t>(k)];
  }
  return py::make_tuple(from_points(m.vertices), faces);
}

FloatArray query_hybrid_array(const FloatArray& planes, const py::object& grid_obj, const DoubleArray& points) {
  if (planes.ndim() != 4 || planes.shape(0) != 3 || planes.shape(2) != planes.shape(3)) {
    throw ConfigError("planes must have shape (3, C, R, R)");
  }
  const int C = static_cast<int>(planes.shape(1)), R = static_cast<int>(planes.shape(2));
  std::vector<float> pv(planes.data(), planes.data() + planes.size());
  std::vector<float> gv;
  int RG = 0;
  if (!grid_obj.is_none()) {
    const FloatArray grid = grid_obj.cast<FloatArray>();
    if (grid.ndim() != 4 || grid.shape(0) != C) throw ConfigError("grid must have shape (C, G, G, G)");
    RG = static_cast<int>(grid.shape(1));
    gv.assign(grid.data(), grid.data() + grid.size());
  }
  const HybridTriplane h(C, R, RG, std::move(pv), std::move(gv));
  const std::vector<Vec3> q = to_points(points);
  FloatArray out({static_cast<py::ssize_t>(q.size()), static_cast<py::ssize_t>(h.feature_dim())});
  float* dst = out.mutable_data();
  for (size_t i = 0; i < q.size(); ++i) {
    query_hybrid(h, q[i], std::span<float>(dst + i * static_cast<size_t>(h.feature_dim()), h.feature_dim()));
  }
  return out;
}

py::dict octree_summary(const std::string& shape_json, int depth) {
  const SignedField f = analytic_shape(parse_shape(shape_json));
  const Octree t = build_octree(f, depth);
  py::list counts, leaves;
  for (int l = 0; l <= depth; ++l) {
    counts.append(t.level(l).size());
    leaves.append(t.leaf_count(l));
  }
  std::vector<Vec3> centres;
  for (int32_t i : t.leaf_indices(depth)) centres.push_back(t.level(depth)[static_cast<size_t>(i)].center);
  py::dict d;
  d["nodes_per_level"] = counts;
  d["leaves_per_level"] = leaves;
  d["leaf_centers"] = from_points(centres);
  return d;
}

class Model {
 public:
  explicit Model(const fs::path& path) : model_(load_vae(path)) {}
  explicit Model(VAEModel m) : model_(std::move(m)) {}

  std::string config() const { return model_->config().to_json().dump(); }
  int64_t token_length() const { return model_->config().tokens(); }

  py::tuple reconstruct(const std::string& shape_json, const fs::path& extractor_path, int resolution, uint64_t seed) {
    const OctreeFeatureExtractor e = load_extractor(extractor_path);
    const SignedField f = analytic_shape(parse_shape(shape_json));
    return from_mesh(hyper3d::reconstruct(model_, build_input(f, e, model_->config()), resolution, seed));
  }

  Model upscale(int triplane_res, int grid_res) const { return Model(upscale_tokens(model_, triplane_res, grid_res)); }

  void save(const fs::path& path) { save_vae(path, model_); }

 private:
  VAEModel model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hybrid triplane shape VAE: representation, octree, metrics and model I/O";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<RuntimeFailure>(m, "RuntimeFailure", PyExc_RuntimeError);

  m.def("token_length", &token_length, py::arg("triplane_res"), py::arg("grid_res"));
  m.def("occupancy", [](double d) { return semi_continuous_occupancy(d); }, py::arg("sdf"),
        "Semi-continuous occupancy target of a signed distance.");
  m.def("query_hybrid", &query_hybrid_array, py::arg("planes"), py::arg("grid"), py::arg("points"),
        "Features of points in [-1,1]^3 from planes (3, C, R, R) and an optional grid (C, G, G, G).");
  m.def("sdf",
        [](const std::string& shape_json, const DoubleArray& points) {
          const SignedField f = analytic_shape(parse_shape(shape_json));
          const std::vector<Vec3> q = to_points(points);
          std::vector<double> out(q.size());
          for (size_t i = 0; i < q.size(); ++i) out[i] = f.sdf(q[i]);
          return DoubleArray(static_cast<py::ssize_t>(out.size()), out.data());
        },
        py::arg("shape"), py::arg("points"));
  m.def("octree", &octree_summary, py::arg("shape"), py::arg("depth"));
  m.def("shape_mesh",
        [](const std::string& shape_json, int resolution) {
          return from_mesh(ground_truth_mesh(analytic_shape(parse_shape(shape_json)), resolution));
        },
        py::arg("shape"), py::arg("resolution") = 128);
  m.def("synthetic_corpus",
        [](int count, uint64_t seed) {
          py::list out;
          for (const NamedShape& s : make_synthetic_corpus(count, seed)) {
            out.append(py::make_tuple(s.name, shape_to_json(s.spec).dump()));
          }
          return out;
        },
        py::arg("count"), py::arg("seed") = 0);
  m.def("evaluate",
        [](const DoubleArray& rv, const IndexArray& rf, const DoubleArray& gv, const IndexArray& gf, bool normalize,
           uint64_t seed) {
          MetricOptions o;
          o.normalize = normalize;
          o.seed = seed;
          return evaluate(to_mesh(rv, rf), to_mesh(gv, gf), o).to_json().dump();
        },
        py::arg("recon_vertices"), py::arg("recon_faces"), py::arg("gt_vertices"), py::arg("gt_faces"),
        py::arg("normalize") = true, py::arg("seed") = 0);
  m.def("preset", [](const std::string& name) { return vae_preset(name).to_json().dump(); }, py::arg("name"));

  py::class_<Model>(m, "Model")
      .def(py::init<const fs::path&>(), py::arg("path"))
      .def_static("create",
                  [](const std::string& config_json, uint64_t seed) {
                    return Model(make_vae(VAEConfig::from_json(json::parse(config_json)), seed));
                  },
                  py::arg("config"), py::arg("seed") = 0)
      .def_property_readonly("config_json", &Model::config)
      .def_property_readonly("token_length", &Model::token_length)
      .def("reconstruct", &Model::reconstruct, py::arg("shape"), py::arg("extractor"), py::arg("resolution") = 128,
           py::arg("seed") = 0)
      .def("upscale", &Model::upscale, py::arg("triplane_res"), py::arg("grid_res"))
      .def("save", &Model::save, py::arg("path"));
}
