#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "litege/canonicalize.hpp"
#include "litege/descriptor.hpp"
#include "litege/error.hpp"
#include "litege/family.hpp"
#include "litege/lgnn_io.hpp"
#include "litege/matching.hpp"
#include "litege/mesh_io.hpp"
#include "litege/nn_models.hpp"
#include "litege/oracle.hpp"
#include "litege/pathtrace.hpp"
#include "litege/prng.hpp"
#include "litege/sampling.hpp"
#include "litege/spatial_index.hpp"
#include "litege/upca_io.hpp"

namespace py = pybind11;
using namespace litege;

namespace {

using RowsXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using RowsXi =
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

PointCloud cloud_from(const Eigen::Ref<const RowsXd>& points) {
  if (points.cols() != 3) fail_invalid("points must be an (n, 3) array");
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    cloud.points.emplace_back(points(i, 0), points(i, 1), points(i, 2));
  return cloud;
}

RowsXd points_to(const std::vector<Vec3>& points) {
  RowsXd out(static_cast<Eigen::Index>(points.size()), 3);
  for (std::size_t i = 0; i < points.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  return out;
}

TriangleMesh mesh_from(const Eigen::Ref<const RowsXd>& vertices,
                       const Eigen::Ref<const RowsXi>& faces) {
  if (vertices.cols() != 3) fail_invalid("vertices must be an (n, 3) array");
  if (faces.cols() != 3) fail_invalid("faces must be an (m, 3) array");
  TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(vertices.rows()));
  for (Eigen::Index i = 0; i < vertices.rows(); ++i)
    mesh.vertices.emplace_back(vertices(i, 0), vertices(i, 1),
                               vertices(i, 2));
  mesh.faces.reserve(static_cast<std::size_t>(faces.rows()));
  for (Eigen::Index i = 0; i < faces.rows(); ++i) {
    for (int j = 0; j < 3; ++j)
      if (faces(i, j) < 0) fail_invalid("face indices must be non-negative");
    mesh.faces.push_back({static_cast<std::uint32_t>(faces(i, 0)),
                          static_cast<std::uint32_t>(faces(i, 1)),
                          static_cast<std::uint32_t>(faces(i, 2))});
  }
  validate_mesh(mesh);
  return mesh;
}

py::tuple mesh_to(const TriangleMesh& mesh) {
  RowsXi faces(static_cast<Eigen::Index>(mesh.faces.size()), 3);
  for (std::size_t i = 0; i < mesh.faces.size(); ++i)
    for (int j = 0; j < 3; ++j)
      faces(static_cast<Eigen::Index>(i), j) = mesh.faces[i][j];
  return py::make_tuple(points_to(mesh.vertices), faces);
}

// Owns a loaded descriptor space; the python-facing handle for describe().
struct PySpace {
  DescriptorSpace space;
  std::uint64_t hash;

  explicit PySpace(const std::string& path)
      : space(load_descriptor_space(path)),
        hash(descriptor_space_hash(space)) {}

  Eigen::VectorXd describe_points(const Eigen::Ref<const RowsXd>& points) const {
    return describe(space, cloud_from(points));
  }
};

// Owns a loaded pair-distance net plus its frozen coordinate stats.
struct PyNet {
  SavedPairNet saved;

  PyNet(const std::string& path, const PySpace* space, bool force)
      : saved(load_pair_net(path, space ? space->hash : 0, force)) {}

  double predict(const Eigen::VectorXd& desc_src,
                 const Eigen::VectorXd& desc_dst, const Vec3& src,
                 const Vec3& dst) {
    return saved.net.predict(desc_src, desc_dst, src, dst, saved.stats);
  }

  Eigen::VectorXd predict_batch(const Eigen::VectorXd& descriptor,
                                const Eigen::Ref<const RowsXd>& src,
                                const Eigen::Ref<const RowsXd>& dst) {
    if (src.cols() != 3 || dst.cols() != 3 || src.rows() != dst.rows())
      fail_invalid("src and dst must be (n, 3) arrays of equal length");
    Eigen::Index b = src.rows();
    if (b == 0) fail_invalid("empty query batch");
    Eigen::MatrixXd desc_cols = descriptor.replicate(1, b);
    return saved.net.forward(desc_cols, desc_cols, src.transpose(),
                             dst.transpose(), saved.stats, RunMode::eval);
  }

  py::dict match(const Eigen::VectorXd& desc_query,
                 const Eigen::VectorXd& desc_target,
                 const Eigen::Ref<const RowsXd>& target_points,
                 const Eigen::Ref<const RowsXd>& queries,
                 std::vector<std::uint32_t> tier_sizes,
                 std::vector<std::uint32_t> neighbor_counts,
                 std::uint64_t seed, bool farthest_point) {
    PointCloud target = cloud_from(target_points);
    TierConfig tiers;
    if (tier_sizes.empty()) {
      tiers = default_tier_config(
          static_cast<std::uint32_t>(target.points.size()));
    } else {
      for (std::uint32_t& n : tier_sizes)
        if (n == 0) n = static_cast<std::uint32_t>(target.points.size());
      tiers.tier_sizes = std::move(tier_sizes);
      tiers.neighbor_counts = std::move(neighbor_counts);
    }
    NNCache cache = build_cache(target, tiers, seed, farthest_point);
    MatcherSession session(saved.net, saved.stats, desc_query, desc_target,
                           target);
    ScoreFn scorer = session.scorer();
    std::vector<std::uint32_t> matched;
    std::size_t evaluations = 0;
    for (Eigen::Index i = 0; i < queries.rows(); ++i) {
      MatchResult r = match_point(
          Vec3(queries(i, 0), queries(i, 1), queries(i, 2)), target, cache,
          scorer);
      matched.push_back(r.matched_index);
      evaluations = r.evaluations;
    }
    py::dict out;
    out["matched"] = matched;
    out["evaluations_per_query"] = evaluations;
    return out;
  }

  py::dict trace_path(const Eigen::VectorXd& descriptor,
                      const Eigen::Ref<const RowsXd>& shape_points,
                      const Vec3& src, const Vec3& dst, double eta, double eps,
                      std::size_t max_iters, std::size_t patience) {
    PointCloud cloud = cloud_from(shape_points);
    SpatialIndex index(cloud);
    TraceConfig config;
    config.eta = eta > 0.0 ? eta : default_eta(cloud.points.size());
    config.eps = eps;
    config.max_iters = max_iters;
    config.patience = patience;
    TracedPath path =
        trace(src, dst, saved.net, descriptor, saved.stats, index, config);
    py::dict out;
    out["points"] = points_to(path.points);
    out["distances"] = path.distances;
    out["reason"] = to_string(path.reason);
    out["best_index"] = path.best_index;
    return out;
  }
};

}  // namespace

PYBIND11_MODULE(pylitege, m) {
  m.doc() =
      "Shape descriptors, learned geodesic distances, and non-isometric "
      "correspondence";

  py::register_exception<Error>(m, "LitegeError");

  m.def(
      "icosphere",
      [](int subdivision) { return mesh_to(make_icosphere(subdivision)); },
      py::arg("subdivision"),
      "Unit icosphere as (vertices (n,3), faces (m,3)).");

  m.def(
      "family_shape",
      [](std::uint64_t seed, int subdivision) {
        Rng rng(seed);
        FamilyParams params = sample_family_params(rng, subdivision);
        return mesh_to(gen_synthetic_family(params, rng.next_u64()));
      },
      py::arg("seed"), py::arg("subdivision") = 4,
      "One shape from the synthetic deformation family.");

  m.def(
      "sample_surface",
      [](const Eigen::Ref<const RowsXd>& vertices,
         const Eigen::Ref<const RowsXi>& faces, std::size_t n,
         std::uint64_t seed) {
        return points_to(sample_surface(mesh_from(vertices, faces), n, seed)
                             .points);
      },
      py::arg("vertices"), py::arg("faces"), py::arg("n"), py::arg("seed") = 0,
      "Area-weighted surface samples, (n,3).");

  m.def(
      "load_shape",
      [](const std::string& path) -> py::object {
        Shape shape = load_shape(path);
        if (is_mesh(shape)) return mesh_to(as_mesh(shape));
        return py::cast(points_to(as_cloud(shape).points));
      },
      py::arg("path"),
      "Load .obj/.ply/.xyz: meshes come back as (vertices, faces), clouds as "
      "(n,3).");

  m.def(
      "canonicalize_mesh",
      [](const Eigen::Ref<const RowsXd>& vertices,
         const Eigen::Ref<const RowsXi>& faces, std::size_t samples,
         std::uint64_t seed) {
        TriangleMesh mesh = mesh_from(vertices, faces);
        CanonParams params;
        params.regression_samples = samples;
        params.seed = seed;
        CanonicalShape canonical =
            canonicalize(Shape(mesh), CanonMode::regression, params);
        py::dict out;
        out["points"] = points_to(as_cloud(canonical.shape).points);
        TriangleMesh posed = apply_transform(mesh, canonical.transform);
        out["mesh"] = mesh_to(posed);
        out["rotation"] = Mat3(canonical.transform.rotation);
        out["scale"] = canonical.transform.scale;
        out["translation"] = Vec3(canonical.transform.translation);
        return out;
      },
      py::arg("vertices"), py::arg("faces"), py::arg("samples") = 2000,
      py::arg("seed") = 0,
      "Regression-mode canonicalization: sampled canonical cloud, the "
      "transformed mesh, and the transform (p' = scale * R * (p + t)).");

  py::class_<PySpace>(m, "DescriptorSpace")
      .def(py::init<const std::string&>(), py::arg("path"))
      .def_property_readonly(
          "k", [](const PySpace& s) { return s.space.basis.k(); })
      .def_property_readonly(
          "dim", [](const PySpace& s) { return s.space.selection.dim(); })
      .def_property_readonly("hash",
                             [](const PySpace& s) { return s.hash; })
      .def("describe", &PySpace::describe_points, py::arg("points"),
           "Descriptor of a canonical cloud, shape (k,).");

  py::class_<GeodesicSolver>(m, "GeodesicSolver")
      .def(py::init([](const Eigen::Ref<const RowsXd>& vertices,
                       const Eigen::Ref<const RowsXi>& faces,
                       int subdivision) {
             return std::make_unique<GeodesicSolver>(
                 mesh_from(vertices, faces), subdivision);
           }),
           py::arg("vertices"), py::arg("faces"), py::arg("subdivision") = 1)
      .def("between_points", &GeodesicSolver::between_points, py::arg("p"),
           py::arg("q"))
      .def("distances_from_vertex", &GeodesicSolver::distances_from_vertex,
           py::arg("vertex"))
      .def_property_readonly("mean_edge_length",
                             &GeodesicSolver::mean_edge_length)
      .def_property_readonly("vertex_count", &GeodesicSolver::vertex_count);

  py::class_<PyNet>(m, "PairNet")
      .def(py::init<const std::string&, const PySpace*, bool>(),
           py::arg("path"), py::arg("space") = nullptr,
           py::arg("force") = false,
           "Load a trained pair-distance model; passing its descriptor "
           "space checks the content hash.")
      .def_property_readonly(
          "descriptor_dim",
          [](const PyNet& n) { return n.saved.net.descriptor_dim(); })
      .def_property_readonly(
          "width_multiplier",
          [](const PyNet& n) { return n.saved.net.width_multiplier(); })
      .def_property_readonly(
          "basis_hash", [](const PyNet& n) { return n.saved.basis_hash; })
      .def_property_readonly(
          "param_count",
          [](const PyNet& n) { return n.saved.net.param_count(); })
      .def("predict", &PyNet::predict, py::arg("desc_src"),
           py::arg("desc_dst"), py::arg("src"), py::arg("dst"),
           "Predicted distance for one pair.")
      .def("predict_batch", &PyNet::predict_batch, py::arg("descriptor"),
           py::arg("src"), py::arg("dst"),
           "Same-shape predictions for (n,3) src/dst arrays.")
      .def("match", &PyNet::match, py::arg("desc_query"),
           py::arg("desc_target"), py::arg("target_points"),
           py::arg("queries"), py::arg("tier_sizes") = std::vector<std::uint32_t>{},
           py::arg("neighbor_counts") = std::vector<std::uint32_t>{},
           py::arg("seed") = 0, py::arg("farthest_point") = false,
           "Coarse-to-fine correspondence; empty tier_sizes uses the "
           "defaults, 0 entries mean every target point.")
      .def("trace", &PyNet::trace_path, py::arg("descriptor"),
           py::arg("shape_points"), py::arg("src"), py::arg("dst"),
           py::arg("eta") = 0.0, py::arg("eps") = 0.05,
           py::arg("max_iters") = 500, py::arg("patience") = 5,
           "Gradient-descent path from dst toward src over the predicted "
           "distance field; eta 0 picks a step size by point count.");

  m.def("area_under_curve", &area_under_curve, py::arg("errors"),
        py::arg("threshold"));

  m.def(
      "eval_normalized",
      [](const std::vector<double>& gt, const std::vector<double>& pred) {
        EvalStats stats = normalize_for_eval(gt, pred);
        py::dict out;
        out["scale"] = stats.scale;
        out["mean_l1"] = stats.mean_l1;
        out["median_l1"] = stats.median_l1;
        return out;
      },
      py::arg("gt"), py::arg("pred"),
      "L1 error stats after rescaling ground truth to mean 100.");
}
