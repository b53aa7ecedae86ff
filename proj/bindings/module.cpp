#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "hpeel/peeling.hpp"

namespace py = pybind11;
using namespace hpeel;

namespace {

struct PyTree {
  std::shared_ptr<const BoxTree> tree;
  std::shared_ptr<const AdjacencyInfo> adj;
};

PyTree build_tree(const Eigen::MatrixXd& points, int leaf_capacity) {
  PyTree out;
  out.tree = std::make_shared<const BoxTree>(
      BoxTree::build(PointCloud::from_raw(points), leaf_capacity));
  out.adj = std::make_shared<const AdjacencyInfo>(adjacency(*out.tree));
  return out;
}

struct PyOperator {
  std::shared_ptr<LinearOperator> op;
};

SampleMode parse_mode(const std::string& name) {
  if (name == "h1") return SampleMode::kH1;
  if (name == "unif-stage1") return SampleMode::kUnifStage1;
  if (name == "unif-stage2") return SampleMode::kUnifStage2;
  if (name == "leaf") return SampleMode::kLeaf;
  throw std::invalid_argument("unknown sampling mode: " + name);
}

struct PyRep {
  std::shared_ptr<CompressedRep> rep;
  py::dict report;

  Matrix apply(const Matrix& x) const { return rep_apply(*rep, x); }
  Matrix apply_adjoint(const Matrix& x) const {
    return rep_apply_adjoint(*rep, x);
  }
  py::dict storage() const {
    const StorageStats stats = rep_storage(*rep);
    py::dict breakdown;
    for (const auto& [key, count] : stats.breakdown) {
      if (count > 0) {
        breakdown[py::make_tuple(key.first, key.second)] = count;
      }
    }
    py::dict out;
    out["total"] = stats.total;
    out["per_dof"] = stats.per_dof;
    out["breakdown"] = breakdown;
    return out;
  }
  std::string format() const { return format_name(rep_meta(*rep).format); }
  void save(const std::string& path) const { save_rep(path, *rep); }
};

PyRep compress_py(const PyOperator& op, const PyTree& tree,
                  const std::string& format, int rank, int oversample,
                  double tol, std::uint64_t seed, const std::string& strategy,
                  bool h2_parent_carry) {
  PeelConfig config;
  config.trunc = tol > 0.0
                     ? TruncationSpec::rel_tol(tol, rank + oversample)
                     : TruncationSpec::fixed_rank(rank, oversample);
  config.leaf_capacity = tree.tree->leaf_capacity();
  config.seed = seed;
  config.format = parse_peel_format(format);
  config.strategy = strategy == "fallback-pattern"
                        ? ColoringStrategy::kFallbackPattern
                        : ColoringStrategy::kGraph;
  config.h2_parent_carry = h2_parent_carry;

  PeelResult result = compress(*op.op, tree.tree, config);
  PyRep out;
  out.rep = std::make_shared<CompressedRep>(std::move(result.rep));
  const RunReport& r = result.report;
  out.report["forward_cols"] = r.forward_cols;
  out.report["adjoint_cols"] = r.adjoint_cols;
  out.report["max_sampling_colors"] = r.max_sampling_colors;
  out.report["wall_s_total"] = r.wall_s_total;
  out.report["wall_s_net"] = r.wall_s_net;
  out.report["net_flops"] = r.net_flops;
  out.report["csv"] = r.to_csv();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Black-box compression of rank-structured matrices";

  m.def("gaussian_matrix", &gaussian_matrix, py::arg("rows"), py::arg("cols"),
        py::arg("seed"), "Seeded reproducible standard-normal matrix");

  py::class_<PyTree>(m, "BoxTree")
      .def_property_readonly(
          "depth", [](const PyTree& t) { return t.tree->depth(); })
      .def_property_readonly(
          "num_points", [](const PyTree& t) { return t.tree->num_points(); })
      .def_property_readonly(
          "num_boxes", [](const PyTree& t) { return t.tree->num_boxes(); })
      .def_property_readonly("fully_populated",
                             [](const PyTree& t) {
                               return t.tree->is_fully_populated();
                             })
      .def("level_boxes",
           [](const PyTree& t, int level) { return t.tree->level_boxes(level); })
      .def("box_points",
           [](const PyTree& t, int id) { return t.tree->box(id).points; })
      .def("neighbors",
           [](const PyTree& t, int id) { return t.adj->neighbors[id]; })
      .def("interaction",
           [](const PyTree& t, int id) { return t.adj->interaction[id]; })
      .def("admissible_pairs",
           [](const PyTree& t, int level) {
             return admissible_pairs(*t.tree, *t.adj, level);
           })
      .def("dense_pairs",
           [](const PyTree& t) { return dense_pairs(*t.tree, *t.adj); });

  m.def("build_tree", &build_tree, py::arg("points"), py::arg("leaf_capacity"),
        "Dyadic box tree over points rescaled into the unit cube");

  m.def(
      "level_coloring",
      [](const PyTree& t, int level, const std::string& mode) {
        const SampleMode sm = parse_mode(mode);
        const auto sets = build_constraints(*t.tree, *t.adj, level, sm);
        const auto graph = build_graph(sets);
        const Coloring coloring = plan_coloring(*t.tree, sets, graph, sm);
        py::dict out;
        out["n_vertices"] = sets.size();
        out["n_edges"] = graph.num_edges();
        out["n_colors"] = coloring.num_colors;
        return out;
      },
      py::arg("tree"), py::arg("level"), py::arg("mode"),
      "Constraint graph size and color count for one level");

  py::class_<PyOperator>(m, "Operator")
      .def_property_readonly(
          "shape",
          [](const PyOperator& o) {
            return py::make_tuple(o.op->rows(), o.op->cols());
          })
      .def("apply",
           [](const PyOperator& o, const Matrix& x) { return o.op->apply(x); })
      .def("apply_adjoint", [](const PyOperator& o, const Matrix& x) {
        return o.op->apply_adjoint(x);
      });

  m.def("dense_operator", [](const Matrix& a) {
    return PyOperator{std::make_shared<DenseOperator>(a)};
  });
  m.def("bie_operator", [](Eigen::Index n) {
    return PyOperator{
        std::make_shared<DenseOperator>(assemble_bie_double_layer(star_contour(n)))};
  });
  m.def("n2d_operator", [](Eigen::Index n) {
    return PyOperator{std::make_shared<N2dOperator>(star_contour(n))};
  });
  m.def("fmm3d_operator", [](Eigen::Index n, std::uint64_t seed) {
    return PyOperator{std::make_shared<DenseOperator>(
        assemble_inverse_distance(sphere_points(n, seed)))};
  });
  m.def("frontal_operator", [](Eigen::Index n, int width) {
    return PyOperator{std::make_shared<FrontalOperator>(n, width)};
  }, py::arg("n"), py::arg("width") = 51);

  m.def("star_contour_points",
        [](Eigen::Index n) { return star_contour(n).points; });
  m.def("sphere_points", &sphere_points);
  m.def("line_with_noise_points", &line_with_noise_points);
  m.def("uniform_grid_points", &uniform_grid_points);
  m.def("random_cloud", &random_cloud);
  m.def("equispaced_1d", &equispaced_1d);

  m.def("synth_dense",
        [](const PyTree& t, const std::string& format, int k,
           std::uint64_t seed) {
          RepFormat f = RepFormat::kH1;
          if (format == "unif-h1" || format == "h1-plus-unif") {
            f = RepFormat::kUnifH1;
          } else if (format == "h2") {
            f = RepFormat::kH2;
          }
          return synth_rank_structured(*t.tree, *t.adj, f, k, seed);
        },
        py::arg("tree"), py::arg("format"), py::arg("rank"), py::arg("seed"),
        "Dense matrix with exactly rank-structured admissible blocks");

  py::class_<PyRep>(m, "CompressedRep")
      .def("apply", &PyRep::apply)
      .def("apply_adjoint", &PyRep::apply_adjoint)
      .def("storage", &PyRep::storage)
      .def("save", &PyRep::save)
      .def_property_readonly("format", &PyRep::format)
      .def_property_readonly("report",
                             [](const PyRep& r) { return r.report; });

  m.def("compress", &compress_py, py::arg("op"), py::arg("tree"),
        py::arg("format") = "h1", py::arg("rank") = 10,
        py::arg("oversample") = 10, py::arg("tol") = 0.0, py::arg("seed") = 0,
        py::arg("strategy") = "graph", py::arg("h2_parent_carry") = true,
        "Level-by-level randomized compression of a black-box operator");

  m.def("load_rep", [](const std::string& path) {
    PyRep out;
    out.rep = std::make_shared<CompressedRep>(load_rep(path));
    return out;
  });

  m.def(
      "rel_error_power_method",
      [](const PyRep& rep, const PyOperator& ref, int iters,
         std::uint64_t seed) {
        const RepOperator approx(*rep.rep);
        return rel_error_power_method(approx, *ref.op, iters, seed);
      },
      py::arg("rep"), py::arg("ref"), py::arg("iters") = 20,
      py::arg("seed") = 0);
}
