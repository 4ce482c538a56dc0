#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "morphon/config.hpp"
#include "morphon/driver.hpp"
#include "morphon/filter.hpp"
#include "morphon/io.hpp"
#include "morphon/linsolve.hpp"
#include "morphon/oc.hpp"
#include "morphon/sensitivity.hpp"
#include "morphon/surrogate.hpp"
#include "morphon/twoscale.hpp"

namespace py = pybind11;
using namespace morphon;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const double> view(const Array& a) { return {a.data(), std::size_t(a.size())}; }

Array to_array(const std::vector<double>& v) {
  Array out(py::ssize_t(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_morphon, m) {
  m.doc() = "Minimum-compliance topology optimization with online neural synthetic gradients";

  py::class_<StructuredGrid>(m, "StructuredGrid")
      .def(py::init([](int nx, int ny, int nz, std::array<double, 3> lengths) {
             return build_grid(nx, ny, nz, lengths);
           }),
           py::arg("nelx"), py::arg("nely"), py::arg("nelz"), py::arg("lengths"))
      .def_property_readonly("dims", &StructuredGrid::dims)
      .def_property_readonly("lengths", &StructuredGrid::lengths)
      .def_property_readonly("element_size", &StructuredGrid::element_size)
      .def_property_readonly("num_elements", &StructuredGrid::num_elements)
      .def_property_readonly("num_nodes", &StructuredGrid::num_nodes)
      .def_property_readonly("num_dofs", &StructuredGrid::num_dofs)
      .def("element_dofs", &StructuredGrid::element_dofs)
      .def("element_centroid", &StructuredGrid::element_centroid);

  py::class_<BoundaryConditions>(m, "BoundaryConditions")
      .def_readonly("fixed_dofs", &BoundaryConditions::fixed_dofs)
      .def_readonly("loads", &BoundaryConditions::loads)
      .def("load_vector", [](const BoundaryConditions& bc, Index n) { return to_array(bc.load_vector(n)); });
  m.def("cantilever_preset", &cantilever_preset, py::arg("grid"), py::arg("tau") = 1.0);
  m.def("mbb_preset", &mbb_preset, py::arg("grid"), py::arg("force") = 1.0);

  py::class_<MaterialModel>(m, "MaterialModel")
      .def(py::init<>())
      .def_readwrite("E0", &MaterialModel::E0)
      .def_readwrite("Emin", &MaterialModel::Emin)
      .def_readwrite("nu", &MaterialModel::nu)
      .def_readwrite("penal", &MaterialModel::penal);

  m.def(
      "apply_stiffness",
      [](const StructuredGrid& g, const MaterialModel& mat, const Array& zf, const Array& u,
         const std::vector<Index>& fixed) { return to_array(apply_stiffness(g, mat, view(zf), view(u), fixed)); },
      py::arg("grid"), py::arg("material"), py::arg("z_filtered"), py::arg("u"), py::arg("fixed_dofs"));

  py::class_<SolveStats>(m, "SolveStats")
      .def_readonly("iterations", &SolveStats::iterations)
      .def_readonly("final_relative_residual", &SolveStats::final_relative_residual)
      .def_readonly("converged", &SolveStats::converged);

  py::class_<StateSolver>(m, "StateSolver")
      .def(py::init<StructuredGrid, MaterialModel, const BoundaryConditions&>(), py::arg("grid"),
           py::arg("material"), py::arg("bc"))
      .def_property_readonly("load", [](const StateSolver& s) { return to_array(s.load()); })
      .def(
          "solve",
          [](const StateSolver& s, const Array& zf, double tol, int max_iters) {
            auto res = s.solve(view(zf), {}, tol, max_iters);
            return py::make_tuple(to_array(res.u), res.stats);
          },
          py::arg("z_filtered"), py::arg("tol") = 1e-8, py::arg("max_iters") = 100000);

  m.def("compliance", [](const Array& f, const Array& u) { return compliance(view(f), view(u)); });

  py::class_<FilterOperator>(m, "FilterOperator")
      .def(py::init<const StructuredGrid&, double>(), py::arg("grid"), py::arg("radius"))
      .def("apply", [](const FilterOperator& P, const Array& z) { return to_array(P.apply(view(z))); })
      .def("apply_transpose",
           [](const FilterOperator& P, const Array& v) { return to_array(P.apply_transpose(view(v))); })
      .def("weight", &FilterOperator::weight);

  m.def(
      "compliance_gradient",
      [](const StateSolver& s, const Array& z, const FilterOperator& P, const Array& u) {
        return to_array(compliance_gradient(s.op(), view(z), P, view(u)));
      },
      py::arg("solver"), py::arg("z"), py::arg("filter"), py::arg("u"));
  m.def("element_volume_weights", [](const StructuredGrid& g) { return to_array(element_volume_weights(g)); });

  py::class_<OcConfig>(m, "OcConfig")
      .def(py::init<>())
      .def_readwrite("move_limit", &OcConfig::move_limit)
      .def_readwrite("damping", &OcConfig::damping)
      .def_readwrite("volume_tol", &OcConfig::volume_tol);
  m.def(
      "oc_update",
      [](const Array& z, const Array& g, const Array& dV, double Vmax, const OcConfig& cfg) {
        return to_array(oc_update(view(z), view(g), view(dV), Vmax, cfg));
      },
      py::arg("z"), py::arg("g"), py::arg("dV"), py::arg("vmax"), py::arg("config") = OcConfig{});

  py::class_<CoarseMap>(m, "CoarseMap")
      .def(py::init<const StructuredGrid&, int>(), py::arg("fine"), py::arg("block_size"))
      .def_property_readonly("coarse_grid", &CoarseMap::coarse_grid)
      .def_property_readonly("num_blocks", &CoarseMap::num_blocks)
      .def_property_readonly("feature_dim", &CoarseMap::feature_dim)
      .def_property_readonly("target_dim", &CoarseMap::target_dim)
      .def("coarsen", [](const CoarseMap& map, const Array& z) { return to_array(coarsen_density(view(z), map)); });
  m.def("dense_mlp_parameter_count", &dense_mlp_parameter_count);
  m.def("is_synthetic", &is_synthetic, py::arg("k"), py::arg("warmup"), py::arg("interval"),
        py::arg("iterations"));
  m.def("exact_iterations", &exact_iterations, py::arg("warmup"), py::arg("interval"), py::arg("iterations"));

  py::enum_<Mode>(m, "Mode").value("standard", Mode::standard).value("onsg", Mode::onsg);
  py::enum_<Preset>(m, "Preset").value("cantilever", Preset::cantilever).value("mbb", Preset::mbb);
  py::enum_<GradientKind>(m, "GradientKind")
      .value("exact", GradientKind::exact)
      .value("synthetic", GradientKind::synthetic);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("problem", &RunConfig::problem)
      .def_readwrite("nelx", &RunConfig::nelx)
      .def_readwrite("nely", &RunConfig::nely)
      .def_readwrite("nelz", &RunConfig::nelz)
      .def_readwrite("lengths", &RunConfig::lengths)
      .def_readwrite("load", &RunConfig::load)
      .def_readwrite("volfrac", &RunConfig::volfrac)
      .def_readwrite("filter_radius", &RunConfig::filter_radius)
      .def_readwrite("material", &RunConfig::material)
      .def_readwrite("iterations", &RunConfig::iterations)
      .def_readwrite("warmup", &RunConfig::warmup)
      .def_readwrite("interval", &RunConfig::interval)
      .def_readwrite("block_size", &RunConfig::block_size)
      .def_readwrite("width", &RunConfig::width)
      .def_readwrite("layers", &RunConfig::layers)
      .def_readwrite("train_steps", &RunConfig::train_steps)
      .def_readwrite("batch_size", &RunConfig::batch_size)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("solver_tol", &RunConfig::solver_tol)
      .def_readwrite("mode", &RunConfig::mode)
      .def("validate", &RunConfig::validate)
      .def("__repr__", [](const RunConfig& c) { return format_config(c); });
  m.def("parse_config_text", &parse_config_text, py::arg("text"), py::arg("source") = "<config>");
  m.def("parse_config", &parse_config, py::arg("path"));

  py::class_<EvaluationRecord>(m, "EvaluationRecord")
      .def_readonly("iteration", &EvaluationRecord::iteration)
      .def_readonly("objective", &EvaluationRecord::objective)
      .def_readonly("volume_fraction", &EvaluationRecord::volume_fraction)
      .def_readonly("gradient_kind", &EvaluationRecord::gradient_kind)
      .def_readonly("fine_solve_performed", &EvaluationRecord::fine_solve_performed)
      .def_readonly("wall_time", &EvaluationRecord::wall_time)
      .def_property_readonly("gradient", [](const EvaluationRecord& r) { return to_array(r.gradient); });

  py::class_<RunHistory>(m, "RunHistory")
      .def_readonly("records", &RunHistory::records)
      .def_property_readonly("final_design", [](const RunHistory& h) { return to_array(h.final_design); })
      .def_readonly("fine_solves", &RunHistory::fine_solves)
      .def_readonly("coarse_solves", &RunHistory::coarse_solves)
      .def_readonly("training_sessions", &RunHistory::training_sessions)
      .def_readonly("total_wall_time", &RunHistory::total_wall_time)
      .def_readonly("surrogate_parameters", &RunHistory::surrogate_parameters)
      .def_property_readonly("final_objective", &RunHistory::final_objective);

  m.def(
      "run",
      [](const RunConfig& cfg, const IterationCallback& cb) {
        py::gil_scoped_release release;
        if (!cb) return run(cfg);
        // Reacquire the GIL for each Python callback.
        return run(cfg, [&cb](const EvaluationRecord& r) {
          py::gil_scoped_acquire acquire;
          cb(r);
        });
      },
      py::arg("config"), py::arg("on_iteration") = IterationCallback{});
  m.def("write_run_outputs", &write_run_outputs, py::arg("config"), py::arg("history"), py::arg("dir"));

  py::register_exception<RunFailure>(m, "RunFailure", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
}
