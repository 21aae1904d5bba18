#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <memory>
#include <string>

#include "uq/clmc.hpp"
#include "uq/coefficient.hpp"
#include "uq/error.hpp"
#include "uq/fem.hpp"
#include "uq/harness.hpp"
#include "uq/indicator.hpp"
#include "uq/mesh.hpp"
#include "uq/mlmc.hpp"
#include "uq/sampling.hpp"

namespace py = pybind11;
using namespace uq;

namespace {

using Mesh = std::shared_ptr<TriMesh>;

harness::Json run_command(const std::string& command, const harness::ExperimentConfig& config,
                          const std::filesystem::path& out) {
  if (command == "converge") return harness::cmd_converge(config, out);
  if (command == "rates") return harness::cmd_rates(config, out);
  if (command == "lds") return harness::cmd_lds(config, out);
  if (command == "reference") return harness::cmd_reference(config, out);
  if (command == "compare") return harness::cmd_compare(config, out);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the uq package.";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::enum_<SourceKind>(m, "SourceKind")
      .value("pseudo", SourceKind::pseudo)
      .value("low_discrepancy", SourceKind::low_discrepancy);

  py::class_<UniformSource>(m, "UniformSource")
      .def(py::init([](const std::string& kind, std::uint64_t seed, std::uint64_t stream, bool scrambled) {
             return UniformSource(source_kind_from_string(kind), seed, stream, scrambled);
           }),
           py::arg("kind"), py::arg("seed"), py::arg("stream") = 0, py::arg("scrambled") = true)
      .def("next", &UniformSource::next)
      .def("at", &UniformSource::at, py::arg("position"))
      .def("take",
           [](UniformSource& s, std::size_t n) {
             Eigen::VectorXd v(static_cast<Eigen::Index>(n));
             for (auto& x : v) x = s.next();
             return v;
           },
           py::arg("n"))
      .def_property_readonly("counter", &UniformSource::counter);

  m.def("radical_inverse",
        [](std::uint64_t index) { return std::ldexp(static_cast<double>(radical_inverse_bits(index)), -32); },
        py::arg("index"), "Base-2 radical inverse, truncated to 32 digits.");
  m.def("inv_exp_cdf", &inv_exp_cdf, py::arg("x"), py::arg("r"));
  m.def("exp_cdf", &exp_cdf, py::arg("level"), py::arg("r"));

  py::class_<TriMesh, Mesh>(m, "Mesh")
      .def(py::init([](const Eigen::MatrixX2d& vertices, const Eigen::MatrixX3i& triangles) {
             std::vector<Point> v(static_cast<std::size_t>(vertices.rows()));
             for (Eigen::Index i = 0; i < vertices.rows(); ++i) v[i] = {vertices(i, 0), vertices(i, 1)};
             std::vector<std::array<int, 3>> t(static_cast<std::size_t>(triangles.rows()));
             for (Eigen::Index i = 0; i < triangles.rows(); ++i)
               t[i] = {triangles(i, 0), triangles(i, 1), triangles(i, 2)};
             return std::make_shared<TriMesh>(std::move(v), std::move(t));
           }),
           py::arg("vertices"), py::arg("triangles"))
      .def_property_readonly("num_vertices", &TriMesh::num_vertices)
      .def_property_readonly("num_triangles", &TriMesh::num_triangles)
      .def_property_readonly("vertices",
                             [](const TriMesh& mesh) {
                               Eigen::MatrixX2d out(mesh.num_vertices(), 2);
                               for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
                                 out.row(i) << mesh.vertices()[i].x, mesh.vertices()[i].y;
                               return out;
                             })
      .def_property_readonly("triangles",
                             [](const TriMesh& mesh) {
                               Eigen::MatrixX3i out(mesh.num_triangles(), 3);
                               for (std::size_t i = 0; i < mesh.num_triangles(); ++i)
                                 for (int k = 0; k < 3; ++k) out(i, k) = mesh.triangles()[i][k];
                               return out;
                             })
      .def("area", &TriMesh::area, py::arg("t"))
      .def("validate", &TriMesh::validate);

  m.def("structured_unit_square", [](int n) { return std::make_shared<TriMesh>(structured_unit_square(n)); },
        py::arg("n"));
  m.def("bisect_refine",
        [](const TriMesh& mesh, const std::vector<int>& marked) {
          return std::make_shared<TriMesh>(bisect_refine(mesh, marked));
        },
        py::arg("mesh"), py::arg("marked"));

  py::class_<CoefficientSample>(m, "Coefficient")
      .def_readonly("x", &CoefficientSample::x)
      .def_readonly("y", &CoefficientSample::y)
      .def_readonly("length", &CoefficientSample::length)
      .def_readonly("contrast", &CoefficientSample::contrast)
      .def("__call__", [](const CoefficientSample& c, double x, double y) { return eval(c, {x, y}); });
  m.def("make_box", &make_box, py::arg("x"), py::arg("y"), py::arg("length"), py::arg("contrast"));
  m.def("make_cross", &make_cross, py::arg("x"), py::arg("y"), py::arg("contrast"));

  py::class_<FESolution>(m, "Solution")
      .def_readonly("nodal", &FESolution::nodal)
      .def_readonly("element_coefficients", &FESolution::element_coefficients)
      .def_property_readonly("h1_norm", [](const FESolution& s) { return h1_norm(s); })
      .def_property_readonly("energy_norm", [](const FESolution& s) { return energy_norm(s); })
      .def("indicators",
           [](const FESolution& s, double load) { return residual_indicators(s, SourceTerm(load)).eta; },
           py::arg("load") = 1.0);
  m.def("solve_pde",
        [](const Mesh& mesh, const CoefficientSample& coeff, double load) {
          return solve_pde(mesh, coeff, SourceTerm(load));
        },
        py::arg("mesh"), py::arg("coefficient"), py::arg("load") = 1.0);

  m.def("doerfler_mark", [](const std::vector<double>& eta, double theta) { return doerfler_mark(eta, theta); },
        py::arg("eta"), py::arg("theta"));
  m.def("optimal_samples",
        [](const std::vector<double>& v, const std::vector<double>& c, double eps, double b) {
          return optimal_samples(v, c, eps, b);
        },
        py::arg("variances"), py::arg("costs"), py::arg("eps"), py::arg("b"));
  m.def("continuous_levels",
        [](const std::vector<double>& estimators) { return continuous_levels(estimators).levels; },
        py::arg("estimators"));
  m.def("clmc_weights",
        [](const std::vector<double>& levels, double max_level, double r) {
          const auto clip = clip_and_index(levels, max_level);
          return clmc_weights(levels, clip.clipped, clip.J, r);
        },
        py::arg("levels"), py::arg("max_level"), py::arg("r"));
  m.def("variance_estimate", [](const std::vector<double>& y) { return variance_estimate(y); }, py::arg("y"));

  m.def("effective_config",
        [](const std::string& text, bool full_scale) { return harness::parse_config(text, full_scale).to_json().dump(); },
        py::arg("text"), py::arg("full_scale") = false);
  m.def("config_hash",
        [](const std::string& text, bool full_scale) { return harness::parse_config(text, full_scale).hash(); },
        py::arg("text"), py::arg("full_scale") = false);
  m.def("run",
        [](const std::string& command, const std::string& text, const std::string& out, bool full_scale) {
          const auto config = harness::parse_config(text, full_scale);
          py::gil_scoped_release release;
          return run_command(command, config, out).dump();
        },
        py::arg("command"), py::arg("config"), py::arg("out"), py::arg("full_scale") = false);
}
