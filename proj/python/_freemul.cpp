#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "freemul/error.hpp"
#include "freemul/measure.hpp"
#include "freemul/recover.hpp"
#include "freemul/regularity.hpp"
#include "freemul/series.hpp"
#include "freemul/subordination.hpp"
#include "freemul/transform.hpp"

namespace py = pybind11;
using namespace freemul;

namespace {

Measure make_measure(const std::string& space, const std::vector<std::pair<double, double>>& atoms,
                     const std::optional<std::pair<std::vector<double>, std::vector<double>>>& density) {
  std::vector<PointMass> points;
  for (const auto& [x, p] : atoms) points.push_back({x, p});
  std::optional<DensityPart> part;
  if (density) part = DensityPart{density->first, density->second};
  return Measure::make(space_from_string(space), std::move(points), std::move(part));
}

py::list atoms_of(const std::vector<DetectedAtom>& atoms) {
  py::list out;
  for (const auto& a : atoms) {
    py::dict d;
    d["location"] = a.location;
    d["mass"] = a.mass;
    d["jc_derivative"] = a.jc_derivative;
    d["residual"] = a.residual;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_freemul, mod) {
  mod.doc() = "Free multiplicative convolution semigroups on the half-line and the circle";

  // The message starts with the error code, e.g. "MassAuditFailure: ...".
  py::register_exception<Error>(mod, "FreemulError", PyExc_RuntimeError);

  py::class_<Measure>(mod, "Measure")
      .def(py::init(&make_measure), py::arg("space"), py::arg("atoms") = std::vector<std::pair<double, double>>{},
           py::arg("density") = std::nullopt,
           "space is 'r_plus' or 'circle'; atoms are (location, mass) pairs and density a "
           "(grid, values) pair")
      .def_static("from_json", [](const std::string& text) { return load_measure(text); })
      .def("to_json", [](const Measure& m) { return dump_measure(m); })
      .def_property_readonly("space", [](const Measure& m) { return std::string(to_string(m.space())); })
      .def_property_readonly("atoms",
                             [](const Measure& m) {
                               std::vector<std::pair<double, double>> out;
                               for (const auto& a : m.atoms()) out.emplace_back(a.location, a.mass);
                               return out;
                             })
      .def_property_readonly("density",
                             [](const Measure& m) -> std::optional<std::pair<std::vector<double>, std::vector<double>>> {
                               if (!m.density()) return std::nullopt;
                               return std::make_pair(m.density()->grid, m.density()->values);
                             })
      .def("total_mass", [](const Measure& m) { return total_mass(m); })
      .def("moments", [](const Measure& m, int order) { return moments(m, order); }, py::arg("order"));

  mod.def(
      "psi",
      [](const Measure& m, const std::vector<cplx>& zs) {
        const Transformer tr(m);
        std::vector<cplx> out;
        for (cplx z : zs) out.push_back(tr.psi(EvalPoint::in(m.space(), z).z()).value);
        return out;
      },
      py::arg("measure"), py::arg("z"));
  mod.def(
      "eta",
      [](const Measure& m, const std::vector<cplx>& zs) {
        const Transformer tr(m);
        std::vector<cplx> out;
        for (cplx z : zs) out.push_back(tr.eta(EvalPoint::in(m.space(), z).z()).value);
        return out;
      },
      py::arg("measure"), py::arg("z"));
  mod.def(
      "subordination",
      [](const Measure& m, double t, cplx z) {
        const MeasureEta src(m);
        const OmegaResult r = solve_omega(src, t, z);
        return py::make_tuple(r.omega, r.eta_t, r.residual);
      },
      py::arg("measure"), py::arg("t"), py::arg("z"),
      "(omega_t(z), eta_t(z), residual of Phi_t(omega) = z)");
  mod.def(
      "semigroup_moments",
      [](const Measure& m, double t, int order) { return semigroup_moments(m, t, order); },
      py::arg("measure"), py::arg("t"), py::arg("order"));

  mod.def(
      "semigroup",
      [](const Measure& m, double t, int grid_points, int threads,
         const std::optional<std::vector<double>>& grid) {
        RecoverConfig cfg;
        cfg.grid_points = grid_points;
        cfg.threads = threads;
        std::optional<SemigroupResult> held;
        {
          py::gil_scoped_release release;
          held.emplace(compute_semigroup(m, t, cfg, grid));
        }
        const SemigroupResult& r = *held;
        py::dict out;
        out["t"] = r.t;
        out["space"] = std::string(to_string(r.space));
        out["atoms"] = atoms_of(r.atoms.atoms);
        out["zero_mass"] = r.zero.mass;
        out["grid"] = r.density.grid;
        out["density"] = r.density.values;
        out["filled"] = r.density.filled;
        out["raw_total"] = r.assembled.raw_total;
        out["measure"] = r.assembled.measure;
        return out;
      },
      py::arg("measure"), py::arg("t"), py::arg("grid_points") = RecoverConfig{}.grid_points,
      py::arg("threads") = 1, py::arg("grid") = std::nullopt);

  mod.def(
      "verify",
      [](const Measure& m, double t, bool inject_gap, int threads) {
        RegularityConfig cfg;
        cfg.inject_gap = inject_gap;
        cfg.recover.threads = threads;
        std::optional<RegularityReport> r;
        {
          py::gil_scoped_release release;
          r.emplace(verify_regularity(m, t, cfg));
        }
        return py::make_tuple(r->pass, regularity_json(*r));
      },
      py::arg("measure"), py::arg("t"), py::arg("inject_gap") = false, py::arg("threads") = 1,
      "(pass, report as JSON text)");
}
