#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <limits>
#include <vector>

#include "abreu/cli_io.hpp"

namespace py = pybind11;
using abreu::io::Json;

namespace {

Json to_json(const py::object& o) {
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

// Node values as a (ny, nx) array with NaN at EXTERIOR nodes.
py::array_t<double> to_array(const abreu::ScalarField& f) {
  const abreu::Grid2D& g = *f.grid();
  py::array_t<double> a({g.ny(), g.nx()});
  auto m = a.mutable_unchecked<2>();
  for (int k = 0; k < g.size(); ++k)
    m(g.jy(k), g.ix(k)) = g.inside(k) ? f[k] : std::numeric_limits<double>::quiet_NaN();
  return a;
}

py::dict grid_axes(const abreu::Grid2D& g) {
  std::vector<double> x(g.nx()), y(g.ny());
  for (int i = 0; i < g.nx(); ++i) x[i] = g.x(i);
  for (int j = 0; j < g.ny(); ++j) y[j] = g.y(j);
  py::dict d;
  d["x"] = py::array_t<double>(static_cast<py::ssize_t>(x.size()), x.data());
  d["y"] = py::array_t<double>(static_cast<py::ssize_t>(y.size()), y.data());
  d["h"] = g.h();
  return d;
}

py::dict solution_dict(const abreu::ScalarField& u, const abreu::ScalarField& w, const abreu::SolveReport& r) {
  py::dict d = grid_axes(*u.grid());
  d["u"] = to_array(u);
  d["w"] = to_array(w);
  d["report"] = to_python(abreu::io::report_json(r));
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Coupled Abreu / Rochet-Chone solvers";
  py::register_exception<abreu::io::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("commands", &abreu::io::commands);
  m.def("default_config", [](const std::string& c) { return to_python(abreu::io::default_config(c)); });
  m.def(
      "resolve_config",
      [](const std::string& c, const py::object& overrides) {
        return to_python(abreu::io::resolve_config(c, overrides.is_none() ? Json::object() : to_json(overrides), {}));
      },
      py::arg("command"), py::arg("overrides") = py::none());
  m.def("run_command", [](const std::string& c, const py::object& cfg) {
    const Json j = to_json(cfg);
    py::gil_scoped_release release;
    return abreu::io::run_command(c, j);
  });
  m.def("solve_abreu", [](const py::object& cfg) {
    const Json j = to_json(cfg);
    abreu::AbreuSolution s;
    {
      py::gil_scoped_release release;
      s = abreu::io::solve_abreu(j);
    }
    return solution_dict(s.u, s.w, s.report);
  });
  m.def("solve_rc", [](const py::object& cfg) {
    const Json j = to_json(cfg);
    abreu::RCApproxRun r;
    {
      py::gil_scoped_release release;
      r = abreu::io::solve_rc(j);
    }
    py::dict d = solution_dict(r.u, r.w, r.report);
    d["eps"] = r.eps;
    d["penalty_l2"] = r.penalty_l2;
    return d;
  });
  m.def("read_field", [](const std::filesystem::path& p) {
    const abreu::io::FieldFile f = abreu::io::read_field(p);
    py::dict d = grid_axes(*f.field.grid());
    d["values"] = to_array(f.field);
    d["domain"] = f.domain;
    d["inner"] = f.inner;
    return d;
  });
}
