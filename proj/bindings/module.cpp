// Python bindings for the core operations: coefficient specs, sampled fields,
// counting curves, smoothed pairings, and the statistical checks.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "idslab/coeff.hpp"
#include "idslab/discretize.hpp"
#include "idslab/errors.hpp"
#include "idslab/ids.hpp"
#include "idslab/lab.hpp"

namespace py = pybind11;
using namespace idslab;

namespace {

BoundaryCondition parse_bc(const std::string& text) {
  if (text == "dirichlet") return BoundaryCondition::Dirichlet();
  if (text == "neumann") return BoundaryCondition::Neumann();
  if (text == "periodic") return BoundaryCondition::Periodic();
  if (text.rfind("floquet:", 0) == 0) {
    std::string rest = text.substr(8);
    std::replace(rest.begin(), rest.end(), ',', ' ');
    std::istringstream in(rest);
    double tx = 0.0, ty = 0.0;
    if (!(in >> tx)) throw ConfigError("floquet needs angles: " + text);
    in >> ty;
    return BoundaryCondition::Floquet(tx, ty);
  }
  throw ConfigError("unknown boundary condition '" + text + "'");
}

const char* kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::realized: return "realized";
    case FieldKind::periodized: return "periodized";
    case FieldKind::homogenized: return "homogenized";
    case FieldKind::reciprocal: return "reciprocal";
  }
  return "?";
}

CoefficientSpec build_spec(int d, int m, const std::vector<double>& rho_plus,
                           const std::vector<double>& rho_bump,
                           const std::string& law) {
  CoefficientSpec s;
  s.d = d;
  s.m = m;
  s.rho_plus = rho_plus;
  s.rho_bump = rho_bump;
  s.law = DisorderLaw::parse(law);
  s.finalize();
  return s;
}

}  // namespace

PYBIND11_MODULE(_idslab, mod) {
  mod.doc() = "integrated density of states of random divergence-form operators";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DomainError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      PyErr_SetString(PyExc_RuntimeError, e.what());
    }
  });

  py::class_<CoefficientSpec>(mod, "Spec")
      .def(py::init(&build_spec), py::arg("d"), py::arg("m"),
           py::arg("rho_plus"), py::arg("rho_bump"), py::arg("law"))
      .def_static("from_text", &CoefficientSpec::from_text, py::arg("text"))
      .def_static(
          "from_file",
          [](const std::string& path) {
            return CoefficientSpec::from_file(path);
          },
          py::arg("path"))
      .def_readonly("d", &CoefficientSpec::d)
      .def_readonly("m", &CoefficientSpec::m)
      .def_readonly("rho_plus", &CoefficientSpec::rho_plus)
      .def_readonly("rho_bump", &CoefficientSpec::rho_bump)
      .def_readonly("rho_lower", &CoefficientSpec::rho_lower)
      .def_readonly("rho_upper", &CoefficientSpec::rho_upper)
      .def("cells_per_period", &CoefficientSpec::cells_per_period)
      .def("to_json", &CoefficientSpec::to_json);

  py::class_<FieldOnGrid>(mod, "Field")
      .def_readonly("d", &FieldOnGrid::d)
      .def_readonly("m", &FieldOnGrid::m)
      .def_readonly("extent", &FieldOnGrid::extent)
      .def_readonly("values", &FieldOnGrid::values)
      .def_readonly("lower", &FieldOnGrid::lower)
      .def_readonly("upper", &FieldOnGrid::upper)
      .def_property_readonly(
          "kind", [](const FieldOnGrid& f) { return kind_name(f.kind); })
      .def("cells_per_axis", &FieldOnGrid::cells_per_axis)
      .def("cell_count", &FieldOnGrid::cell_count);

  py::class_<IdsCurve>(mod, "Curve")
      .def_readonly("energies", &IdsCurve::energies)
      .def_readonly("values", &IdsCurve::values)
      .def_readonly("stderrs", &IdsCurve::stderrs)
      .def("value_at", &IdsCurve::value_at, py::arg("E"))
      .def("stderr_at", &IdsCurve::stderr_at, py::arg("E"))
      .def_property_readonly(
          "method", [](const IdsCurve& c) { return c.meta.method; })
      .def_property_readonly("meta", [](const IdsCurve& c) {
        py::dict d;
        d["method"] = c.meta.method;
        d["bc"] = c.meta.bc;
        d["d"] = c.meta.d;
        d["m"] = c.meta.m;
        d["extent"] = c.meta.extent;
        d["samples"] = c.meta.samples;
        d["seed"] = c.meta.seed;
        d["theta_nodes"] = c.meta.theta_nodes;
        return d;
      });

  py::class_<SmoothedValue>(mod, "Smoothed")
      .def_readonly("value", &SmoothedValue::value)
      .def_readonly("stderr", &SmoothedValue::stderr_)
      .def_readonly("samples", &SmoothedValue::samples)
      .def_readonly("dof", &SmoothedValue::dof);

  py::class_<SandwichRow>(mod, "SandwichRow")
      .def_readonly("E", &SandwichRow::E)
      .def_readonly("N", &SandwichRow::N)
      .def_readonly("stderr", &SandwichRow::stderr_)
      .def_readonly("ref_minus", &SandwichRow::ref_minus)
      .def_readonly("ref_plus", &SandwichRow::ref_plus)
      .def_readonly("slack", &SandwichRow::slack)
      .def_readonly("lower_margin", &SandwichRow::lower_margin)
      .def_readonly("upper_margin", &SandwichRow::upper_margin)
      .def_readonly("passed", &SandwichRow::pass);

  py::class_<SandwichReport>(mod, "SandwichReport")
      .def_readonly("C_final", &SandwichReport::C_final)
      .def_readonly("rows", &SandwichReport::rows)
      .def_readonly("all_pass", &SandwichReport::all_pass)
      .def("to_json", &SandwichReport::to_json);

  py::class_<BracketReport>(mod, "BracketReport")
      .def_readonly("E", &BracketReport::E)
      .def_readonly("eps", &BracketReport::eps)
      .def_readonly("n", &BracketReport::n)
      .def_readonly("inner", &BracketReport::inner)
      .def_readonly("inner_se", &BracketReport::inner_se)
      .def_readonly("mid", &BracketReport::mid)
      .def_readonly("mid_se", &BracketReport::mid_se)
      .def_readonly("outer", &BracketReport::outer)
      .def_readonly("outer_se", &BracketReport::outer_se)
      .def_readonly("slack", &BracketReport::slack)
      .def_readonly("lower_ok", &BracketReport::lower_ok)
      .def_readonly("upper_ok", &BracketReport::upper_ok)
      .def_readonly("width", &BracketReport::width)
      .def("to_json", &BracketReport::to_json);

  py::class_<DeviationEstimate>(mod, "DeviationEstimate")
      .def_readonly("n", &DeviationEstimate::n)
      .def_readonly("extent", &DeviationEstimate::extent)
      .def_readonly("E", &DeviationEstimate::E)
      .def_readonly("alpha", &DeviationEstimate::alpha)
      .def_readonly("trials", &DeviationEstimate::trials)
      .def_readonly("hits", &DeviationEstimate::hits)
      .def_readonly("p_hat", &DeviationEstimate::p_hat)
      .def_readonly("ci_lo", &DeviationEstimate::ci_lo)
      .def_readonly("ci_hi", &DeviationEstimate::ci_hi)
      .def_readonly("subspace_dim", &DeviationEstimate::subspace_dim)
      .def_readonly("threshold", &DeviationEstimate::threshold)
      .def_readonly("ceiling", &DeviationEstimate::ceiling)
      .def("to_json", &DeviationEstimate::to_json);

  py::class_<LdRate>(mod, "LdRate")
      .def_readonly("probability", &LdRate::probability)
      .def_readonly("hoeffding_bound", &LdRate::hoeffding_bound)
      .def_readonly("rate_per_cell", &LdRate::rate_per_cell)
      .def_readonly("exact", &LdRate::exact)
      .def_readonly("method", &LdRate::method);

  py::class_<TailFit>(mod, "TailFit")
      .def_readonly("tau", &TailFit::tau)
      .def_readonly("intercept", &TailFit::intercept)
      .def_readonly("residual_rms", &TailFit::residual_rms)
      .def_readonly("points_used", &TailFit::points_used)
      .def_readonly("note", &TailFit::note);

  mod.def("geometric_grid", &geometric_grid, py::arg("lo"), py::arg("hi"),
          py::arg("count"));

  mod.def(
      "sample_field",
      [](const CoefficientSpec& s, int extent, std::uint64_t seed,
         std::uint64_t sample_index, bool periodic) {
        Realization r = draw_realization(s, extent, seed, sample_index);
        return periodic ? periodize(s, r) : sample_field(s, r);
      },
      py::arg("spec"), py::arg("extent"), py::arg("seed"),
      py::arg("sample_index") = 0, py::arg("periodic") = false);

  mod.def(
      "mean_field",
      [](const CoefficientSpec& s, int extent, bool harmonic) {
        return mean_field_on_box(s, extent, harmonic);
      },
      py::arg("spec"), py::arg("extent") = 1, py::arg("harmonic") = false);

  mod.def(
      "finite_volume_ids",
      [](const CoefficientSpec& s, int extent, const std::string& bc,
         const std::vector<double>& energies, long samples, std::uint64_t seed,
         int workers) {
        return finite_volume_ids(s, extent, parse_bc(bc), energies, samples,
                                 seed, workers);
      },
      py::arg("spec"), py::arg("extent"), py::arg("bc"), py::arg("energies"),
      py::arg("samples"), py::arg("seed"), py::arg("workers") = 0);

  mod.def("floquet_ids", &floquet_ids, py::arg("field"), py::arg("energies"),
          py::arg("theta_nodes") = 0, py::arg("workers") = 0);

  mod.def("homogenized_ids", &homogenized_ids, py::arg("spec"),
          py::arg("energies"), py::arg("theta_nodes") = 0,
          py::arg("harmonic") = false, py::arg("workers") = 0);

  mod.def("expected_periodized_ids", &expected_periodized_ids, py::arg("spec"),
          py::arg("extent"), py::arg("energies"), py::arg("theta_nodes"),
          py::arg("samples"), py::arg("seed"), py::arg("workers") = 0);

  mod.def(
      "smoothed_dos",
      [](const CoefficientSpec& s, double center, double sigma, int extent,
         const std::string& bc, long samples, std::uint64_t seed,
         int workers) {
        return smoothed_dos(s, TestFunction{center, sigma}, extent,
                            parse_bc(bc), samples, seed, workers);
      },
      py::arg("spec"), py::arg("center"), py::arg("sigma"), py::arg("extent"),
      py::arg("bc"), py::arg("samples"), py::arg("seed"),
      py::arg("workers") = 0);

  mod.def(
      "pair_against_curve",
      [](double center, double sigma, const IdsCurve& curve, double step) {
        return pair_against_curve(TestFunction{center, sigma}, curve, step);
      },
      py::arg("center"), py::arg("sigma"), py::arg("curve"),
      py::arg("step") = 0.0);

  mod.def(
      "sandwich_check",
      [](const IdsCurve& est, const IdsCurve& ref, double alpha, double tau,
         double C, bool fit_C) {
        SandwichParams p;
        p.alpha = alpha;
        p.tau = tau;
        p.C = C;
        p.fit_C = fit_C;
        return sandwich_check(est, ref, p);
      },
      py::arg("estimate"), py::arg("reference"), py::arg("alpha") = 0.7,
      py::arg("tau") = 0.5, py::arg("C") = 1.0, py::arg("fit_C") = true);

  mod.def("approximation_check", &approximation_check, py::arg("spec"),
          py::arg("E"), py::arg("eps"), py::arg("n"), py::arg("samples"),
          py::arg("seed"), py::arg("eta") = 1.0, py::arg("rho") = 1.0,
          py::arg("mid_extent") = 400, py::arg("theta_nodes") = 16,
          py::arg("workers") = 0);

  mod.def("deviation_event_probability", &deviation_event_probability,
          py::arg("spec"), py::arg("n"), py::arg("E"), py::arg("alpha"),
          py::arg("trials"), py::arg("seed"), py::arg("subspace_scale") = 1.0,
          py::arg("workers") = 0);

  mod.def(
      "ld_rate",
      [](const std::string& law, long cells, double t) {
        return ld_rate(DisorderLaw::parse(law), cells, t);
      },
      py::arg("law"), py::arg("cells"), py::arg("t"));

  mod.def(
      "clopper_pearson",
      [](long hits, long trials, double confidence) {
        ClopperPearson ci = clopper_pearson(hits, trials, confidence);
        return py::make_tuple(ci.lo, ci.hi);
      },
      py::arg("hits"), py::arg("trials"), py::arg("confidence") = 0.95);

  mod.def(
      "fit_tail",
      [](const std::vector<double>& energies,
         const std::vector<double>& p_hats) {
        return fit_tail(energies, p_hats);
      },
      py::arg("energies"), py::arg("p_hats"));
}
