#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bf/constraints.hpp"
#include "bf/expr.hpp"
#include "bf/filtration.hpp"
#include "bf/flatzero.hpp"
#include "bf/jets.hpp"
#include "bf/realize.hpp"
#include "bf/region.hpp"
#include "bf/verify.hpp"

namespace py = pybind11;
using namespace bf;

namespace {

// bridge through the interpreter's own json module: slow, but exact and
// shape-faithful; bindings are for driving and inspecting, not hot loops
json py_to_json(py::handle h) {
  py::object dumps = py::module_::import("json").attr("dumps");
  return json::parse(dumps(h).cast<std::string>());
}

py::object json_to_py(const json& j) {
  py::object loads = py::module_::import("json").attr("loads");
  return loads(py::str(j.dump()));
}

Region region_of(py::handle h) {
  return Region::from_json(py_to_json(h), "region");
}

Pt pt_of(const std::vector<double>& x, int dim) {
  if (int(x.size()) != dim)
    throw validation_error("point arity does not match the expression");
  Pt p{0.0, 0.0};
  for (int i = 0; i < dim; ++i) p[std::size_t(i)] = x[std::size_t(i)];
  return p;
}

CompletionPrefix prefix_of(py::handle Z,
                           const std::vector<std::pair<SmoothExpr, int>>& terms) {
  CompletionPrefix P;
  P.Z = SetDescriptor::from_json(py_to_json(Z), "Z");
  for (const auto& [g, k] : terms) P.terms.push_back({g, k});
  return P;
}

}  // namespace

PYBIND11_MODULE(borelforge, m) {
  m.doc() = "constructive smooth realizations: expression DAGs, jet "
            "realization, flat glue, filtration checks, measurement";

  py::register_exception<validation_error>(m, "ValidationError",
                                           PyExc_ValueError);
  py::register_exception<construction_error>(m, "ConstructionError",
                                             PyExc_RuntimeError);
  py::register_exception<verification_error>(m, "VerificationError",
                                             PyExc_RuntimeError);

  py::class_<SmoothExpr>(m, "SmoothExpr")
      .def("dim", &SmoothExpr::dim)
      .def("__call__",
           [](const SmoothExpr& f, double x, std::optional<double> y) {
             return f.eval({x, y.value_or(0.0)});
           },
           py::arg("x"), py::arg("y") = std::nullopt)
      .def("derivs",
           [](const SmoothExpr& f, const std::vector<double>& x, int K) {
             return f.derivs(pt_of(x, f.dim()), K);
           },
           py::arg("x"), py::arg("order"),
           "raw partial derivatives up to the given order, graded layout")
      .def("to_json", [](const SmoothExpr& f) { return json_to_py(f.to_json()); })
      .def_static("from_json", [](py::handle j) {
        return SmoothExpr::from_json(py_to_json(j));
      });

  // ---- building blocks ----
  m.def("const_expr",
        [](double c, int dim) { return ex_const(rat_of_double(c), dim); },
        py::arg("c"), py::arg("dim") = 1);
  m.def("coord", &ex_coord, py::arg("axis"), py::arg("dim") = 1);
  m.def("add", &ex_add);
  m.def("sub", &ex_sub);
  m.def("mul", &ex_mul);
  m.def("scale",
        [](const SmoothExpr& f, double c) { return ex_scale(f, rat_of_double(c)); });
  m.def("poly1",
        [](const std::vector<double>& coeffs, int axis, int dim, double center) {
          std::vector<Rational> c;
          for (double v : coeffs) c.push_back(rat_of_double(v));
          return ex_poly1(c, axis, dim, rat_of_double(center));
        },
        py::arg("coeffs"), py::arg("axis") = 0, py::arg("dim") = 1,
        py::arg("center") = 0.0);

  // ---- realization ----
  m.def("realize_borel",
        [](py::handle jet, py::handle region) {
          auto R = borel_realize(Jet::from_json(py_to_json(jet), "jet"),
                                 region_of(region));
          return py::make_tuple(R.f, json_to_py(R.report));
        },
        py::arg("jet"), py::arg("region"),
        "one jet -> a function carrying it; returns (expr, report)");
  m.def("multi_borel",
        [](py::handle field, py::handle region) {
          auto R = multi_borel(JetField::from_json(py_to_json(field)),
                               region_of(region));
          return py::make_tuple(R.f, json_to_py(R.report));
        },
        py::arg("field"), py::arg("region"));
  m.def("extend_strata",
        [](py::handle field, py::handle region) {
          auto R = whitney_extend_strata(JetField::from_json(py_to_json(field)),
                                         region_of(region));
          return py::make_tuple(R.f, json_to_py(R.report));
        },
        py::arg("field"), py::arg("region"));
  m.def("realize_filtered",
        [](py::handle Z, const std::vector<std::pair<SmoothExpr, int>>& terms,
           py::handle region) {
          auto R = realize_filtered(prefix_of(Z, terms), region_of(region));
          return py::make_tuple(R.f, json_to_py(R.report));
        },
        py::arg("Z"), py::arg("terms"), py::arg("region"),
        "terms: list of (expr, declared_order) pairs");
  m.def("flat_zero_chain",
        [](py::handle chain, py::handle region) {
          auto F = flat_zero_chain(ZeroChain::from_json(py_to_json(chain)),
                                   region_of(region));
          return py::make_tuple(F.tau, json_to_py(F.report));
        },
        py::arg("chain"), py::arg("region"));

  // ---- filtration checks ----
  m.def("check_filtration",
        [](py::handle filtration, int i_max, int j_max, bool witness) {
          PolyFiltration F = PolyFiltration::from_json(py_to_json(filtration));
          if (j_max <= 0) j_max = F.size();
          if (i_max <= 0) i_max = j_max;
          json rep;
          rep["order_loci"] = order_loci(F, i_max, j_max).to_json();
          auto stab = stabilization_check(F, i_max, j_max);
          rep["stabilization"] = stab.to_json();
          rep["form"] = necessary_form_check(F, j_max).to_json();
          if (witness && stab.any_growth)
            rep["witness"] = witness_unbounded(F, j_max).report;
          return json_to_py(rep);
        },
        py::arg("filtration"), py::arg("i_max") = 0, py::arg("j_max") = 0,
        py::arg("witness") = true);

  // ---- constraints and decay ----
  m.def("solve_constraints",
        [](const SmoothExpr& f0, py::handle Z, py::handle eps, py::handle conds,
           py::handle region) {
          Region reg = region_of(region);
          SetDescriptor zd = SetDescriptor::from_json(py_to_json(Z), "Z");
          Rational e = rat_from_json(py_to_json(eps), "eps");
          std::vector<Functional> cs;
          json cj = py_to_json(conds);
          for (std::size_t i = 0; i < cj.size(); ++i)
            cs.push_back(Functional::from_json(cj[i], reg.box.dim,
                                               "conds/" + std::to_string(i)));
          json rep;
          SmoothExpr f = solve_constraints(f0, zd, e, cs, reg, &rep);
          return py::make_tuple(f, json_to_py(rep));
        },
        py::arg("f0"), py::arg("Z"), py::arg("eps"), py::arg("conds"),
        py::arg("region"));
  m.def("decay_wrap",
        [](py::handle Z, const std::vector<std::pair<SmoothExpr, int>>& terms,
           const std::vector<SmoothExpr>& envelopes, py::handle region) {
          DecaySpec spec;
          spec.envelopes = envelopes;
          json rep;
          SmoothExpr f =
              decay_wrap(prefix_of(Z, terms), spec, region_of(region), &rep);
          return py::make_tuple(f, json_to_py(rep));
        },
        py::arg("Z"), py::arg("terms"), py::arg("envelopes"), py::arg("region"));

  // ---- measurement ----
  m.def("fd_jet",
        [](const SmoothExpr& f, const std::vector<double>& x, int K,
           double feature) {
          FdJet r = fd_jet(f, pt_of(x, f.dim()), K, feature);
          py::dict d;
          d["value"] = r.value;
          d["err"] = r.err;
          return d;
        },
        py::arg("f"), py::arg("x"), py::arg("order"), py::arg("feature") = 1.0,
        "derivatives by central differences only; independent of the "
        "expression's own derivative path");
  m.def("vanishing_order",
        [](const SmoothExpr& f, const std::vector<double>& x,
           std::optional<std::vector<double>> dir, double h0) {
          OrderEstimate est;
          if (f.dim() == 1 && !dir)
            est = vanishing_order1(f, x.at(0), h0);
          else {
            if (!dir) throw validation_error("2D rays need a direction");
            est = vanishing_order(f, pt_of(x, f.dim()), pt_of(*dir, f.dim()), h0);
          }
          return json_to_py(est.to_json());
        },
        py::arg("f"), py::arg("x"), py::arg("dir") = std::nullopt,
        py::arg("h0") = 1e-2);
  m.def("sup_norm",
        [](const SmoothExpr& f, py::handle region, int K) {
          return sup_norm(f, region_of(region), K);
        },
        py::arg("f"), py::arg("region"), py::arg("order") = 0);
  m.def("set_sweep_threads", &set_sweep_threads);
}
