#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sindykit/cli.hpp"
#include "sindykit/errors.hpp"
#include "sindykit/excitation.hpp"
#include "sindykit/model_io.hpp"
#include "sindykit/reference.hpp"
#include "sindykit/refine.hpp"
#include "sindykit/regression.hpp"
#include "sindykit/simulate.hpp"
#include "sindykit/validate.hpp"

namespace py = pybind11;
using namespace sindykit;

namespace {

TimeSeriesData series(const VectorXd& t, const MatrixXd& X, const std::optional<MatrixXd>& U) {
  return make_series(t, X, U ? *U : MatrixXd(t.size(), 0));
}

DiffScheme parse_scheme(const std::string& s) {
  if (s == "central") return DiffScheme::Central;
  if (s == "segmented-central") return DiffScheme::SegmentedCentral;
  throw ConfigError("unknown differentiation scheme '" + s + "' (central, segmented-central)");
}

IntegratorSettings integrator(const std::string& method, const std::string& interp) {
  IntegratorSettings s;
  if (method == "rk4") {
    s.method = IntegratorMethod::Rk4;
  } else if (method != "rk45") {
    throw ConfigError("unknown integrator '" + method + "' (rk4, rk45)");
  }
  if (interp == "zoh") {
    s.input_interp = InputInterp::ZeroOrderHold;
  } else if (interp != "linear") {
    throw ConfigError("unknown input interpolation '" + interp + "' (zoh, linear)");
  }
  return s;
}

ExcitationKind parse_kind(const std::string& s) {
  if (s == "prbs") return ExcitationKind::Prbs;
  if (s == "multilevel") return ExcitationKind::Multilevel;
  if (s == "random-amplitude-prbs") return ExcitationKind::RandomAmplitudePrbs;
  throw ConfigError("unknown excitation kind '" + s + "'");
}

std::vector<std::string> term_labels(const SparseModel& m) {
  const auto names = variable_names(m.spec, m.state_names(), m.input_names());
  std::vector<std::string> out;
  for (const auto& t : m.spec.terms) out.push_back(term_label(t, names));
  return out;
}

}  // namespace

PYBIND11_MODULE(_sindykit, mod) {
  mod.doc() = "Sparse identification of nonlinear dynamics with control inputs";

  static py::exception<ConfigError> config_error(mod, "ConfigError", PyExc_ValueError);
  static py::exception<DataError> data_error(mod, "DataError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(mod, "NumericalError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const DataError& e) {
      py::set_error(data_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    }
  });

  py::class_<SparseModel>(mod, "Model")
      .def_property_readonly("xi", [](const SparseModel& m) { return m.Xi; })
      .def_readonly("lambda_", &SparseModel::lambda)
      .def_property_readonly("terms", &term_labels)
      .def_property_readonly("states", &SparseModel::state_names)
      .def_property_readonly("inputs", &SparseModel::input_names)
      .def_property_readonly("degree", [](const SparseModel& m) { return m.spec.degree; })
      .def_property_readonly("with_input_derivatives",
                             [](const SparseModel& m) { return m.spec.with_input_derivatives; })
      .def("nonzero_count", &SparseModel::nonzero_count)
      .def("equations", &render_equations)
      .def("coefficient",
           [](const SparseModel& m, const std::string& state, const std::string& term) {
             const Index k = find_term(m, term);
             if (k < 0) throw ConfigError("unknown term '" + term + "'");
             const auto names = m.state_names();
             const auto it = std::find(names.begin(), names.end(), state);
             if (it == names.end()) throw ConfigError("unknown state '" + state + "'");
             return m.Xi(k, it - names.begin());
           })
      .def("to_json", [](const SparseModel& m) { return model_to_json({m, {}}).dump(2); })
      .def_static("from_json", [](const std::string& text) { return model_from_json(nlohmann::json::parse(text)).model; })
      .def("rhs",
           [](const SparseModel& m, const VectorXd& x, const std::optional<VectorXd>& u) {
             return VectorXd(m.Xi.transpose() * evaluate_point(m.spec, x, u ? *u : VectorXd(0)));
           },
           py::arg("x"), py::arg("u") = py::none())
      .def("__repr__", [](const SparseModel& m) {
        std::ostringstream s;
        s << "<Model states=" << m.spec.n_states << " inputs=" << m.spec.n_inputs << " terms=" << m.spec.size()
          << " nonzero=" << m.nonzero_count() << ">";
        return s.str();
      });

  mod.def("make_model",
          [](const MatrixXd& xi, int n_inputs, int degree, bool include_constant, bool with_input_derivatives) {
            const auto spec =
                build_spec(static_cast<int>(xi.cols()), n_inputs, degree, include_constant, with_input_derivatives);
            if (xi.rows() != spec.size()) {
              throw ShapeError("xi needs " + std::to_string(spec.size()) + " rows for this library");
            }
            return make_model(spec, xi);
          },
          py::arg("xi"), py::arg("n_inputs") = 0, py::arg("degree") = 1, py::arg("include_constant") = true,
          py::arg("with_input_derivatives") = false);
  mod.def("reference_names", &reference_names);
  mod.def("reference", [](const std::string& name) { return reference_by_name(name).model; }, py::arg("name"));

  mod.def("library_terms",
          [](int n_states, int n_inputs, int degree, bool include_constant, bool with_input_derivatives) {
            const auto spec = build_spec(n_states, n_inputs, degree, include_constant, with_input_derivatives);
            return term_labels(make_model(spec, MatrixXd::Zero(spec.size(), n_states)));
          },
          py::arg("n_states"), py::arg("n_inputs") = 0, py::arg("degree") = 1, py::arg("include_constant") = true,
          py::arg("with_input_derivatives") = false);

  mod.def("fit",
          [](const VectorXd& t, const MatrixXd& X, const std::optional<MatrixXd>& U, double lambda, int degree,
             bool include_constant, bool with_input_derivatives, const std::string& differentiation, bool standardize,
             int max_iter) {
            const auto data = series(t, X, U);
            FitOptions o;
            o.diff_scheme = parse_scheme(differentiation);
            o.standardize = standardize;
            o.stlsq.max_iter = max_iter;
            const auto spec = build_spec(static_cast<int>(X.cols()), static_cast<int>(data.n_inputs()), degree,
                                         include_constant, with_input_derivatives);
            return fit_with_inputs(data, spec, lambda, o);
          },
          py::arg("t"), py::arg("x"), py::arg("u") = py::none(), py::arg("lam") = 0.025, py::arg("degree") = 1,
          py::arg("include_constant") = true, py::arg("with_input_derivatives") = false,
          py::arg("differentiation") = "central", py::arg("standardize") = false, py::arg("max_iter") = 10);

  mod.def("simulate",
          [](const SparseModel& m, const VectorXd& x0, const VectorXd& t, const std::optional<MatrixXd>& U,
             const std::string& method, const std::string& interp) {
            return integrate(m, x0, t, U ? *U : MatrixXd(t.size(), 0), integrator(method, interp)).X;
          },
          py::arg("model"), py::arg("x0"), py::arg("t"), py::arg("u") = py::none(), py::arg("method") = "rk45",
          py::arg("interp") = "linear");

  mod.def("refine",
          [](const SparseModel& m, const VectorXd& t, const MatrixXd& X, const std::optional<MatrixXd>& U,
             double bound_factor, double bound_floor, int max_evals, const std::string& interp, int threads) {
            RefineConfig cfg;
            cfg.bound_factor = bound_factor;
            cfg.bound_floor = bound_floor;
            cfg.max_evals = max_evals;
            cfg.integ = integrator("rk4", interp);
            cfg.threads = threads;
            const auto r = refine_detailed(m, series(t, X, U), cfg);
            return py::make_tuple(r.model, r.initial_objective, r.objective);
          },
          py::arg("model"), py::arg("t"), py::arg("x"), py::arg("u") = py::none(), py::arg("bound_factor") = 0.5,
          py::arg("bound_floor") = 1e-3, py::arg("max_evals") = 20000, py::arg("interp") = "linear",
          py::arg("threads") = 1);

  mod.def("mae", [](const MatrixXd& ref, const MatrixXd& model) { return mae_mean(mae_per_variable(ref, model)); });

  mod.def("excitation",
          [](const std::string& kind, const VectorXd& t, std::uint64_t seed, double switch_period, double low,
             double high, int q, int r) {
            ExcitationSignal s;
            s.kind = parse_kind(kind);
            s.seed = seed;
            s.switch_period = switch_period;
            s.low = low;
            s.high = high;
            s.q = q;
            s.r = r;
            return generate(s, t);
          },
          py::arg("kind"), py::arg("t"), py::arg("seed") = 1, py::arg("switch_period") = 1.0, py::arg("low") = -1.0,
          py::arg("high") = 1.0, py::arg("q") = 2, py::arg("r") = 4);

  mod.def("kfold_split",
          [](Index m, int k) {
            std::vector<std::pair<Index, Index>> out;
            for (const auto& f : kfold_split(m, k)) out.emplace_back(f.begin, f.end);
            return out;
          },
          py::arg("m"), py::arg("k"));
  mod.def("lambda_grid", &lambda_grid, py::arg("start"), py::arg("stop"), py::arg("step"));

  mod.def("crossvalidate",
          [](const VectorXd& t, const MatrixXd& X, const std::optional<MatrixXd>& U, double lambda, int degree,
             int folds, bool refine, const std::string& differentiation, const std::string& interp) {
            ValidationSettings v;
            v.folds = folds;
            v.fit.diff_scheme = parse_scheme(differentiation);
            v.integ = integrator("rk45", interp);
            v.refine.integ.input_interp = v.integ.input_interp;
            const auto data = series(t, X, U);
            const auto spec =
                build_spec(static_cast<int>(X.cols()), static_cast<int>(data.n_inputs()), degree, true, false);
            py::list out;
            for (const auto& r : crossvalidate(data, spec, lambda, refine, v)) {
              py::dict d;
              d["fold"] = r.fold_index;
              d["mae_mean"] = r.mae_mean;
              d["mae_per_state"] = r.mae_per_state;
              d["nonzero_terms"] = r.nonzero_terms;
              d["failure"] = r.failure;
              out.append(d);
            }
            return out;
          },
          py::arg("t"), py::arg("x"), py::arg("u") = py::none(), py::arg("lam") = 0.025, py::arg("degree") = 1,
          py::arg("folds") = 5, py::arg("refine") = false, py::arg("differentiation") = "central",
          py::arg("interp") = "linear");

  mod.def("run_cli",
          [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = run_cli(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
          },
          py::arg("args"));

  mod.attr("__version__") = kToolVersion;
}
