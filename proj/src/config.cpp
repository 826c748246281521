#include "sindykit/config.hpp"

#include "sindykit/errors.hpp"
#include "sindykit/model_io.hpp"

#include <fstream>
#include <set>

namespace sindykit {

using nlohmann::json;

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw SchemaError("unknown config key '" + where + "." + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& target, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError("config key '" + where + "." + key + "' has the wrong type");
  }
}

const char* method_name(IntegratorMethod m) { return m == IntegratorMethod::Rk4 ? "rk4" : "rk45"; }
const char* interp_name(InputInterp i) { return i == InputInterp::ZeroOrderHold ? "zoh" : "linear"; }
const char* kind_name(ExcitationKind k) {
  switch (k) {
    case ExcitationKind::Prbs: return "prbs";
    case ExcitationKind::RandomAmplitudePrbs: return "random-amplitude-prbs";
    case ExcitationKind::Multilevel: break;
  }
  return "multilevel";
}

json integrator_to_json(const IntegratorSettings& s) {
  return {{"method", method_name(s.method)},  {"step", s.step},
          {"rtol", s.rtol},                   {"atol", s.atol},
          {"input_interp", interp_name(s.input_interp)}, {"max_step", s.max_step},
          {"divergence_cap", s.divergence_cap}, {"max_steps", s.max_steps}};
}

IntegratorSettings integrator_from_json(const json& j, IntegratorSettings s, const std::string& where) {
  require_keys(j, {"method", "step", "rtol", "atol", "input_interp", "max_step", "divergence_cap", "max_steps"}, where);
  std::string method = method_name(s.method), interp = interp_name(s.input_interp);
  read(j, "method", method, where);
  read(j, "input_interp", interp, where);
  if (method == "rk4") {
    s.method = IntegratorMethod::Rk4;
  } else if (method == "rk45") {
    s.method = IntegratorMethod::Rk45;
  } else {
    throw SchemaError("unknown integrator method '" + method + "' (rk4 or rk45)");
  }
  if (interp == "zoh") {
    s.input_interp = InputInterp::ZeroOrderHold;
  } else if (interp == "linear") {
    s.input_interp = InputInterp::Linear;
  } else {
    throw SchemaError("unknown input interpolation '" + interp + "' (zoh or linear)");
  }
  read(j, "step", s.step, where);
  read(j, "rtol", s.rtol, where);
  read(j, "atol", s.atol, where);
  read(j, "max_step", s.max_step, where);
  read(j, "divergence_cap", s.divergence_cap, where);
  read(j, "max_steps", s.max_steps, where);
  s.check();
  return s;
}

json signal_to_json(const ExcitationSignal& s, bool with_seed) {
  json j = {{"kind", kind_name(s.kind)}, {"switch_period", s.switch_period}, {"low", s.low}, {"high", s.high},
            {"q", s.q}, {"r", s.r}, {"polynomial", s.polynomial}};
  if (with_seed) j["seed"] = s.seed;
  return j;
}

ExcitationSignal signal_from_json(const json& j, bool& has_seed) {
  const std::string where = "excitation.signals[]";
  require_keys(j, {"kind", "seed", "switch_period", "low", "high", "q", "r", "polynomial"}, where);
  ExcitationSignal s;
  std::string kind = kind_name(s.kind);
  read(j, "kind", kind, where);
  if (kind == "prbs") {
    s.kind = ExcitationKind::Prbs;
  } else if (kind == "multilevel") {
    s.kind = ExcitationKind::Multilevel;
  } else if (kind == "random-amplitude-prbs") {
    s.kind = ExcitationKind::RandomAmplitudePrbs;
  } else {
    throw SchemaError("unknown excitation kind '" + kind + "'");
  }
  has_seed = j.contains("seed") && !j.at("seed").is_null();
  read(j, "seed", s.seed, where);
  read(j, "switch_period", s.switch_period, where);
  read(j, "low", s.low, where);
  read(j, "high", s.high, where);
  read(j, "q", s.q, where);
  read(j, "r", s.r, where);
  read(j, "polynomial", s.polynomial, where);
  if (s.kind != ExcitationKind::Multilevel && s.q != 2) {
    throw ParameterError("binary excitation kinds need q = 2");
  }
  if (!(s.switch_period > 0.0)) throw ParameterError("excitation switch_period must be positive");
  if (!(s.high >= s.low)) throw ParameterError("excitation bounds need low <= high");
  return s;
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.fit.diff_scheme = DiffScheme::Central;
  // Plant-style forcing: two seeded multilevel sequences on a 0.02 h grid.
  ExcitationSignal u1;
  u1.kind = ExcitationKind::Multilevel;
  u1.q = 3;
  u1.r = 3;
  u1.switch_period = 1.0;
  u1.low = -1.0;
  u1.high = 1.0;
  ExcitationSignal u2 = u1;
  u2.q = 5;
  u2.r = 2;
  u2.switch_period = 1.5;
  c.excitation.signals = {u1, u2};
  c.excitation.explicit_seed = {false, false};
  return c;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c = defaults();
  require_keys(j, {"data", "schema", "test_data", "model", "inputs", "reference", "library", "lambda", "lambda_grid",
                   "folds", "stlsq", "differentiation", "standardize", "refine", "integrator", "excitation",
                   "simulate", "seed", "threads", "out"},
               "config");
  read(j, "data", c.data, "config");
  read(j, "schema", c.schema, "config");
  read(j, "test_data", c.test_data, "config");
  read(j, "model", c.model, "config");
  read(j, "inputs", c.inputs, "config");
  read(j, "reference", c.reference, "config");
  read(j, "lambda", c.lambda, "config");
  read(j, "folds", c.folds, "config");
  read(j, "standardize", c.fit.standardize, "config");
  read(j, "seed", c.seed, "config");
  read(j, "threads", c.threads, "config");
  read(j, "out", c.out, "config");

  if (j.contains("library")) {
    const json& lib = j.at("library");
    require_keys(lib, {"degree", "include_constant", "with_input_derivatives"}, "library");
    read(lib, "degree", c.degree, "library");
    read(lib, "include_constant", c.include_constant, "library");
    read(lib, "with_input_derivatives", c.with_input_derivatives, "library");
  }
  if (j.contains("lambda_grid")) {
    const json& g = j.at("lambda_grid");
    require_keys(g, {"start", "stop", "step"}, "lambda_grid");
    read(g, "start", c.lambda_grid.start, "lambda_grid");
    read(g, "stop", c.lambda_grid.stop, "lambda_grid");
    read(g, "step", c.lambda_grid.step, "lambda_grid");
  }
  if (j.contains("stlsq")) {
    const json& s = j.at("stlsq");
    require_keys(s, {"max_iter", "ridge"}, "stlsq");
    read(s, "max_iter", c.fit.stlsq.max_iter, "stlsq");
    if (s.contains("ridge") && !s.at("ridge").is_null()) {
      double ridge = 0.0;
      read(s, "ridge", ridge, "stlsq");
      c.fit.stlsq.ridge = ridge;
    }
  }
  if (j.contains("differentiation")) {
    std::string scheme;
    read(j, "differentiation", scheme, "config");
    if (scheme == "central") {
      c.fit.diff_scheme = DiffScheme::Central;
    } else if (scheme == "segmented-central") {
      c.fit.diff_scheme = DiffScheme::SegmentedCentral;
    } else {
      throw SchemaError("unknown differentiation scheme '" + scheme + "' (central or segmented-central)");
    }
  }
  if (j.contains("integrator")) c.integ = integrator_from_json(j.at("integrator"), c.integ, "integrator");
  if (j.contains("refine")) {
    const json& r = j.at("refine");
    require_keys(r, {"enabled", "bound_factor", "bound_floor", "max_evals", "max_iterations", "penalty", "integrator"},
                 "refine");
    read(r, "enabled", c.refine, "refine");
    read(r, "bound_factor", c.refine_cfg.bound_factor, "refine");
    read(r, "bound_floor", c.refine_cfg.bound_floor, "refine");
    read(r, "max_evals", c.refine_cfg.max_evals, "refine");
    read(r, "max_iterations", c.refine_cfg.max_iterations, "refine");
    read(r, "penalty", c.refine_cfg.penalty, "refine");
    if (r.contains("integrator")) {
      c.refine_cfg.integ = integrator_from_json(r.at("integrator"), c.refine_cfg.integ, "refine.integrator");
    }
    c.refine_cfg.check();
  }
  if (j.contains("excitation")) {
    const json& e = j.at("excitation");
    require_keys(e, {"t0", "t1", "dt", "signals"}, "excitation");
    read(e, "t0", c.excitation.t0, "excitation");
    read(e, "t1", c.excitation.t1, "excitation");
    read(e, "dt", c.excitation.dt, "excitation");
    if (e.contains("signals")) {
      if (!e.at("signals").is_array()) throw SchemaError("excitation.signals must be an array");
      c.excitation.signals.clear();
      c.excitation.explicit_seed.clear();
      for (const auto& s : e.at("signals")) {
        bool has_seed = false;
        c.excitation.signals.push_back(signal_from_json(s, has_seed));
        c.excitation.explicit_seed.push_back(has_seed);
      }
    }
  }
  if (j.contains("simulate")) {
    const json& s = j.at("simulate");
    require_keys(s, {"x0", "t_span", "dt"}, "simulate");
    read(s, "x0", c.x0, "simulate");
    read(s, "dt", c.dt, "simulate");
    if (s.contains("t_span") && !s.at("t_span").is_null()) {
      std::vector<double> span;
      read(s, "t_span", span, "simulate");
      if (span.size() != 2) throw SchemaError("simulate.t_span must be [t0, t1]");
      c.t_span = std::make_pair(span[0], span[1]);
    }
  }

  if (c.degree < 1) throw ParameterError("library degree must be >= 1");
  if (c.folds < 2) throw ParameterError("folds must be >= 2");
  if (!(c.lambda >= 0.0)) throw ParameterError("lambda must be non-negative");
  if (c.fit.stlsq.max_iter < 1) throw ParameterError("stlsq.max_iter must be >= 1");
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json signals = json::array();
  for (std::size_t i = 0; i < excitation.signals.size(); ++i) {
    signals.push_back(signal_to_json(excitation.signals[i], i < excitation.explicit_seed.size() && excitation.explicit_seed[i]));
  }
  json refine_json = {{"enabled", refine},
                      {"bound_factor", refine_cfg.bound_factor},
                      {"bound_floor", refine_cfg.bound_floor},
                      {"max_evals", refine_cfg.max_evals},
                      {"max_iterations", refine_cfg.max_iterations},
                      {"penalty", refine_cfg.penalty},
                      {"integrator", integrator_to_json(refine_cfg.integ)}};
  json j = {{"data", data},
            {"schema", schema},
            {"test_data", test_data},
            {"model", model},
            {"inputs", inputs},
            {"reference", reference},
            {"library",
             {{"degree", degree}, {"include_constant", include_constant}, {"with_input_derivatives", with_input_derivatives}}},
            {"lambda", lambda},
            {"lambda_grid", {{"start", lambda_grid.start}, {"stop", lambda_grid.stop}, {"step", lambda_grid.step}}},
            {"folds", folds},
            {"stlsq", {{"max_iter", fit.stlsq.max_iter}, {"ridge", fit.stlsq.ridge ? json(*fit.stlsq.ridge) : json(nullptr)}}},
            {"differentiation", fit.diff_scheme == DiffScheme::SegmentedCentral ? "segmented-central" : "central"},
            {"standardize", fit.standardize},
            {"refine", std::move(refine_json)},
            {"integrator", integrator_to_json(integ)},
            {"excitation", {{"t0", excitation.t0}, {"t1", excitation.t1}, {"dt", excitation.dt}, {"signals", signals}}},
            {"simulate",
             {{"x0", x0},
              {"t_span", t_span ? json::array({t_span->first, t_span->second}) : json(nullptr)},
              {"dt", dt}}},
            {"seed", seed},
            {"threads", threads},
            {"out", out}};
  return j;
}

std::string RunConfig::hash() const {
  json j = to_json();
  j.erase("threads");
  j.erase("out");
  return fnv1a_hex(j.dump());
}

std::vector<ExcitationSignal> RunConfig::excitation_signals() const {
  std::vector<ExcitationSignal> out = excitation.signals;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool fixed = i < excitation.explicit_seed.size() && excitation.explicit_seed[i];
    if (!fixed) out[i].seed = seed + i;
  }
  return out;
}

}  // namespace sindykit
