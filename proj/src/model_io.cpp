#include "sindykit/model_io.hpp"

#include "sindykit/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sindykit {

using nlohmann::json;

namespace {

const char* policy_name(Aggregation a) { return a == Aggregation::Mean ? "mean" : "sum"; }

Aggregation parse_policy(const std::string& s) {
  if (s == "sum") return Aggregation::Sum;
  if (s == "mean") return Aggregation::Mean;
  throw SchemaError("unknown aggregation policy '" + s + "'");
}

const char* scheme_name(DiffScheme s) { return s == DiffScheme::SegmentedCentral ? "segmented-central" : "central"; }

DiffScheme parse_scheme(const std::string& s) {
  if (s == "central") return DiffScheme::Central;
  if (s == "segmented-central") return DiffScheme::SegmentedCentral;
  throw SchemaError("unknown differentiation scheme '" + s + "'");
}

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw SchemaError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw SchemaError("missing key '" + std::string(key) + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError("bad value for '" + std::string(key) + "' in " + where + ": " + e.what());
  }
}

json columns_to_json(const std::vector<Column>& cols) {
  json out = json::array();
  for (const auto& c : cols) out.push_back({{"name", c.name}, {"unit", c.unit}, {"policy", policy_name(c.aggregation)}});
  return out;
}

std::vector<Column> columns_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + " must be an array");
  std::vector<Column> out;
  for (const auto& c : j) {
    require_keys(c, {"name", "unit", "policy"}, where);
    Column col;
    col.name = get<std::string>(c, "name", where);
    if (c.contains("unit")) col.unit = get<std::string>(c, "unit", where);
    if (c.contains("policy")) col.aggregation = parse_policy(get<std::string>(c, "policy", where));
    out.push_back(std::move(col));
  }
  return out;
}

json fit_meta_to_json(const FitMeta& m) {
  return {{"iterations", m.iterations},
          {"active_history", m.active_history},
          {"residual_norms", m.residual_norms},
          {"converged", m.converged},
          {"ridge", m.ridge},
          {"samples", m.samples},
          {"diff_scheme", scheme_name(m.diff_scheme)},
          {"standardized", m.standardized}};
}

FitMeta fit_meta_from_json(const json& j) {
  const std::string where = "fit";
  require_keys(j, {"iterations", "active_history", "residual_norms", "converged", "ridge", "samples", "diff_scheme",
                   "standardized"},
               where);
  FitMeta m;
  if (j.contains("iterations")) m.iterations = get<std::vector<int>>(j, "iterations", where);
  if (j.contains("active_history")) m.active_history = get<std::vector<std::vector<int>>>(j, "active_history", where);
  if (j.contains("residual_norms")) {
    for (const auto& v : j.at("residual_norms")) {
      m.residual_norms.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
    }
  }
  if (j.contains("converged")) m.converged = get<bool>(j, "converged", where);
  if (j.contains("ridge")) m.ridge = get<double>(j, "ridge", where);
  if (j.contains("samples")) m.samples = get<Index>(j, "samples", where);
  if (j.contains("diff_scheme")) m.diff_scheme = parse_scheme(get<std::string>(j, "diff_scheme", where));
  if (j.contains("standardized")) m.standardized = get<bool>(j, "standardized", where);
  return m;
}

std::string coefficient_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json library_to_json(const LibrarySpec& spec, const std::vector<std::string>& names) {
  json terms = json::array();
  for (const auto& t : spec.terms) {
    json term = json::object();
    for (std::size_t v = 0; v < t.powers.size(); ++v) {
      if (t.powers[v] != 0) term[names[v]] = t.powers[v];
    }
    terms.push_back(std::move(term));
  }
  return {{"degree", spec.degree},
          {"include_constant", spec.include_constant},
          {"with_input_derivatives", spec.with_input_derivatives},
          {"terms", std::move(terms)}};
}

json model_to_json(const ModelFile& file) {
  const SparseModel& m = file.model;
  m.check();
  const auto names = variable_names(m.spec, m.state_names(), m.input_names());
  json triplets = json::array();
  for (Index k = 0; k < m.Xi.cols(); ++k) {
    for (Index j = 0; j < m.Xi.rows(); ++j) {
      if (m.Xi(j, k) != 0.0) triplets.push_back({j, k, m.Xi(j, k)});
    }
  }
  json j;
  j["format_version"] = kModelFormatVersion;
  j["states"] = columns_to_json(m.states);
  j["inputs"] = columns_to_json(m.inputs);
  j["library"] = library_to_json(m.spec, names);
  j["coefficients"] = std::move(triplets);
  j["lambda"] = m.lambda;
  j["fit"] = fit_meta_to_json(m.fit);
  j["provenance"] = {{"config_hash", file.provenance.config_hash},
                     {"seed", file.provenance.seed},
                     {"tool_version", file.provenance.tool_version}};
  return j;
}

ModelFile model_from_json(const json& j) {
  require_keys(j, {"format_version", "states", "inputs", "library", "coefficients", "lambda", "fit", "provenance"},
               "model file");
  const int version = get<int>(j, "format_version", "model file");
  if (version != kModelFormatVersion) {
    throw SchemaError("unsupported model format_version " + std::to_string(version));
  }
  ModelFile file;
  SparseModel& m = file.model;
  m.states = columns_from_json(j.at("states"), "states");
  m.inputs = j.contains("inputs") ? columns_from_json(j.at("inputs"), "inputs") : std::vector<Column>{};

  const json& lib = j.at("library");
  require_keys(lib, {"degree", "include_constant", "with_input_derivatives", "terms"}, "library");
  m.spec = build_spec(static_cast<int>(m.states.size()), static_cast<int>(m.inputs.size()),
                      get<int>(lib, "degree", "library"), get<bool>(lib, "include_constant", "library"),
                      get<bool>(lib, "with_input_derivatives", "library"));
  const auto names = variable_names(m.spec, m.state_names(), m.input_names());
  const json& terms = lib.at("terms");
  if (!terms.is_array() || terms.size() != m.spec.terms.size()) {
    throw SchemaError("library term list does not match the declared degree and variables");
  }
  for (std::size_t t = 0; t < terms.size(); ++t) {
    std::vector<int> powers(names.size(), 0);
    if (!terms[t].is_object()) throw SchemaError("library terms must be {variable: power} objects");
    for (const auto& [var, power] : terms[t].items()) {
      const auto it = std::find(names.begin(), names.end(), var);
      if (it == names.end()) throw SchemaError("library term uses unknown variable '" + var + "'");
      powers[static_cast<std::size_t>(it - names.begin())] = power.get<int>();
    }
    if (powers != m.spec.terms[t].powers) throw SchemaError("library term " + std::to_string(t) + " is out of order");
  }

  m.Xi = MatrixXd::Zero(m.spec.size(), m.spec.n_states);
  for (const auto& tr : j.at("coefficients")) {
    if (!tr.is_array() || tr.size() != 3) throw SchemaError("coefficients must be [term, state, value] triplets");
    const Index term = tr[0].get<Index>();
    const Index state = tr[1].get<Index>();
    if (term < 0 || term >= m.spec.size() || state < 0 || state >= m.spec.n_states) {
      throw SchemaError("coefficient triplet index out of range");
    }
    m.Xi(term, state) = tr[2].get<double>();
  }
  m.lambda = get<double>(j, "lambda", "model file");
  if (j.contains("fit")) m.fit = fit_meta_from_json(j.at("fit"));
  if (j.contains("provenance")) {
    const json& p = j.at("provenance");
    require_keys(p, {"config_hash", "seed", "tool_version"}, "provenance");
    if (p.contains("config_hash")) file.provenance.config_hash = get<std::string>(p, "config_hash", "provenance");
    if (p.contains("seed")) file.provenance.seed = get<std::uint64_t>(p, "seed", "provenance");
    if (p.contains("tool_version")) file.provenance.tool_version = get<std::string>(p, "tool_version", "provenance");
  }
  m.check();
  return file;
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write model file " + path.string());
  out << model_to_json(file).dump(2) << '\n';
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

std::string render_equations(const SparseModel& model) {
  const auto names = variable_names(model.spec, model.state_names(), model.input_names());
  std::ostringstream out;
  for (Index k = 0; k < model.Xi.cols(); ++k) {
    out << 'd' << names[static_cast<std::size_t>(k)] << "/dt =";
    bool first = true;
    for (Index j = 0; j < model.Xi.rows(); ++j) {
      const double c = model.Xi(j, k);
      if (c == 0.0) continue;
      const auto& term = model.spec.terms[static_cast<std::size_t>(j)];
      const std::string mag = coefficient_text(std::abs(c));
      if (first) {
        out << ' ' << (c < 0 ? "-" : "") << mag;
      } else {
        out << (c < 0 ? " - " : " + ") << mag;
      }
      if (!term.is_constant()) out << ' ' << term_label(term, names);
      first = false;
    }
    if (first) out << " 0";
    out << '\n';
  }
  return out.str();
}

json fold_report_to_json(const FoldReport& r, const std::vector<std::string>& state_names) {
  json per = json::object();
  for (std::size_t i = 0; i < state_names.size(); ++i) {
    const Index ii = static_cast<Index>(i);
    per[state_names[i]] = number_or_null(ii < r.mae_per_state.size() ? r.mae_per_state(ii) : NAN);
  }
  json j = {{"fold", r.fold_index},
            {"lambda", r.lambda},
            {"refined", r.refined},
            {"degree", r.degree},
            {"with_input_derivatives", r.with_input_derivatives},
            {"nonzero_terms", r.nonzero_terms},
            {"mae_per_state", std::move(per)},
            {"mae_mean", number_or_null(r.mae_mean)},
            {"mae_x1", number_or_null(r.mae_x1)}};
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

json sweep_summary_json(const SweepReport& report, const std::vector<std::string>& state_names) {
  auto selection = [&](const Selection& s) {
    const FoldReport& cell = report.cells[s.cell];
    json j = fold_report_to_json(cell, state_names);
    if (cell.model) j["model"] = model_to_json({*cell.model, {}});
    return j;
  };
  json selected = json::array();
  for (const auto& s : report.selected) selected.push_back(selection(s));
  json j = {{"grid", report.grid},
            {"grid_points", report.grid.size()},
            {"includes_refined", report.includes_refined},
            {"cells", report.cells.size()},
            {"failed_cells", std::count_if(report.cells.begin(), report.cells.end(),
                                           [](const FoldReport& r) { return r.failed(); })},
            {"selected", std::move(selected)}};
  j["best"] = report.best ? selection(*report.best) : json(nullptr);
  return j;
}

}  // namespace sindykit
