#include "sindykit/cli.hpp"

#include "sindykit/config.hpp"
#include "sindykit/errors.hpp"
#include "sindykit/excitation.hpp"
#include "sindykit/model_io.hpp"
#include "sindykit/reference.hpp"
#include "sindykit/refine.hpp"
#include "sindykit/simulate.hpp"
#include "sindykit/validate.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

namespace sindykit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> data, schema, model, inputs, out, name, x0, t_span, lambda_grid;
  std::optional<double> lambda, dt;
  std::optional<int> degree, threads;
  std::optional<std::uint64_t> seed;
  bool with_input_derivatives = false;
  bool refine = false;
};

std::vector<double> parse_numbers(const std::string& text, char sep, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse " + what + " '" + text + "'");
    }
  }
  return out;
}

RunConfig resolve_config(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig::defaults() : RunConfig::load(f.config);
  if (f.data) c.data = *f.data;
  if (f.schema) c.schema = *f.schema;
  if (f.model) c.model = *f.model;
  if (f.inputs) c.inputs = *f.inputs;
  if (f.out) c.out = *f.out;
  if (f.name) c.reference = *f.name;
  if (f.lambda) c.lambda = *f.lambda;
  if (f.degree) c.degree = *f.degree;
  if (f.threads) c.threads = *f.threads;
  if (f.seed) c.seed = *f.seed;
  if (f.dt) c.dt = *f.dt;
  if (f.with_input_derivatives) c.with_input_derivatives = true;
  if (f.refine) c.refine = true;
  if (f.lambda_grid) {
    const auto v = parse_numbers(*f.lambda_grid, ':', "--lambda-grid");
    if (v.size() != 3) throw ConfigError("--lambda-grid expects START:STOP:STEP");
    c.lambda_grid = {v[0], v[1], v[2]};
  }
  if (f.x0) c.x0 = parse_numbers(*f.x0, ',', "--x0");
  if (f.t_span) {
    const auto v = parse_numbers(*f.t_span, ':', "--t-span");
    if (v.size() != 2) throw ConfigError("--t-span expects T0:T1");
    c.t_span = std::make_pair(v[0], v[1]);
  }
  if (c.degree < 1) throw ParameterError("--degree must be >= 1");
  if (!(c.lambda >= 0.0)) throw ParameterError("--lambda must be non-negative");
  c.refine_cfg.threads = c.threads;
  return c;
}

class Output {
 public:
  Output(const RunConfig& cfg, std::string command) : cfg_(cfg), command_(std::move(command)), dir_(cfg.out) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& bytes) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
    out << bytes;
    files_.push_back({{"name", name}, {"fnv1a", fnv1a_hex(bytes)}, {"bytes", bytes.size()}});
  }

  void manifest() {
    json m = {{"command", command_},
              {"tool_version", kToolVersion},
              {"config_hash", cfg_.hash()},
              {"seed", cfg_.seed},
              {"config", cfg_.to_json()},
              {"files", files_}};
    m["config"].erase("threads");
    m["config"].erase("out");
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    if (!out) throw ConfigError("cannot write manifest");
    out << m.dump(2) << '\n';
  }

  const fs::path& dir() const { return dir_; }

 private:
  const RunConfig& cfg_;
  std::string command_;
  fs::path dir_;
  json files_ = json::array();
};

Provenance provenance_of(const RunConfig& cfg) { return {cfg.hash(), cfg.seed, kToolVersion}; }

TimeSeriesData load_data(const std::string& path, const std::string& schema, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " requires a data file (--data)");
  if (schema.empty()) throw ConfigError(std::string(what) + " requires a schema file (--schema)");
  if (!fs::exists(schema)) throw SchemaError("schema file " + schema + " does not exist");
  TimeSeriesData data = load_csv(path, Schema::load(schema));
  if (data.has_missing()) data = fill_missing_linear(data);
  return data;
}

std::string csv_of(const TimeSeriesData& data) {
  std::ostringstream out;
  write_csv(out, data);
  return out.str();
}

LibrarySpec spec_for(const RunConfig& c, const TimeSeriesData& data) {
  return build_spec(static_cast<int>(data.n_states()), static_cast<int>(data.n_inputs()), c.degree,
                    c.include_constant, c.with_input_derivatives);
}

void emit_model(Output& o, const ModelFile& file, std::ostream& out) {
  o.write("model.json", model_to_json(file).dump(2) + "\n");
  const std::string eq = render_equations(file.model);
  o.write("equations.txt", eq);
  out << eq;
}

int cmd_fit(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const TimeSeriesData data = load_data(c.data, c.schema, "fit");
  const LibrarySpec spec = spec_for(c, data);
  FitOptions fit = c.fit;
  fit.stlsq.threads = c.threads;
  SparseModel model = fit_with_inputs(data, spec, c.lambda, fit);
  json report = {{"lambda", c.lambda}, {"nonzero_terms", model.nonzero_count()}, {"samples", data.rows()}};
  if (c.refine && !model.is_zero()) {
    const RefineResult r = refine_detailed(model, data, c.refine_cfg);
    model = r.model;
    report["refine"] = {{"initial_objective", r.initial_objective},
                        {"objective", r.objective},
                        {"evaluations", r.evaluations},
                        {"iterations", r.iterations},
                        {"failed_evaluations", r.failed_evaluations}};
  }
  Output o(c, "fit");
  emit_model(o, {model, provenance_of(c)}, out);
  o.write("fit_report.json", report.dump(2) + "\n");
  o.manifest();
  if (model.is_zero()) {
    err << "warning: lambda = " << format_double(c.lambda)
        << " zeroed every coefficient; the model is dx/dt = 0 (decrease lambda)\n";
  }
  return kExitOk;
}

ValidationSettings validation_settings(const RunConfig& c) {
  ValidationSettings s;
  s.folds = c.folds;
  s.fit = c.fit;
  s.refine = c.refine_cfg;
  s.integ = c.integ;
  s.threads = c.threads;
  return s;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  const TimeSeriesData data = load_data(c.data, c.schema, "sweep");
  const LibrarySpec spec = spec_for(c, data);
  const auto grid = lambda_grid(c.lambda_grid.start, c.lambda_grid.stop, c.lambda_grid.step);
  const SweepReport report = sweep(data, spec, grid, c.refine, validation_settings(c));
  Output o(c, "sweep");
  const auto names = data.state_names();
  o.write("sweep.csv", sweep_csv(report, names));
  o.write("sweep_summary.json", sweep_summary_json(report, names).dump(2) + "\n");
  o.manifest();
  out << "evaluated " << grid.size() << " lambda values x " << c.folds << " folds";
  if (report.best) {
    const auto& b = report.cells[report.best->cell];
    out << "; best: lambda " << format_double(b.lambda) << (b.refined ? " (refined)" : "") << ", fold "
        << b.fold_index << ", mean MAE " << format_double(b.mae_mean);
  } else {
    out << "; every fold failed";
  }
  out << '\n';
  return kExitOk;
}

SparseModel model_for(const RunConfig& c) {
  if (!c.model.empty()) return load_model(c.model).model;
  return reference_by_name(c.reference).model;
}

TimeSeriesData input_series(const RunConfig& c, const SparseModel& model) {
  if (c.inputs.empty()) {
    if (model.spec.n_inputs > 0) throw ConfigError("the model has inputs; pass an inputs CSV (--inputs)");
    if (!c.t_span) throw ConfigError("an input-free simulation needs --t-span");
    TimeSeriesData d;
    d.t = uniform_grid(c.t_span->first, c.t_span->second, c.dt);
    d.X = MatrixXd(d.t.size(), 0);
    d.U = MatrixXd(d.t.size(), 0);
    return d;
  }
  // Time is the schema's time column (or the first column); the model's
  // inputs are read by name and everything else is ignored.
  std::string time_name;
  if (!c.schema.empty()) {
    for (const auto& [name, spec] : Schema::load(c.schema).columns) {
      if (spec.role == ColumnRole::Time) time_name = name;
    }
  } else {
    std::ifstream in(c.inputs);
    if (!in) throw DataError("cannot open inputs file " + c.inputs);
    std::string header;
    std::getline(in, header);
    time_name = header.substr(0, header.find(','));
    while (!time_name.empty() && (time_name.back() == '\r' || time_name.back() == ' ')) time_name.pop_back();
  }
  Schema schema;
  schema.columns[time_name] = {ColumnRole::Time, Aggregation::Sum, ""};
  for (const auto& col : model.inputs) schema.columns[col.name] = {ColumnRole::Input, col.aggregation, col.unit};
  TimeSeriesData d = load_csv(c.inputs, schema);
  if (d.has_missing()) d = fill_missing_linear(d);
  const auto names = d.input_names();
  const auto wanted = model.input_names();
  TimeSeriesData r;
  r.t = d.t;
  r.X = MatrixXd(d.rows(), 0);
  r.U.resize(d.rows(), static_cast<Index>(wanted.size()));
  for (std::size_t j = 0; j < wanted.size(); ++j) {
    const auto it = std::find(names.begin(), names.end(), wanted[j]);
    r.U.col(static_cast<Index>(j)) = d.U.col(it - names.begin());
  }
  r.inputs = model.inputs;
  r.time_name = d.time_name;
  r.time_unit = d.time_unit;
  if (c.t_span) r = slice_time(r, c.t_span->first, c.t_span->second);
  return r;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const SparseModel model = model_for(c);
  const TimeSeriesData inputs = input_series(c, model);
  VectorXd x0 = VectorXd::Zero(model.spec.n_states);
  if (!c.x0.empty()) {
    if (static_cast<Index>(c.x0.size()) != model.spec.n_states) {
      throw ConfigError("--x0 has " + std::to_string(c.x0.size()) + " entries, the model has " +
                        std::to_string(model.spec.n_states) + " states");
    }
    x0 = Eigen::Map<const VectorXd>(c.x0.data(), model.spec.n_states);
  }
  const TimeSeriesData traj = integrate(model, x0, inputs, c.integ);
  Output o(c, "simulate");
  o.write("trajectory.csv", csv_of(traj));
  o.manifest();
  out << "wrote " << traj.rows() << " samples to " << (o.dir() / "trajectory.csv").string() << '\n';
  return kExitOk;
}

int cmd_excite(const RunConfig& c, std::ostream& out) {
  const VectorXd t = uniform_grid(c.excitation.t0, c.excitation.t1, c.excitation.dt);
  const auto signals = c.excitation_signals();
  if (signals.empty()) throw ConfigError("excitation.signals is empty");
  const TimeSeriesData series = excitation_series(signals, t);
  Output o(c, "excite");
  o.write("inputs.csv", csv_of(series));
  o.manifest();
  out << "wrote " << series.rows() << " samples of " << signals.size() << " signal(s) to "
      << (o.dir() / "inputs.csv").string() << '\n';
  return kExitOk;
}

int cmd_validate(const RunConfig& c, std::ostream& out) {
  if (c.model.empty()) throw ConfigError("validate requires a model file (--model)");
  const ModelFile file = load_model(c.model);
  const std::string data_path = c.test_data.empty() ? c.data : c.test_data;
  const TimeSeriesData test = load_data(data_path, c.schema, "validate");
  const FoldReport r = evaluate_on_test(file.model, test, c.integ);
  Output o(c, "validate");
  o.write("validation.csv", fold_reports_csv({r}, test.state_names()));
  o.manifest();
  out << "mean MAE " << (r.failed() ? std::string("NaN") : format_double(r.mae_mean));
  if (r.failed()) out << " (" << r.failure << ")";
  out << '\n';
  return kExitOk;
}

int cmd_reference(const RunConfig& c, std::ostream& out) {
  const ReferenceSystem ref = reference_by_name(c.reference);
  Output o(c, "reference");
  emit_model(o, {ref.model, provenance_of(c)}, out);
  o.manifest();
  return kExitOk;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration");
  sub->add_option("--data", f.data, "time-series CSV");
  sub->add_option("--schema", f.schema, "column schema JSON");
  sub->add_option("--lambda", f.lambda, "sparsity threshold");
  sub->add_option("--lambda-grid", f.lambda_grid, "START:STOP:STEP");
  sub->add_option("--degree", f.degree, "polynomial degree");
  sub->add_flag("--with-input-derivatives", f.with_input_derivatives, "add input time-derivatives to the library");
  sub->add_flag("--refine", f.refine, "refine coefficients against trajectory error");
  sub->add_option("--seed", f.seed, "run seed");
  sub->add_option("--threads", f.threads, "worker cap (default: SINDYKIT_THREADS or all cores)");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--model", f.model, "model JSON file");
  sub->add_option("--inputs", f.inputs, "input CSV");
  sub->add_option("--x0", f.x0, "initial state, comma separated");
  sub->add_option("--t-span", f.t_span, "T0:T1");
  sub->add_option("--dt", f.dt, "output step for input-free simulation");
  sub->add_option("--name", f.name, "reference system name");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse identification of forced dynamical systems"};
  app.name("sindykit");
  app.require_subcommand(1);
  Flags f;
  std::string command;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"fit", "fit a sparse model to a data file"},
      {"sweep", "k-fold cross-validation over a lambda grid"},
      {"simulate", "integrate a model under recorded inputs"},
      {"excite", "generate excitation signals"},
      {"validate", "score a model on held-out data"},
      {"reference", "export a built-in reference model"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, f);
    if (std::string(name) == "reference") sub->add_option("reference", f.name, "reference system name");
    sub->callback([&command, n = std::string(name)] { command = n; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const RunConfig c = resolve_config(f);
    if (command == "fit") return cmd_fit(c, out, err);
    if (command == "sweep") return cmd_sweep(c, out);
    if (command == "simulate") return cmd_simulate(c, out);
    if (command == "excite") return cmd_excite(c, out);
    if (command == "validate") return cmd_validate(c, out);
    if (command == "reference") return cmd_reference(c, out);
    err << "error: unknown command\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace sindykit
