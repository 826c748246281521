#include "sindykit/validate.hpp"

#include "sindykit/errors.hpp"
#include "sindykit/parallel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace sindykit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

FoldReport failed_report(const SparseModel* model, Index n_states, const std::string& why) {
  FoldReport r;
  r.mae_per_state = VectorXd::Constant(n_states, kNaN);
  r.mae_mean = kNaN;
  r.mae_x1 = kNaN;
  r.failure = why;
  if (model) {
    r.nonzero_terms = model->nonzero_count();
    r.model = *model;
  }
  return r;
}

std::string format_cell(double v) { return std::isfinite(v) ? format_double(v) : std::string("NaN"); }

struct FoldWindows {
  std::vector<TimeSeriesData> train;
  TimeSeriesData validation;
};

FoldWindows windows_for(const TimeSeriesData& data, const Fold& fold) {
  FoldWindows w;
  // Pieces shorter than three rows cannot be differentiated and are dropped.
  if (fold.begin >= 3) w.train.push_back(slice_rows(data, 0, fold.begin));
  if (data.rows() - fold.end >= 3) w.train.push_back(slice_rows(data, fold.end, data.rows()));
  w.validation = slice_rows(data, fold.begin, fold.end);
  return w;
}

void stamp(FoldReport& r, int fold, double lambda, bool refined, const LibrarySpec& spec) {
  r.fold_index = fold;
  r.lambda = lambda;
  r.refined = refined;
  r.degree = spec.degree;
  r.with_input_derivatives = spec.with_input_derivatives;
}

// Raw report and, when asked, refined report for one (lambda, fold) cell.
std::pair<FoldReport, std::optional<FoldReport>> run_fold(const FoldWindows& w, int fold_index,
                                                          const LibrarySpec& spec, double lambda, bool with_refined,
                                                          const ValidationSettings& settings) {
  const Index n = spec.n_states;
  FoldReport raw;
  std::optional<FoldReport> refined;
  std::optional<SparseModel> fitted;

  if (w.train.empty()) {
    raw = failed_report(nullptr, n, "training complement too short to fit");
  } else {
    try {
      SparseModel m = fit_segments(w.train, spec, lambda, settings.fit);
      fitted = m;
      if (settings.post_fit) settings.post_fit(m, fold_index);
      raw = score_window(m, w.validation, settings.integ);
    } catch (const NumericalError& e) {
      raw = failed_report(nullptr, n, e.what());
    }
  }
  stamp(raw, fold_index, lambda, false, spec);

  if (with_refined) {
    FoldReport r;
    if (!fitted) {
      r = failed_report(nullptr, n, raw.failure);
    } else {
      try {
        SparseModel m = refine_detailed(*fitted, w.train, settings.refine).model;
        if (settings.post_fit) settings.post_fit(m, fold_index);
        r = score_window(m, w.validation, settings.integ);
      } catch (const NumericalError& e) {
        r = failed_report(&*fitted, n, e.what());
      }
    }
    stamp(r, fold_index, lambda, true, spec);
    refined = std::move(r);
  }
  return {std::move(raw), std::move(refined)};
}

std::optional<std::size_t> pick(const std::vector<FoldReport>& cells, std::size_t begin, std::size_t end) {
  std::optional<std::size_t> best;
  for (std::size_t i = begin; i < end; ++i) {
    if (cells[i].failed()) continue;
    if (!best || cells[i].mae_mean < cells[*best].mae_mean) best = i;
  }
  return best;
}

}  // namespace

std::vector<Fold> kfold_split(Index m, int k) {
  if (k < 2) throw ParameterError("k-fold split needs k >= 2, got " + std::to_string(k));
  if (m < k) throw ParameterError("cannot split " + std::to_string(m) + " samples into " + std::to_string(k) + " folds");
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  const Index base = m / k;
  const Index extra = m % k;
  Index at = 0;
  for (int f = 0; f < k; ++f) {
    Fold& fold = folds[static_cast<std::size_t>(f)];
    fold.begin = at;
    fold.end = at + base + (f < extra ? 1 : 0);
    at = fold.end;
    for (Index i = 0; i < m; ++i) {
      (i >= fold.begin && i < fold.end ? fold.validation : fold.train).push_back(i);
    }
  }
  return folds;
}

FoldReport score_window(const SparseModel& model, const TimeSeriesData& window, const IntegratorSettings& integ) {
  const Index n = model.spec.n_states;
  if (window.rows() < 2) throw ShapeError("a scoring window needs at least two samples");
  if (window.n_states() != n || window.n_inputs() != model.spec.n_inputs) {
    throw ShapeError("scoring window columns do not match the model");
  }
  FoldReport r;
  try {
    const MatrixXd X = integrate(model, window.X.row(0).transpose(), window, integ).X;
    r.mae_per_state = mae_per_variable(window.X, X);
  } catch (const NumericalError& e) {
    return failed_report(&model, n, e.what());
  }
  r.mae_mean = mae_mean(r.mae_per_state);
  r.mae_x1 = r.mae_per_state(0);
  if (r.failed()) r.failure = "non-finite trajectory";
  r.nonzero_terms = model.nonzero_count();
  r.degree = model.spec.degree;
  r.with_input_derivatives = model.spec.with_input_derivatives;
  r.lambda = model.lambda;
  r.model = model;
  return r;
}

FoldReport evaluate_on_test(const SparseModel& model, const TimeSeriesData& test, const IntegratorSettings& integ) {
  test.require_clean();
  FoldReport r = score_window(model, test, integ);
  r.fold_index = -1;
  return r;
}

std::vector<FoldReport> crossvalidate(const TimeSeriesData& data, const LibrarySpec& spec, double lambda, bool refine,
                                      const ValidationSettings& settings) {
  data.require_clean();
  if (data.n_states() != spec.n_states || data.n_inputs() != spec.n_inputs) {
    throw ShapeError("data columns do not match the library");
  }
  const auto folds = kfold_split(data.rows(), settings.folds);
  for (const auto& f : folds) {
    if (f.end - f.begin < 2) throw ParameterError("validation blocks need at least two samples");
  }
  std::vector<FoldReport> out(folds.size());
  parallel_for(static_cast<std::ptrdiff_t>(folds.size()), resolve_threads(settings.threads), [&](std::ptrdiff_t f) {
    const auto w = windows_for(data, folds[static_cast<std::size_t>(f)]);
    auto [raw, refined] = run_fold(w, static_cast<int>(f), spec, lambda, refine, settings);
    out[static_cast<std::size_t>(f)] = refine ? std::move(*refined) : std::move(raw);
  });
  return out;
}

std::vector<double> lambda_grid(double start, double stop, double step) {
  if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step)) {
    throw ParameterError("lambda grid bounds must be finite");
  }
  if (start < 0.0) throw ParameterError("lambda must be non-negative");
  if (stop < start) throw ParameterError("lambda grid needs start <= stop");
  if (!(step > 0.0)) {
    if (stop == start) return {start};
    throw ParameterError("lambda grid step must be positive");
  }
  const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = start + static_cast<double>(i) * step;
  return grid;
}

SweepReport sweep(const TimeSeriesData& data, const LibrarySpec& spec, const std::vector<double>& grid,
                  bool with_refined, const ValidationSettings& settings) {
  if (grid.empty()) throw ParameterError("lambda grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw ParameterError("lambda values must be non-negative");
    if (i > 0 && grid[i] < grid[i - 1]) throw ParameterError("lambda grid must be sorted");
  }
  data.require_clean();
  if (data.n_states() != spec.n_states || data.n_inputs() != spec.n_inputs) {
    throw ShapeError("data columns do not match the library");
  }
  const auto folds = kfold_split(data.rows(), settings.folds);
  for (const auto& f : folds) {
    if (f.end - f.begin < 2) throw ParameterError("validation blocks need at least two samples");
  }
  std::vector<FoldWindows> windows;
  windows.reserve(folds.size());
  for (const auto& f : folds) windows.push_back(windows_for(data, f));

  const std::size_t k = folds.size();
  const std::size_t variants = with_refined ? 2 : 1;
  SweepReport report;
  report.grid = grid;
  report.includes_refined = with_refined;
  report.cells.resize(grid.size() * variants * k);

  parallel_for(static_cast<std::ptrdiff_t>(grid.size() * k), resolve_threads(settings.threads), [&](std::ptrdiff_t job) {
    const std::size_t li = static_cast<std::size_t>(job) / k;
    const std::size_t f = static_cast<std::size_t>(job) % k;
    auto [raw, refined] = run_fold(windows[f], static_cast<int>(f), spec, grid[li], with_refined, settings);
    report.cells[(li * variants) * k + f] = std::move(raw);
    if (refined) report.cells[(li * variants + 1) * k + f] = std::move(*refined);
  });

  for (std::size_t li = 0; li < grid.size(); ++li) {
    for (std::size_t v = 0; v < variants; ++v) {
      const std::size_t begin = (li * variants + v) * k;
      if (const auto best = pick(report.cells, begin, begin + k)) {
        report.selected.push_back({grid[li], v == 1, *best});
      }
    }
  }
  for (const auto& s : report.selected) {
    if (!report.best || report.cells[s.cell].mae_mean < report.cells[report.best->cell].mae_mean) report.best = s;
  }
  return report;
}

std::string fold_reports_csv(const std::vector<FoldReport>& reports, const std::vector<std::string>& state_names) {
  std::ostringstream out;
  out << "lambda,fold,refined,degree,with_input_derivatives,nonzero";
  for (const auto& s : state_names) out << ",mae_" << s;
  out << ",mae_mean,mae_first_state\n";
  for (const auto& r : reports) {
    out << format_double(r.lambda) << ',' << r.fold_index << ',' << (r.refined ? 1 : 0) << ',' << r.degree << ','
        << (r.with_input_derivatives ? 1 : 0) << ',' << r.nonzero_terms;
    for (Index i = 0; i < static_cast<Index>(state_names.size()); ++i) {
      out << ',' << format_cell(i < r.mae_per_state.size() ? r.mae_per_state(i) : kNaN);
    }
    out << ',' << format_cell(r.mae_mean) << ',' << format_cell(r.mae_x1) << '\n';
  }
  return out.str();
}

std::string sweep_csv(const SweepReport& report, const std::vector<std::string>& state_names) {
  return fold_reports_csv(report.cells, state_names);
}

}  // namespace sindykit
