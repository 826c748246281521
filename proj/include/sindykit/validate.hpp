#pragma once

#include "sindykit/refine.hpp"
#include "sindykit/regression.hpp"
#include "sindykit/simulate.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sindykit {

struct FoldReport {
  /// -1 for a single held-out test window.
  int fold_index = -1;
  double lambda = 0.0;
  bool refined = false;
  int degree = 1;
  bool with_input_derivatives = false;
  Index nonzero_terms = 0;
  VectorXd mae_per_state;
  /// NaN when any per-state entry is NaN (the failed-fold marker).
  double mae_mean = 0.0;
  double mae_x1 = 0.0;
  /// Diagnostic of the failure that produced the NaN marker, if any.
  std::string failure;
  std::optional<SparseModel> model;

  bool failed() const { return !std::isfinite(mae_mean); }
};

struct Fold {
  std::vector<Index> train;
  std::vector<Index> validation;
  /// Validation block is rows [begin, end).
  Index begin = 0;
  Index end = 0;
};

/// k contiguous validation blocks over rows 0..m-1; the first m mod k blocks
/// get one extra row. Throws ParameterError unless 2 <= k <= m.
std::vector<Fold> kfold_split(Index m, int k);

struct ValidationSettings {
  int folds = 5;
  FitOptions fit;
  RefineConfig refine;
  /// Integration used to score a fitted model over a validation window.
  IntegratorSettings integ;
  int threads = 1;
  /// Applied to every fitted (and refined) model before it is scored.
  std::function<void(SparseModel&, int fold)> post_fit;
};

/// Scores `model` by integrating it over `window` from its first row.
/// Numerical failures give the NaN marker instead of throwing.
FoldReport score_window(const SparseModel& model, const TimeSeriesData& window, const IntegratorSettings& integ);

/// Single-window scoring identical to a validation fold (fold_index -1).
FoldReport evaluate_on_test(const SparseModel& model, const TimeSeriesData& test,
                            const IntegratorSettings& integ = {});

/// One report per fold: fit on the training complement (two windows, each
/// differentiated separately), optionally refine on the same windows, then
/// score the validation block.
std::vector<FoldReport> crossvalidate(const TimeSeriesData& data, const LibrarySpec& spec, double lambda,
                                      bool refine, const ValidationSettings& settings = {});

struct Selection {
  double lambda = 0.0;
  bool refined = false;
  /// Position in SweepReport::cells.
  std::size_t cell = 0;
};

struct SweepReport {
  std::vector<double> grid;
  bool includes_refined = false;
  /// Ordered by lambda, then variant (raw before refined), then fold.
  std::vector<FoldReport> cells;
  /// Lowest finite mae_mean per (lambda, variant); empty when all folds failed.
  std::vector<Selection> selected;
  std::optional<Selection> best;
};

/// Inclusive START:STOP:STEP grid; the count is rounded so that 0:0.1:0.0025
/// yields exactly 41 points.
std::vector<double> lambda_grid(double start, double stop, double step);

/// crossvalidate at every grid point for the raw and (when `with_refined`)
/// refined variants. Ties in mae_mean go to the earliest cell.
SweepReport sweep(const TimeSeriesData& data, const LibrarySpec& spec, const std::vector<double>& grid,
                  bool with_refined, const ValidationSettings& settings = {});

/// One row per cell: lambda, fold, refined, degree, with_input_derivatives,
/// nonzero, mae_<state>..., mae_mean, mae_first_state. Failed values print as NaN.
std::string fold_reports_csv(const std::vector<FoldReport>& reports, const std::vector<std::string>& state_names);
std::string sweep_csv(const SweepReport& report, const std::vector<std::string>& state_names);

}  // namespace sindykit
