#pragma once

#include "sindykit/regression.hpp"
#include "sindykit/simulate.hpp"

#include <vector>

namespace sindykit {

/// Mean absolute error between two state matrices, one entry per column.
/// Columns containing a non-finite value report NaN.
VectorXd mae_per_variable(const MatrixXd& reference, const MatrixXd& model);

/// Mean of the per-variable errors; NaN as soon as one entry is NaN.
double mae_mean(const VectorXd& per_variable);

struct RefineConfig {
  /// Each nonzero c may move within [c (1 - f) - floor, c (1 + f) + floor]
  /// (endpoints swapped for negative c).
  double bound_factor = 0.5;
  double bound_floor = 1e-3;
  int max_evals = 20000;
  /// Levenberg-Marquardt outer iterations before the direct-search polish.
  int max_iterations = 300;
  IntegratorSettings integ = [] {
    IntegratorSettings s;
    s.method = IntegratorMethod::Rk4;
    return s;
  }();
  double penalty = 1e6;
  int threads = 1;

  void check() const;
};

struct Box {
  VectorXd lower, upper;
};

/// Boxes for the nonzero coefficients of `model`, in column-major order of Xi.
Box coefficient_box(const SparseModel& model, const RefineConfig& cfg);

/// Integrates `model` from the first row of `data` with the data's inputs and
/// returns the mean over states of the per-state MAE. Integration failure or
/// a non-finite trajectory yields `penalty`.
double objective_mae(const SparseModel& model, const TimeSeriesData& data, const IntegratorSettings& integ,
                     double penalty = 1e6);

/// Several disjoint windows, each integrated from its own first row; the
/// per-state MAE pools the samples of all windows.
double objective_mae(const SparseModel& model, const std::vector<TimeSeriesData>& windows,
                     const IntegratorSettings& integ, double penalty = 1e6);

struct RefineResult {
  SparseModel model;
  double initial_objective = 0.0;
  double objective = 0.0;
  int evaluations = 0;
  int iterations = 0;
  int failed_evaluations = 0;
};

/// Bounded local optimisation of the nonzero coefficients against the
/// integrated-trajectory MAE on `train`. The support never changes and the
/// returned objective never exceeds the starting one.
RefineResult refine_detailed(const SparseModel& model, const std::vector<TimeSeriesData>& windows,
                             const RefineConfig& cfg = {});
RefineResult refine_detailed(const SparseModel& model, const TimeSeriesData& train, const RefineConfig& cfg = {});
SparseModel refine(const SparseModel& model, const TimeSeriesData& train, const RefineConfig& cfg = {});

}  // namespace sindykit
