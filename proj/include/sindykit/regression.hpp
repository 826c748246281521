#pragma once

#include "sindykit/dataset.hpp"
#include "sindykit/library.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sindykit {

struct FitMeta {
  /// Per state: STLSQ iterations run and the size of the active set after
  /// each thresholding pass.
  std::vector<int> iterations;
  std::vector<std::vector<int>> active_history;
  /// Per state: ||Theta xi_k - xdot_k||_2 of the final coefficients.
  std::vector<double> residual_norms;
  bool converged = true;
  double ridge = 0.0;
  Index samples = 0;
  DiffScheme diff_scheme = DiffScheme::Central;
  bool standardized = false;

  bool operator==(const FitMeta&) const = default;
};

/// Coefficients Xi (|terms| x n_states) bound to the library they index.
/// Column k holds the right-hand side of state k.
struct SparseModel {
  LibrarySpec spec;
  MatrixXd Xi;
  double lambda = 0.0;
  std::vector<Column> states;
  std::vector<Column> inputs;
  FitMeta fit;

  std::vector<std::string> state_names() const;
  std::vector<std::string> input_names() const;
  Index nonzero_count() const;
  bool is_zero() const { return nonzero_count() == 0; }
  /// Throws ShapeError when Xi or the name lists disagree with the spec.
  void check() const;

  bool operator==(const SparseModel&) const = default;
};

/// Library plus coefficients with default names x1..xn / u1..uq.
SparseModel make_model(LibrarySpec spec, MatrixXd xi, double lambda = 0.0);

/// Minimises ||Theta_a xi - xdot||^2 + ridge ||xi||^2 over the active columns.
/// Returns a full-length vector with exact zeros off the active set.
/// With ridge == 0 a rank-deficient active block throws ConditioningError.
VectorXd least_squares(const MatrixXd& theta, const VectorXd& xdot, const std::vector<bool>& active,
                       double ridge = 0.0);

/// 1e-12 * trace(Theta^T Theta) / T.
double default_ridge(const MatrixXd& theta);

struct StlsqOptions {
  int max_iter = 10;
  /// Unset: default_ridge(theta). Zero disables regularisation.
  std::optional<double> ridge;
  int threads = 1;
};

struct StlsqResult {
  MatrixXd Xi;
  FitMeta meta;
};

/// Sequentially thresholded least squares, one independent problem per
/// column of `xdot`. All-zero library columns never enter the active set.
StlsqResult stlsq(const MatrixXd& theta, const MatrixXd& xdot, double lambda, const StlsqOptions& options = {});

SparseModel stlsq(const LibrarySpec& spec, const MatrixXd& theta, const MatrixXd& xdot, double lambda,
                  const StlsqOptions& options = {});

struct FitOptions {
  StlsqOptions stlsq;
  DiffScheme diff_scheme = DiffScheme::Central;
  /// z-score states and inputs before fitting, then map the model back to raw
  /// units. The threshold then applies in standardised units.
  bool standardize = false;
};

/// Differentiates the states, builds U (or [U, dU/dt]) for the library,
/// evaluates Theta and runs STLSQ.
SparseModel fit_with_inputs(const TimeSeriesData& data, const LibrarySpec& spec, double lambda,
                            const FitOptions& options = {});

/// Same as fit_with_inputs on several disjoint windows: each window is
/// differentiated on its own and the regression rows are stacked.
SparseModel fit_segments(const std::vector<TimeSeriesData>& segments, const LibrarySpec& spec, double lambda,
                         const FitOptions& options = {});

struct ScaleRecord {
  VectorXd state_mean, state_sd;
  VectorXd input_mean, input_sd;
};

/// Sample mean and standard deviation (n - 1 denominator) per column.
ScaleRecord compute_scale(const std::vector<TimeSeriesData>& segments);
TimeSeriesData apply_scale(const TimeSeriesData& data, const ScaleRecord& scale);
std::pair<TimeSeriesData, ScaleRecord> standardize(const TimeSeriesData& data);

/// Re-expresses a model fitted on standardised data in raw units. Exact for
/// polynomial libraries; needs the constant term whenever a mean is nonzero.
SparseModel unscale_model(const SparseModel& model, const ScaleRecord& scale);

}  // namespace sindykit
