#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace sindykit {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// How a column is combined when several raw samples fall in one bin.
enum class Aggregation { Sum, Mean };

struct Column {
  std::string name;
  std::string unit;
  Aggregation aggregation = Aggregation::Sum;

  bool operator==(const Column&) const = default;
};

/// Missing samples are stored as quiet NaN in raw (pre-clean) data.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

/// Sampled states X (m x n) and inputs U (m x q) on a strictly increasing
/// time grid t (m).
struct TimeSeriesData {
  VectorXd t;
  MatrixXd X;
  MatrixXd U;
  std::vector<Column> states;
  std::vector<Column> inputs;
  std::string time_name = "t";
  std::string time_unit;

  Index rows() const { return t.size(); }
  Index n_states() const { return X.cols(); }
  Index n_inputs() const { return U.cols(); }

  std::vector<std::string> state_names() const;
  std::vector<std::string> input_names() const;

  /// Throws ShapeError / DataError when the container invariants are broken.
  /// NaN entries are allowed here; see `require_clean`.
  void check() const;
  bool has_missing() const;
  /// check() plus "no non-finite entries".
  void require_clean() const;
};

/// Builds a series with default column names x1..xn and u1..uq.
TimeSeriesData make_series(VectorXd t, MatrixXd X, MatrixXd U = {});

/// Rows [begin, end).
TimeSeriesData slice_rows(const TimeSeriesData& data, Index begin, Index end);

/// Rows whose time lies in [t0, t1] (inclusive, with a small relative slack).
TimeSeriesData slice_time(const TimeSeriesData& data, double t0, double t1);

// ---------------------------------------------------------------------------
// CSV + schema

enum class ColumnRole { Time, State, Input, Ignore };

struct ColumnSpec {
  ColumnRole role = ColumnRole::Ignore;
  Aggregation aggregation = Aggregation::Sum;
  std::string unit;
};

/// Sidecar description of a CSV file: column name -> role (+ policy, unit).
/// JSON form: {"t": "time", "x1": {"role": "state", "policy": "mean", "unit": "kmol/h"}}.
struct Schema {
  std::map<std::string, ColumnSpec> columns;

  static Schema from_json(const nlohmann::json& j);
  static Schema load(const std::filesystem::path& path);
  /// Schema for a series' own columns, in its column order.
  static Schema for_series(const TimeSeriesData& data);
  nlohmann::json to_json() const;
};

/// Comma separated, header row, '.' decimal point, empty field = missing.
/// State and input column order follows the file's column order.
TimeSeriesData read_csv(std::istream& in, const Schema& schema);
TimeSeriesData load_csv(const std::filesystem::path& path, const Schema& schema);

/// Shortest round-trip decimal representation; missing values become empty
/// fields. Column order: time, states, inputs.
void write_csv(std::ostream& out, const TimeSeriesData& data);
void save_csv(const std::filesystem::path& path, const TimeSeriesData& data);

/// Shortest decimal string that parses back to exactly `v` ("nan", "inf" for
/// non-finite values).
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Cleaning and resampling

TimeSeriesData fill_missing_linear(const TimeSeriesData& data);

/// Bins of width `bin_width` tile [t_0, t_end]; bin k starts at t_0 + k*w.
/// Each column is summed or averaged according to its Aggregation.
TimeSeriesData resample_sum(const TimeSeriesData& data, double bin_width);

// ---------------------------------------------------------------------------
// Differentiation

enum class DiffScheme {
  /// Three-point central stencil on the (possibly non-uniform) grid with
  /// second-order one-sided stencils at both ends.
  Central,
  /// Same stencils, restarted at every row where an input changes value, so
  /// no stencil straddles a switch of a piecewise-constant forcing. A switch
  /// that would leave a one-row segment is ignored.
  SegmentedCentral,
};

struct DerivativeMatrix {
  MatrixXd values;
  DiffScheme scheme = DiffScheme::Central;
};

enum class DiffTarget { States, Inputs };

/// Column-wise derivative of `values` on grid `t`. `segment_starts` lists rows
/// that open a new smooth segment (row 0 is implicit). Every segment needs at
/// least three rows, except that two-row segments fall back to a first-order
/// difference.
MatrixXd differentiate_columns(const VectorXd& t, const MatrixXd& values,
                               const std::vector<Index>& segment_starts = {});

/// Rows i > 0 where any input column differs from row i-1.
std::vector<Index> input_switch_rows(const MatrixXd& U);

/// Segment starts used by SegmentedCentral: input switch rows, skipping any
/// that would leave a segment of a single row.
std::vector<Index> segment_starts(const TimeSeriesData& data);
/// Switch rows that segment_starts skipped. Their derivative comes from the
/// preceding input level, so regression leaves them out.
std::vector<Index> unsegmented_switch_rows(const TimeSeriesData& data);
DerivativeMatrix differentiate(const TimeSeriesData& data, DiffTarget which,
                               DiffScheme scheme = DiffScheme::Central);

}  // namespace sindykit
