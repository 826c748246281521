#include "sindykit/dataset.hpp"

#include "sindykit/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sindykit {

namespace {

std::vector<Column> default_columns(const std::string& prefix, Index count) {
  std::vector<Column> cols;
  cols.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) cols.push_back({prefix + std::to_string(i + 1), "", Aggregation::Sum});
  return cols;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t line_no, const std::string& column) {
  const std::string s = trim(raw);
  if (s.empty()) return kMissing;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ", column '" + column + "': cannot parse '" + s + "'");
  }
  return v;
}

void append_number(std::string& out, double v) {
  if (is_missing(v)) return;
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

ColumnRole parse_role(const std::string& s, const std::string& column) {
  if (s == "time") return ColumnRole::Time;
  if (s == "state") return ColumnRole::State;
  if (s == "input") return ColumnRole::Input;
  if (s == "ignore") return ColumnRole::Ignore;
  throw SchemaError("column '" + column + "': unknown role '" + s + "'");
}

Aggregation parse_policy(const std::string& s, const std::string& column) {
  if (s == "sum") return Aggregation::Sum;
  if (s == "mean") return Aggregation::Mean;
  throw SchemaError("column '" + column + "': unknown policy '" + s + "'");
}

const char* role_name(ColumnRole r) {
  switch (r) {
    case ColumnRole::Time: return "time";
    case ColumnRole::State: return "state";
    case ColumnRole::Input: return "input";
    case ColumnRole::Ignore: return "ignore";
  }
  return "ignore";
}

}  // namespace

std::vector<std::string> TimeSeriesData::state_names() const {
  std::vector<std::string> names;
  for (const auto& c : states) names.push_back(c.name);
  return names;
}

std::vector<std::string> TimeSeriesData::input_names() const {
  std::vector<std::string> names;
  for (const auto& c : inputs) names.push_back(c.name);
  return names;
}

void TimeSeriesData::check() const {
  const Index m = t.size();
  if (m < 2) throw DataError("time series needs at least 2 samples, got " + std::to_string(m));
  if (X.rows() != m || U.rows() != m) {
    throw ShapeError("time series rows disagree: t=" + std::to_string(m) + " X=" + std::to_string(X.rows()) +
                     " U=" + std::to_string(U.rows()));
  }
  if (static_cast<Index>(states.size()) != X.cols() || static_cast<Index>(inputs.size()) != U.cols()) {
    throw ShapeError("column metadata does not match matrix widths");
  }
  for (Index i = 0; i < m; ++i) {
    if (!std::isfinite(t(i))) throw DataError("non-finite time at row " + std::to_string(i));
    if (i > 0 && !(t(i) > t(i - 1))) {
      throw DataError("time is not strictly increasing at row " + std::to_string(i));
    }
  }
}

bool TimeSeriesData::has_missing() const { return X.hasNaN() || U.hasNaN(); }

void TimeSeriesData::require_clean() const {
  check();
  if (!X.allFinite() || !U.allFinite()) throw DataError("time series contains missing or non-finite values");
}

TimeSeriesData make_series(VectorXd t, MatrixXd X, MatrixXd U) {
  TimeSeriesData d;
  const Index m = t.size();
  if (U.size() == 0) U.resize(m, 0);
  d.states = default_columns("x", X.cols());
  d.inputs = default_columns("u", U.cols());
  d.t = std::move(t);
  d.X = std::move(X);
  d.U = std::move(U);
  return d;
}

TimeSeriesData slice_rows(const TimeSeriesData& data, Index begin, Index end) {
  if (begin < 0 || end > data.rows() || begin >= end) {
    throw ParameterError("invalid row range [" + std::to_string(begin) + ", " + std::to_string(end) + ")");
  }
  TimeSeriesData out = data;
  const Index n = end - begin;
  out.t = data.t.segment(begin, n);
  out.X = data.X.middleRows(begin, n);
  out.U = data.U.middleRows(begin, n);
  return out;
}

TimeSeriesData slice_time(const TimeSeriesData& data, double t0, double t1) {
  const double slack = 1e-9 * std::max({1.0, std::abs(t0), std::abs(t1)});
  Index begin = 0;
  while (begin < data.rows() && data.t(begin) < t0 - slack) ++begin;
  Index end = begin;
  while (end < data.rows() && data.t(end) <= t1 + slack) ++end;
  return slice_rows(data, begin, end);
}

// ---------------------------------------------------------------------------

Schema Schema::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("schema must be a JSON object");
  Schema s;
  for (const auto& [name, value] : j.items()) {
    ColumnSpec spec;
    if (value.is_string()) {
      spec.role = parse_role(value.get<std::string>(), name);
    } else if (value.is_object()) {
      for (const auto& [key, field] : value.items()) {
        if (key != "role" && key != "policy" && key != "unit") {
          throw SchemaError("column '" + name + "': unknown key '" + key + "'");
        }
        if (!field.is_string()) throw SchemaError("column '" + name + "': '" + key + "' must be a string");
      }
      if (!value.contains("role")) throw SchemaError("column '" + name + "' has no role");
      spec.role = parse_role(value["role"].get<std::string>(), name);
      if (value.contains("policy")) spec.aggregation = parse_policy(value["policy"].get<std::string>(), name);
      if (value.contains("unit")) spec.unit = value["unit"].get<std::string>();
    } else {
      throw SchemaError("column '" + name + "': expected a role string or an object");
    }
    s.columns.emplace(name, std::move(spec));
  }
  const auto count = [&](ColumnRole r) {
    return std::count_if(s.columns.begin(), s.columns.end(), [r](const auto& kv) { return kv.second.role == r; });
  };
  if (count(ColumnRole::Time) != 1) throw SchemaError("schema must name exactly one time column");
  if (count(ColumnRole::State) < 1) throw SchemaError("schema must name at least one state column");
  return s;
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

Schema Schema::for_series(const TimeSeriesData& data) {
  Schema s;
  s.columns[data.time_name] = {ColumnRole::Time, Aggregation::Sum, data.time_unit};
  for (const auto& c : data.states) s.columns[c.name] = {ColumnRole::State, c.aggregation, c.unit};
  for (const auto& c : data.inputs) s.columns[c.name] = {ColumnRole::Input, c.aggregation, c.unit};
  return s;
}

nlohmann::json Schema::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, spec] : columns) {
    nlohmann::json c = {{"role", role_name(spec.role)}};
    if (spec.role == ColumnRole::State || spec.role == ColumnRole::Input) {
      c["policy"] = spec.aggregation == Aggregation::Sum ? "sum" : "mean";
    }
    if (!spec.unit.empty()) c["unit"] = spec.unit;
    j[name] = c;
  }
  return j;
}

TimeSeriesData read_csv(std::istream& in, const Schema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV is empty (header row required)");
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trim(h);

  for (const auto& [name, spec] : schema.columns) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw SchemaError("column '" + name + "' named in schema is missing from the CSV header");
    }
  }

  Index time_col = -1;
  std::vector<Index> state_cols;
  std::vector<Index> input_cols;
  TimeSeriesData data;
  for (Index c = 0; c < static_cast<Index>(header.size()); ++c) {
    const auto it = schema.columns.find(header[static_cast<std::size_t>(c)]);
    if (it == schema.columns.end()) continue;
    const ColumnSpec& spec = it->second;
    const Column col{it->first, spec.unit, spec.aggregation};
    switch (spec.role) {
      case ColumnRole::Time:
        time_col = c;
        data.time_name = it->first;
        data.time_unit = spec.unit;
        break;
      case ColumnRole::State:
        state_cols.push_back(c);
        data.states.push_back(col);
        break;
      case ColumnRole::Input:
        input_cols.push_back(c);
        data.inputs.push_back(col);
        break;
      case ColumnRole::Ignore:
        break;
    }
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(1 + state_cols.size() + input_cols.size());
    const auto cell = [&](Index c) {
      return parse_cell(fields[static_cast<std::size_t>(c)], line_no, header[static_cast<std::size_t>(c)]);
    };
    row.push_back(cell(time_col));
    if (is_missing(row.front())) throw DataError("line " + std::to_string(line_no) + ": missing time value");
    for (Index c : state_cols) row.push_back(cell(c));
    for (Index c : input_cols) row.push_back(cell(c));
    rows.push_back(std::move(row));
  }

  const Index m = static_cast<Index>(rows.size());
  const Index n = static_cast<Index>(state_cols.size());
  const Index q = static_cast<Index>(input_cols.size());
  data.t.resize(m);
  data.X.resize(m, n);
  data.U.resize(m, q);
  for (Index i = 0; i < m; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    data.t(i) = r[0];
    for (Index k = 0; k < n; ++k) data.X(i, k) = r[static_cast<std::size_t>(1 + k)];
    for (Index k = 0; k < q; ++k) data.U(i, k) = r[static_cast<std::size_t>(1 + n + k)];
  }
  data.check();
  return data;
}

TimeSeriesData load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path.string());
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const TimeSeriesData& data) {
  std::string buf = data.time_name;
  for (const auto& c : data.states) buf += "," + c.name;
  for (const auto& c : data.inputs) buf += "," + c.name;
  buf += '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    append_number(buf, data.t(i));
    for (Index k = 0; k < data.n_states(); ++k) {
      buf += ',';
      append_number(buf, data.X(i, k));
    }
    for (Index k = 0; k < data.n_inputs(); ++k) {
      buf += ',';
      append_number(buf, data.U(i, k));
    }
    buf += '\n';
  }
  out << buf;
}

void save_csv(const std::filesystem::path& path, const TimeSeriesData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(out, data);
}

// ---------------------------------------------------------------------------

namespace {

void fill_column(const VectorXd& t, Eigen::Ref<VectorXd> col, const std::string& name) {
  const Index m = col.size();
  if (m == 0) return;
  if (is_missing(col(0)) || is_missing(col(m - 1))) {
    throw EndpointError("column '" + name + "' is missing its first or last sample; refusing to extrapolate");
  }
  Index prev = 0;
  for (Index i = 1; i < m; ++i) {
    if (is_missing(col(i))) continue;
    for (Index j = prev + 1; j < i; ++j) {
      const double w = (t(j) - t(prev)) / (t(i) - t(prev));
      col(j) = col(prev) + w * (col(i) - col(prev));
    }
    prev = i;
  }
}

}  // namespace

TimeSeriesData fill_missing_linear(const TimeSeriesData& data) {
  data.check();
  TimeSeriesData out = data;
  for (Index k = 0; k < out.n_states(); ++k) {
    VectorXd col = out.X.col(k);
    fill_column(out.t, col, out.states[static_cast<std::size_t>(k)].name);
    out.X.col(k) = col;
  }
  for (Index k = 0; k < out.n_inputs(); ++k) {
    VectorXd col = out.U.col(k);
    fill_column(out.t, col, out.inputs[static_cast<std::size_t>(k)].name);
    out.U.col(k) = col;
  }
  return out;
}

TimeSeriesData resample_sum(const TimeSeriesData& data, double bin_width) {
  data.check();
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw ParameterError("bin width must be positive");
  const double t0 = data.t(0);
  // Samples sitting on a bin edge up to round-off belong to the bin they open.
  const auto bin_of = [&](double t) {
    return static_cast<Index>(std::floor((t - t0) / bin_width + 1e-9));
  };
  const Index bins = bin_of(data.t(data.rows() - 1)) + 1;

  std::vector<Index> counts(static_cast<std::size_t>(bins), 0);
  MatrixXd xs = MatrixXd::Zero(bins, data.n_states());
  MatrixXd us = MatrixXd::Zero(bins, data.n_inputs());
  for (Index i = 0; i < data.rows(); ++i) {
    const Index b = bin_of(data.t(i));
    ++counts[static_cast<std::size_t>(b)];
    xs.row(b) += data.X.row(i);
    us.row(b) += data.U.row(i);
  }
  for (Index b = 0; b < bins; ++b) {
    const Index c = counts[static_cast<std::size_t>(b)];
    if (c == 0) {
      throw DataError("resampling bin starting at t=" + std::to_string(t0 + static_cast<double>(b) * bin_width) +
                      " is empty; interpolate the raw data first");
    }
    for (Index k = 0; k < data.n_states(); ++k) {
      if (data.states[static_cast<std::size_t>(k)].aggregation == Aggregation::Mean) xs(b, k) /= static_cast<double>(c);
    }
    for (Index k = 0; k < data.n_inputs(); ++k) {
      if (data.inputs[static_cast<std::size_t>(k)].aggregation == Aggregation::Mean) us(b, k) /= static_cast<double>(c);
    }
  }

  TimeSeriesData out = data;
  out.t.resize(bins);
  for (Index b = 0; b < bins; ++b) out.t(b) = t0 + static_cast<double>(b) * bin_width;
  out.X = std::move(xs);
  out.U = std::move(us);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Differentiates rows [b, e) of `values` into `out` using only samples inside
// the segment.
void differentiate_segment(const VectorXd& t, const MatrixXd& values, Index b, Index e, MatrixXd& out) {
  const Index len = e - b;
  if (len == 2) {
    const auto slope = ((values.row(b + 1) - values.row(b)) / (t(b + 1) - t(b))).eval();
    out.row(b) = slope;
    out.row(b + 1) = slope;
    return;
  }
  for (Index i = b + 1; i + 1 < e; ++i) {
    const double h1 = t(i) - t(i - 1);
    const double h2 = t(i + 1) - t(i);
    const double cm = -h2 / (h1 * (h1 + h2));
    const double c0 = (h2 - h1) / (h1 * h2);
    const double cp = h1 / (h2 * (h1 + h2));
    out.row(i) = cm * values.row(i - 1) + c0 * values.row(i) + cp * values.row(i + 1);
  }
  {
    const double h1 = t(b + 1) - t(b);
    const double h2 = t(b + 2) - t(b + 1);
    const double c0 = -(2.0 * h1 + h2) / (h1 * (h1 + h2));
    const double c1 = (h1 + h2) / (h1 * h2);
    const double c2 = -h1 / (h2 * (h1 + h2));
    out.row(b) = c0 * values.row(b) + c1 * values.row(b + 1) + c2 * values.row(b + 2);
  }
  {
    const Index l = e - 1;
    const double h1 = t(l - 1) - t(l - 2);
    const double h2 = t(l) - t(l - 1);
    const double c0 = h2 / (h1 * (h1 + h2));
    const double c1 = -(h1 + h2) / (h1 * h2);
    const double c2 = (h1 + 2.0 * h2) / (h2 * (h1 + h2));
    out.row(l) = c0 * values.row(l - 2) + c1 * values.row(l - 1) + c2 * values.row(l);
  }
}

}  // namespace

MatrixXd differentiate_columns(const VectorXd& t, const MatrixXd& values, const std::vector<Index>& segment_starts) {
  const Index m = t.size();
  if (values.rows() != m) throw ShapeError("derivative input rows do not match the time grid");
  if (m < 3) throw DataError("central differences need at least 3 samples, got " + std::to_string(m));

  std::vector<Index> starts{0};
  for (Index s : segment_starts) {
    if (s <= 0 || s >= m) continue;
    if (s > starts.back()) starts.push_back(s);
  }
  starts.push_back(m);

  MatrixXd out(m, values.cols());
  for (std::size_t k = 0; k + 1 < starts.size(); ++k) {
    const Index b = starts[k];
    const Index e = starts[k + 1];
    if (e - b < 2) {
      throw DataError("segment starting at row " + std::to_string(b) + " has a single sample; cannot differentiate");
    }
    differentiate_segment(t, values, b, e, out);
  }
  return out;
}

std::vector<Index> input_switch_rows(const MatrixXd& U) {
  std::vector<Index> rows;
  for (Index i = 1; i < U.rows(); ++i) {
    if ((U.row(i).array() != U.row(i - 1).array()).any()) rows.push_back(i);
  }
  return rows;
}

std::vector<Index> segment_starts(const TimeSeriesData& data) {
  std::vector<Index> starts;
  Index prev = 0;
  for (Index s : input_switch_rows(data.U)) {
    if (s - prev >= 2 && data.rows() - s >= 2) {
      starts.push_back(s);
      prev = s;
    }
  }
  return starts;
}

std::vector<Index> unsegmented_switch_rows(const TimeSeriesData& data) {
  const std::vector<Index> starts = segment_starts(data);
  std::vector<Index> out;
  for (Index s : input_switch_rows(data.U)) {
    if (!std::binary_search(starts.begin(), starts.end(), s)) out.push_back(s);
  }
  return out;
}

DerivativeMatrix differentiate(const TimeSeriesData& data, DiffTarget which, DiffScheme scheme) {
  data.check();
  const MatrixXd& values = which == DiffTarget::States ? data.X : data.U;
  if (!values.allFinite()) throw DataError("cannot differentiate data with missing or non-finite values");
  std::vector<Index> starts;
  if (scheme == DiffScheme::SegmentedCentral) starts = segment_starts(data);
  return {differentiate_columns(data.t, values, starts), scheme};
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace sindykit
