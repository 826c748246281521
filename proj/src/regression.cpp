#include "sindykit/regression.hpp"

#include "sindykit/errors.hpp"
#include "sindykit/parallel.hpp"

#include <cmath>
#include <map>

namespace sindykit {

namespace {

std::vector<Column> named_columns(const std::string& prefix, int count) {
  std::vector<Column> cols;
  for (int i = 0; i < count; ++i) cols.push_back({prefix + std::to_string(i + 1), "", Aggregation::Sum});
  return cols;
}

struct ColumnFit {
  VectorXd xi;
  int iterations = 0;
  std::vector<int> history;
  bool converged = true;
};

ColumnFit stlsq_column(const MatrixXd& theta, const VectorXd& xdot, double lambda, int max_iter, double ridge,
                       const std::vector<bool>& usable) {
  ColumnFit out;
  std::vector<bool> active = usable;
  for (;;) {
    out.xi = least_squares(theta, xdot, active, ridge);
    ++out.iterations;
    std::vector<bool> next(active.size());
    int count = 0;
    for (std::size_t j = 0; j < active.size(); ++j) {
      next[j] = active[j] && std::abs(out.xi(static_cast<Index>(j))) >= lambda;
      count += next[j] ? 1 : 0;
    }
    out.history.push_back(count);
    if (next == active) break;
    if (out.iterations >= max_iter) {
      for (std::size_t j = 0; j < next.size(); ++j) {
        if (!next[j]) out.xi(static_cast<Index>(j)) = 0.0;
      }
      out.converged = false;
      break;
    }
    active = std::move(next);
  }
  return out;
}

struct Polynomial {
  std::map<std::vector<int>, double> coeffs;
};

// p(y) * (a * y_v + b)
void multiply_affine(Polynomial& p, std::size_t v, double a, double b) {
  Polynomial out;
  for (const auto& [powers, c] : p.coeffs) {
    if (b != 0.0) out.coeffs[powers] += c * b;
    auto raised = powers;
    ++raised[v];
    out.coeffs[raised] += c * a;
  }
  p = std::move(out);
}

}  // namespace

std::vector<std::string> SparseModel::state_names() const {
  std::vector<std::string> names;
  for (const auto& c : states) names.push_back(c.name);
  return names;
}

std::vector<std::string> SparseModel::input_names() const {
  std::vector<std::string> names;
  for (const auto& c : inputs) names.push_back(c.name);
  return names;
}

Index SparseModel::nonzero_count() const { return (Xi.array() != 0.0).count(); }

void SparseModel::check() const {
  if (Xi.rows() != spec.size() || Xi.cols() != spec.n_states) {
    throw ShapeError("coefficient matrix is " + std::to_string(Xi.rows()) + "x" + std::to_string(Xi.cols()) +
                     ", library needs " + std::to_string(spec.size()) + "x" + std::to_string(spec.n_states));
  }
  if (static_cast<int>(states.size()) != spec.n_states || static_cast<int>(inputs.size()) != spec.n_inputs) {
    throw ShapeError("model name lists do not match the library");
  }
}

SparseModel make_model(LibrarySpec spec, MatrixXd xi, double lambda) {
  SparseModel m;
  m.states = named_columns("x", spec.n_states);
  m.inputs = named_columns("u", spec.n_inputs);
  m.spec = std::move(spec);
  m.Xi = std::move(xi);
  m.lambda = lambda;
  m.check();
  return m;
}

VectorXd least_squares(const MatrixXd& theta, const VectorXd& xdot, const std::vector<bool>& active, double ridge) {
  const Index T = theta.cols();
  if (static_cast<Index>(active.size()) != T) throw ShapeError("active mask length differs from library width");
  if (xdot.size() != theta.rows()) throw ShapeError("derivative length differs from library rows");
  if (ridge < 0.0 || !std::isfinite(ridge)) throw ParameterError("ridge must be a finite non-negative number");

  std::vector<Index> idx;
  for (Index j = 0; j < T; ++j) {
    if (active[static_cast<std::size_t>(j)]) idx.push_back(j);
  }
  VectorXd full = VectorXd::Zero(T);
  const Index k = static_cast<Index>(idx.size());
  if (k == 0) return full;
  const Index m = theta.rows();
  if (ridge == 0.0 && m < k) {
    throw ConditioningError("least squares has " + std::to_string(m) + " rows for " + std::to_string(k) +
                            " active terms; use ridge > 0");
  }

  const Index extra = ridge > 0.0 ? k : 0;
  MatrixXd a = MatrixXd::Zero(m + extra, k);
  for (Index c = 0; c < k; ++c) a.col(c).head(m) = theta.col(idx[static_cast<std::size_t>(c)]);
  VectorXd b = VectorXd::Zero(m + extra);
  b.head(m) = xdot;

  VectorXd sol;
  if (ridge > 0.0) {
    a.bottomRows(k).diagonal().setConstant(std::sqrt(ridge));
    sol = a.householderQr().solve(b);
  } else {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(a);
    if (qr.rank() < k) {
      throw ConditioningError("active library columns are rank deficient (rank " + std::to_string(qr.rank()) +
                              " of " + std::to_string(k) + "); use ridge > 0");
    }
    sol = qr.solve(b);
  }
  for (Index c = 0; c < k; ++c) full(idx[static_cast<std::size_t>(c)]) = sol(c);
  return full;
}

double default_ridge(const MatrixXd& theta) {
  if (theta.cols() == 0) return 0.0;
  return 1e-12 * theta.squaredNorm() / static_cast<double>(theta.cols());
}

StlsqResult stlsq(const MatrixXd& theta, const MatrixXd& xdot, double lambda, const StlsqOptions& options) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be a finite number >= 0");
  if (options.max_iter < 1) throw ParameterError("max_iter must be >= 1");
  if (theta.rows() != xdot.rows()) {
    throw ShapeError("library has " + std::to_string(theta.rows()) + " rows, derivatives have " +
                     std::to_string(xdot.rows()));
  }
  if (!theta.allFinite() || !xdot.allFinite()) throw DataError("non-finite values in the regression problem");

  const double ridge = options.ridge.value_or(default_ridge(theta));
  std::vector<bool> usable(static_cast<std::size_t>(theta.cols()));
  for (Index j = 0; j < theta.cols(); ++j) usable[static_cast<std::size_t>(j)] = theta.col(j).squaredNorm() > 0.0;

  const Index n = xdot.cols();
  std::vector<ColumnFit> fits(static_cast<std::size_t>(n));
  parallel_for(n, options.threads, [&](std::ptrdiff_t k) {
    fits[static_cast<std::size_t>(k)] = stlsq_column(theta, xdot.col(k), lambda, options.max_iter, ridge, usable);
  });

  StlsqResult res;
  res.Xi.resize(theta.cols(), n);
  res.meta.ridge = ridge;
  res.meta.samples = theta.rows();
  for (Index k = 0; k < n; ++k) {
    auto& f = fits[static_cast<std::size_t>(k)];
    res.Xi.col(k) = f.xi;
    res.meta.iterations.push_back(f.iterations);
    res.meta.active_history.push_back(std::move(f.history));
    res.meta.residual_norms.push_back((theta * f.xi - xdot.col(k)).norm());
    res.meta.converged = res.meta.converged && f.converged;
  }
  return res;
}

SparseModel stlsq(const LibrarySpec& spec, const MatrixXd& theta, const MatrixXd& xdot, double lambda,
                  const StlsqOptions& options) {
  if (theta.cols() != spec.size()) throw ShapeError("library matrix width differs from the library spec");
  if (xdot.cols() != spec.n_states) throw ShapeError("derivative matrix width differs from the state count");
  StlsqResult res = stlsq(theta, xdot, lambda, options);
  SparseModel model = make_model(spec, std::move(res.Xi), lambda);
  model.fit = std::move(res.meta);
  return model;
}

// ---------------------------------------------------------------------------

ScaleRecord compute_scale(const std::vector<TimeSeriesData>& segments) {
  if (segments.empty()) throw ParameterError("no data to standardize");
  const Index n = segments.front().n_states();
  const Index q = segments.front().n_inputs();
  Index m = 0;
  VectorXd sx = VectorXd::Zero(n), su = VectorXd::Zero(q);
  for (const auto& s : segments) {
    s.require_clean();
    if (s.n_states() != n || s.n_inputs() != q) throw ShapeError("segments disagree on column counts");
    sx += s.X.colwise().sum().transpose();
    su += s.U.colwise().sum().transpose();
    m += s.rows();
  }
  ScaleRecord r;
  r.state_mean = sx / static_cast<double>(m);
  r.input_mean = su / static_cast<double>(m);
  VectorXd vx = VectorXd::Zero(n), vu = VectorXd::Zero(q);
  for (const auto& s : segments) {
    vx += (s.X.rowwise() - r.state_mean.transpose()).colwise().squaredNorm().transpose();
    vu += (s.U.rowwise() - r.input_mean.transpose()).colwise().squaredNorm().transpose();
  }
  r.state_sd = (vx / static_cast<double>(m - 1)).cwiseSqrt();
  r.input_sd = (vu / static_cast<double>(m - 1)).cwiseSqrt();
  const auto& first = segments.front();
  for (Index k = 0; k < n; ++k) {
    if (!(r.state_sd(k) > 0.0)) throw ScalingError("state column '" + first.states[static_cast<std::size_t>(k)].name + "' has zero variance");
  }
  for (Index k = 0; k < q; ++k) {
    if (!(r.input_sd(k) > 0.0)) throw ScalingError("input column '" + first.inputs[static_cast<std::size_t>(k)].name + "' has zero variance");
  }
  return r;
}

TimeSeriesData apply_scale(const TimeSeriesData& data, const ScaleRecord& scale) {
  TimeSeriesData out = data;
  out.X = ((data.X.rowwise() - scale.state_mean.transpose()).array().rowwise() / scale.state_sd.transpose().array())
              .matrix();
  out.U = ((data.U.rowwise() - scale.input_mean.transpose()).array().rowwise() / scale.input_sd.transpose().array())
              .matrix();
  return out;
}

std::pair<TimeSeriesData, ScaleRecord> standardize(const TimeSeriesData& data) {
  ScaleRecord r = compute_scale({data});
  return {apply_scale(data, r), std::move(r)};
}

SparseModel unscale_model(const SparseModel& model, const ScaleRecord& scale) {
  model.check();
  const LibrarySpec& spec = model.spec;
  if (scale.state_mean.size() != spec.n_states || scale.input_mean.size() != spec.n_inputs) {
    throw ShapeError("scale record does not match the model's columns");
  }
  std::map<std::vector<int>, Index> term_index;
  for (Index j = 0; j < spec.size(); ++j) term_index[spec.terms[static_cast<std::size_t>(j)].powers] = j;

  // Scaled variable z_v = a_v * y_v + b_v in terms of the raw variable y_v.
  const std::size_t p = spec.variables.size();
  std::vector<double> a(p), b(p);
  for (std::size_t v = 0; v < p; ++v) {
    const Variable& var = spec.variables[v];
    switch (var.kind) {
      case VariableKind::State:
        a[v] = 1.0 / scale.state_sd(var.index);
        b[v] = -scale.state_mean(var.index) / scale.state_sd(var.index);
        break;
      case VariableKind::Input:
        a[v] = 1.0 / scale.input_sd(var.index);
        b[v] = -scale.input_mean(var.index) / scale.input_sd(var.index);
        break;
      case VariableKind::InputDerivative:
        a[v] = 1.0 / scale.input_sd(var.index);
        b[v] = 0.0;
        break;
    }
  }

  SparseModel out = model;
  out.Xi.setZero();
  for (Index j = 0; j < spec.size(); ++j) {
    if ((model.Xi.row(j).array() == 0.0).all()) continue;
    Polynomial poly;
    poly.coeffs[std::vector<int>(p, 0)] = 1.0;
    const auto& powers = spec.terms[static_cast<std::size_t>(j)].powers;
    for (std::size_t v = 0; v < p; ++v) {
      for (int e = 0; e < powers[v]; ++e) multiply_affine(poly, v, a[v], b[v]);
    }
    for (const auto& [raw_powers, c] : poly.coeffs) {
      if (c == 0.0) continue;
      const auto it = term_index.find(raw_powers);
      if (it == term_index.end()) {
        throw ScalingError("unscaling needs a term the library lacks (add the constant term)");
      }
      out.Xi.row(it->second) += c * model.Xi.row(j);
    }
  }
  for (Index k = 0; k < spec.n_states; ++k) out.Xi.col(k) *= scale.state_sd(k);
  out.fit.standardized = true;
  return out;
}

// ---------------------------------------------------------------------------

SparseModel fit_segments(const std::vector<TimeSeriesData>& segments, const LibrarySpec& spec, double lambda,
                         const FitOptions& options) {
  if (segments.empty()) throw ParameterError("no data to fit");
  for (const auto& s : segments) {
    s.require_clean();
    if (s.n_states() != spec.n_states || s.n_inputs() != spec.n_inputs) {
      throw ShapeError("data has " + std::to_string(s.n_states()) + " states / " + std::to_string(s.n_inputs()) +
                       " inputs, library expects " + std::to_string(spec.n_states) + " / " +
                       std::to_string(spec.n_inputs));
    }
  }

  if (options.standardize) {
    const ScaleRecord scale = compute_scale(segments);
    std::vector<TimeSeriesData> scaled;
    for (const auto& s : segments) scaled.push_back(apply_scale(s, scale));
    FitOptions inner = options;
    inner.standardize = false;
    SparseModel m = fit_segments(scaled, spec, lambda, inner);
    m = unscale_model(m, scale);
    m.states = segments.front().states;
    m.inputs = segments.front().inputs;
    return m;
  }

  std::vector<std::vector<Index>> keep;
  Index rows = 0;
  for (const auto& s : segments) {
    std::vector<bool> use(static_cast<std::size_t>(s.rows()), true);
    if (options.diff_scheme == DiffScheme::SegmentedCentral) {
      for (Index r : unsegmented_switch_rows(s)) use[static_cast<std::size_t>(r)] = false;
    }
    std::vector<Index> k;
    for (Index r = 0; r < s.rows(); ++r) {
      if (use[static_cast<std::size_t>(r)]) k.push_back(r);
    }
    rows += static_cast<Index>(k.size());
    keep.push_back(std::move(k));
  }
  MatrixXd theta(rows, spec.size());
  MatrixXd xdot(rows, spec.n_states);
  Index at = 0;
  for (std::size_t w = 0; w < segments.size(); ++w) {
    const auto& s = segments[w];
    const MatrixXd d = differentiate(s, DiffTarget::States, options.diff_scheme).values;
    const AugmentedInputs u = augment_inputs(s, spec.with_input_derivatives, options.diff_scheme);
    const MatrixXd th = evaluate(spec, s.X, u);
    for (Index r : keep[w]) {
      theta.row(at) = th.row(r);
      xdot.row(at) = d.row(r);
      ++at;
    }
  }

  SparseModel m = stlsq(spec, theta, xdot, lambda, options.stlsq);
  m.states = segments.front().states;
  m.inputs = segments.front().inputs;
  m.fit.diff_scheme = options.diff_scheme;
  return m;
}

SparseModel fit_with_inputs(const TimeSeriesData& data, const LibrarySpec& spec, double lambda,
                            const FitOptions& options) {
  return fit_segments({data}, spec, lambda, options);
}

}  // namespace sindykit
