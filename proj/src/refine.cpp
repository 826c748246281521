#include "sindykit/refine.hpp"

#include "sindykit/errors.hpp"
#include "sindykit/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sindykit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Support {
  std::vector<std::pair<Index, Index>> cells;  // (term, state)
};

Support support_of(const SparseModel& model) {
  Support s;
  for (Index k = 0; k < model.Xi.cols(); ++k) {
    for (Index j = 0; j < model.Xi.rows(); ++j) {
      if (model.Xi(j, k) != 0.0) s.cells.emplace_back(j, k);
    }
  }
  return s;
}

VectorXd gather(const SparseModel& model, const Support& s) {
  VectorXd p(static_cast<Index>(s.cells.size()));
  for (std::size_t i = 0; i < s.cells.size(); ++i) p(static_cast<Index>(i)) = model.Xi(s.cells[i].first, s.cells[i].second);
  return p;
}

void scatter(SparseModel& model, const Support& s, const VectorXd& p) {
  for (std::size_t i = 0; i < s.cells.size(); ++i) model.Xi(s.cells[i].first, s.cells[i].second) = p(static_cast<Index>(i));
}

struct Trial {
  bool ok = false;
  double mae = kInf;
  double sse = kInf;
  VectorXd residual;
};

// Pools |x_model - x_data| over all windows; NaN per state when non-finite.
VectorXd pooled_mae(const std::vector<TimeSeriesData>& windows, const std::vector<MatrixXd>& traj) {
  const Index n = windows.front().n_states();
  VectorXd acc = VectorXd::Zero(n);
  Index rows = 0;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const VectorXd part = mae_per_variable(windows[w].X, traj[w]);
    acc += part * static_cast<double>(windows[w].rows());
    rows += windows[w].rows();
  }
  return acc / static_cast<double>(rows);
}

std::vector<MatrixXd> integrate_windows(const SparseModel& m, const std::vector<TimeSeriesData>& windows,
                                        const IntegratorSettings& integ) {
  std::vector<MatrixXd> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(integrate(m, w.X.row(0).transpose(), w, integ).X);
  return out;
}

class Problem {
 public:
  Problem(const SparseModel& model, const std::vector<TimeSeriesData>& windows, const RefineConfig& cfg)
      : base_(model), windows_(windows), cfg_(cfg), support_(support_of(model)) {}

  const Support& support() const { return support_; }

  Trial run(const VectorXd& p) const {
    SparseModel m = base_;
    scatter(m, support_, p);
    Trial out;
    std::vector<MatrixXd> traj;
    try {
      traj = integrate_windows(m, windows_, cfg_.integ);
    } catch (const NumericalError&) {
      out.mae = cfg_.penalty;
      return out;
    }
    const double mae = mae_mean(pooled_mae(windows_, traj));
    if (!std::isfinite(mae)) {
      out.mae = cfg_.penalty;
      return out;
    }
    Index total = 0;
    for (const auto& X : traj) total += X.size();
    out.residual.resize(total);
    Index at = 0;
    for (std::size_t w = 0; w < traj.size(); ++w) {
      const MatrixXd diff = traj[w] - windows_[w].X;
      out.residual.segment(at, diff.size()) = Eigen::Map<const VectorXd>(diff.data(), diff.size());
      at += diff.size();
    }
    out.sse = out.residual.squaredNorm();
    out.mae = mae;
    out.ok = true;
    return out;
  }

 private:
  SparseModel base_;
  const std::vector<TimeSeriesData>& windows_;
  const RefineConfig& cfg_;
  Support support_;
};

VectorXd clamp(const VectorXd& p, const Box& box) { return p.cwiseMax(box.lower).cwiseMin(box.upper); }

}  // namespace

VectorXd mae_per_variable(const MatrixXd& reference, const MatrixXd& model) {
  if (reference.rows() != model.rows() || reference.cols() != model.cols()) {
    throw ShapeError("MAE needs equally shaped trajectories");
  }
  if (reference.rows() == 0) throw ShapeError("MAE needs at least one sample");
  VectorXd out(reference.cols());
  for (Index k = 0; k < reference.cols(); ++k) {
    double acc = 0.0;
    bool finite = true;
    for (Index i = 0; i < reference.rows(); ++i) {
      const double d = std::abs(reference(i, k) - model(i, k));
      if (!std::isfinite(d)) {
        finite = false;
        break;
      }
      acc += d;
    }
    out(k) = finite ? acc / static_cast<double>(reference.rows()) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double mae_mean(const VectorXd& per_variable) {
  if (per_variable.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (Index k = 0; k < per_variable.size(); ++k) {
    if (!std::isfinite(per_variable(k))) return std::numeric_limits<double>::quiet_NaN();
    acc += per_variable(k);
  }
  return acc / static_cast<double>(per_variable.size());
}

void RefineConfig::check() const {
  if (!(bound_factor > 0.0) || !std::isfinite(bound_factor)) throw ParameterError("bound_factor must be positive");
  if (!(bound_floor >= 0.0) || !std::isfinite(bound_floor)) throw ParameterError("bound_floor must be >= 0");
  if (max_evals < 1) throw ParameterError("max_evals must be >= 1");
  if (max_iterations < 0) throw ParameterError("max_iterations must be >= 0");
  if (!(penalty > 0.0)) throw ParameterError("penalty must be positive");
  integ.check();
}

Box coefficient_box(const SparseModel& model, const RefineConfig& cfg) {
  const Support s = support_of(model);
  const VectorXd p = gather(model, s);
  Box box{VectorXd(p.size()), VectorXd(p.size())};
  for (Index i = 0; i < p.size(); ++i) {
    const double a = p(i) * (1.0 - cfg.bound_factor);
    const double b = p(i) * (1.0 + cfg.bound_factor);
    box.lower(i) = std::min(a, b) - cfg.bound_floor;
    box.upper(i) = std::max(a, b) + cfg.bound_floor;
  }
  return box;
}

double objective_mae(const SparseModel& model, const std::vector<TimeSeriesData>& windows,
                     const IntegratorSettings& integ, double penalty) {
  if (windows.empty()) throw ShapeError("objective needs at least one window");
  for (const auto& w : windows) {
    if (w.t.size() < 2) throw ShapeError("objective needs at least two samples per window");
    if (w.n_states() != model.spec.n_states) throw ShapeError("data and model disagree on the number of states");
  }
  try {
    const double mae = mae_mean(pooled_mae(windows, integrate_windows(model, windows, integ)));
    return std::isfinite(mae) ? mae : penalty;
  } catch (const NumericalError&) {
    return penalty;
  }
}

double objective_mae(const SparseModel& model, const TimeSeriesData& data, const IntegratorSettings& integ,
                     double penalty) {
  return objective_mae(model, std::vector<TimeSeriesData>{data}, integ, penalty);
}

RefineResult refine_detailed(const SparseModel& model, const std::vector<TimeSeriesData>& windows,
                             const RefineConfig& cfg) {
  cfg.check();
  model.check();
  if (windows.empty()) throw ShapeError("refinement needs at least one training window");
  for (const auto& w : windows) {
    if (w.t.size() < 2) throw ShapeError("refinement needs at least two samples per training window");
    if (w.n_states() != model.spec.n_states || w.n_inputs() != model.spec.n_inputs) {
      throw ShapeError("training data columns do not match the model");
    }
    w.require_clean();
  }

  const Problem problem(model, windows, cfg);
  const Box box = coefficient_box(model, cfg);
  const Index np = static_cast<Index>(problem.support().cells.size());
  const int threads = resolve_threads(cfg.threads);

  RefineResult result;
  result.model = model;

  VectorXd p = gather(model, problem.support());
  Trial cur = problem.run(p);
  result.evaluations = 1;
  if (!cur.ok) {
    try {
      integrate_windows(model, windows, cfg.integ);
    } catch (const NumericalError& e) {
      throw RefineError(std::string("starting model cannot be integrated over the training window: ") + e.what());
    }
    throw RefineError("starting model produces a non-finite trajectory over the training window");
  }
  result.initial_objective = cur.mae;
  if (np == 0) {
    result.objective = cur.mae;
    return result;
  }

  VectorXd best_p = p;
  double best_mae = cur.mae;
  auto consider = [&](const VectorXd& q, const Trial& t) {
    if (!t.ok) ++result.failed_evaluations;
    if ((q.array() == 0.0).any()) return;
    if (t.ok && t.mae < best_mae) {
      best_mae = t.mae;
      best_p = q;
    }
  };

  // Projected Levenberg-Marquardt on the trajectory residual.
  double mu = 1e-3;
  for (int it = 0; it < cfg.max_iterations && result.evaluations + 2 * np < cfg.max_evals; ++it) {
    if (cur.sse == 0.0) break;
    MatrixXd J(cur.residual.size(), np);
    std::vector<Trial> plus(static_cast<std::size_t>(np)), minus(static_cast<std::size_t>(np));
    std::vector<double> hp(static_cast<std::size_t>(np)), hm(static_cast<std::size_t>(np));
    for (Index i = 0; i < np; ++i) {
      const double h = 1e-6 * std::max(std::abs(p(i)), 1e-3);
      hp[static_cast<std::size_t>(i)] = std::min(h, box.upper(i) - p(i));
      hm[static_cast<std::size_t>(i)] = std::min(h, p(i) - box.lower(i));
    }
    parallel_for(2 * np, threads, [&](std::ptrdiff_t job) {
      const Index i = static_cast<Index>(job / 2);
      const auto iu = static_cast<std::size_t>(i);
      VectorXd q = p;
      if (job % 2 == 0) {
        if (hp[iu] <= 0.0) return;
        q(i) += hp[iu];
        plus[iu] = problem.run(q);
      } else {
        if (hm[iu] <= 0.0) return;
        q(i) -= hm[iu];
        minus[iu] = problem.run(q);
      }
    });
    result.evaluations += static_cast<int>(2 * np);
    bool usable = true;
    for (Index i = 0; i < np; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      const bool up = plus[iu].ok, dn = minus[iu].ok;
      if (up && dn) {
        J.col(i) = (plus[iu].residual - minus[iu].residual) / (hp[iu] + hm[iu]);
      } else if (up) {
        J.col(i) = (plus[iu].residual - cur.residual) / hp[iu];
      } else if (dn) {
        J.col(i) = (cur.residual - minus[iu].residual) / hm[iu];
      } else {
        usable = false;
        break;
      }
    }
    if (!usable) break;

    const MatrixXd A = J.transpose() * J;
    const VectorXd g = J.transpose() * cur.residual;
    std::vector<Index> free;
    for (Index i = 0; i < np; ++i) {
      const bool at_low = p(i) <= box.lower(i) && g(i) > 0.0;
      const bool at_high = p(i) >= box.upper(i) && g(i) < 0.0;
      if (!at_low && !at_high) free.push_back(i);
    }
    if (free.empty()) break;
    const auto nf = static_cast<Index>(free.size());
    MatrixXd Af(nf, nf);
    VectorXd gf(nf);
    for (Index a = 0; a < nf; ++a) {
      gf(a) = g(free[static_cast<std::size_t>(a)]);
      for (Index b = 0; b < nf; ++b) Af(a, b) = A(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
    }
    const VectorXd diag = Af.diagonal().cwiseMax(1e-300);
    bool improved = false;
    for (int attempt = 0; attempt < 12 && result.evaluations < cfg.max_evals; ++attempt) {
      MatrixXd M = Af;
      M.diagonal() += mu * diag;
      const VectorXd step = M.ldlt().solve(-gf);
      if (!step.allFinite()) {
        mu *= 10.0;
        continue;
      }
      VectorXd q = p;
      for (Index a = 0; a < nf; ++a) q(free[static_cast<std::size_t>(a)]) += step(a);
      q = clamp(q, box);
      if (q == p) break;
      const Trial t = problem.run(q);
      ++result.evaluations;
      consider(q, t);
      if (t.ok && t.sse < cur.sse) {
        const double gain = (cur.sse - t.sse) / cur.sse;
        p = q;
        cur = t;
        mu = std::max(mu / 3.0, 1e-12);
        improved = gain > 1e-12;
        break;
      }
      mu *= 4.0;
    }
    ++result.iterations;
    if (!improved) break;
  }

  // Compass search on the MAE itself from the best point found.
  VectorXd width = box.upper - box.lower;
  double scale = 1e-3;
  while (result.evaluations < cfg.max_evals && scale > 1e-9) {
    bool moved = false;
    for (Index i = 0; i < np && result.evaluations < cfg.max_evals; ++i) {
      for (const double dir : {1.0, -1.0}) {
        if (result.evaluations >= cfg.max_evals) break;
        VectorXd q = best_p;
        q(i) += dir * scale * width(i);
        q = clamp(q, box);
        if (q == best_p) continue;
        const Trial t = problem.run(q);
        ++result.evaluations;
        const double before = best_mae;
        consider(q, t);
        if (best_mae < before) {
          moved = true;
          break;
        }
      }
    }
    if (!moved) scale *= 0.5;
  }

  scatter(result.model, problem.support(), best_p);
  result.objective = best_mae;
  return result;
}

RefineResult refine_detailed(const SparseModel& model, const TimeSeriesData& train, const RefineConfig& cfg) {
  return refine_detailed(model, std::vector<TimeSeriesData>{train}, cfg);
}

SparseModel refine(const SparseModel& model, const TimeSeriesData& train, const RefineConfig& cfg) {
  return refine_detailed(model, train, cfg).model;
}

}  // namespace sindykit
