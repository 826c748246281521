#include "sindykit/simulate.hpp"

#include "sindykit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sindykit {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0, kA53 = 64448.0 / 6561.0,
                 kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0, kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                 kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0, kB5 = -2187.0 / 6784.0,
                 kB6 = 11.0 / 84.0;
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0, kE4 = 71.0 / 1920.0, kE5 = -17253.0 / 339200.0,
                 kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;
constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0, kC5 = 8.0 / 9.0;

using Vec = std::vector<double>;

class Stepper {
 public:
  Stepper(const OdeRhs& rhs, const MatrixXd& U, const VectorXd& t, const IntegratorSettings& s, std::size_t n)
      : rhs_(rhs), U_(U), t_(t), s_(s), n_(n), q_(static_cast<std::size_t>(U.cols())), u_(q_) {
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &x5_}) v->assign(n, 0.0);
  }

  void set_segment(Index i) {
    seg_ = i;
    t0_ = t_(i);
    t1_ = t_(i + 1);
  }

  void eval(double tau, const Vec& x, Vec& dx) {
    if (q_ > 0) {
      if (s_.input_interp == InputInterp::ZeroOrderHold) {
        for (std::size_t j = 0; j < q_; ++j) u_[j] = U_(seg_, static_cast<Index>(j));
      } else {
        const double w = (tau - t0_) / (t1_ - t0_);
        for (std::size_t j = 0; j < q_; ++j) {
          const double a = U_(seg_, static_cast<Index>(j));
          const double b = U_(seg_ + 1, static_cast<Index>(j));
          u_[j] = a + w * (b - a);
        }
      }
    }
    rhs_(tau, x, u_, dx);
  }

  void rk4(double tau, double h, Vec& x) {
    eval(tau, x, k1_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + 0.5 * h * k1_[i];
    eval(tau + 0.5 * h, tmp_, k2_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + 0.5 * h * k2_[i];
    eval(tau + 0.5 * h, tmp_, k3_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * k3_[i];
    eval(tau + h, tmp_, k4_);
    for (std::size_t i = 0; i < n_; ++i) x[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

  // One Dormand-Prince attempt; returns the scaled error norm (inf when the
  // trial state is non-finite). The candidate lands in x5_.
  double dp45(double tau, double h, const Vec& x) {
    eval(tau, x, k1_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * kA21 * k1_[i];
    eval(tau + kC2 * h, tmp_, k2_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * (kA31 * k1_[i] + kA32 * k2_[i]);
    eval(tau + kC3 * h, tmp_, k3_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * (kA41 * k1_[i] + kA42 * k2_[i] + kA43 * k3_[i]);
    eval(tau + kC4 * h, tmp_, k4_);
    for (std::size_t i = 0; i < n_; ++i) {
      tmp_[i] = x[i] + h * (kA51 * k1_[i] + kA52 * k2_[i] + kA53 * k3_[i] + kA54 * k4_[i]);
    }
    eval(tau + kC5 * h, tmp_, k5_);
    for (std::size_t i = 0; i < n_; ++i) {
      tmp_[i] = x[i] + h * (kA61 * k1_[i] + kA62 * k2_[i] + kA63 * k3_[i] + kA64 * k4_[i] + kA65 * k5_[i]);
    }
    eval(tau + h, tmp_, k6_);
    for (std::size_t i = 0; i < n_; ++i) {
      x5_[i] = x[i] + h * (kB1 * k1_[i] + kB3 * k3_[i] + kB4 * k4_[i] + kB5 * k5_[i] + kB6 * k6_[i]);
    }
    eval(tau + h, x5_, k7_);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!std::isfinite(x5_[i])) return std::numeric_limits<double>::infinity();
      const double e =
          h * (kE1 * k1_[i] + kE3 * k3_[i] + kE4 * k4_[i] + kE5 * k5_[i] + kE6 * k6_[i] + kE7 * k7_[i]);
      const double scale = s_.atol + s_.rtol * std::max(std::abs(x[i]), std::abs(x5_[i]));
      acc += (e / scale) * (e / scale);
    }
    const double err = std::sqrt(acc / static_cast<double>(std::max<std::size_t>(n_, 1)));
    return std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
  }

  const Vec& candidate() const { return x5_; }

 private:
  const OdeRhs& rhs_;
  const MatrixXd& U_;
  const VectorXd& t_;
  const IntegratorSettings& s_;
  std::size_t n_, q_;
  Vec u_;
  Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, x5_;
  Index seg_ = 0;
  double t0_ = 0.0, t1_ = 0.0;
};

void guard(const Vec& x, double cap, double tau) {
  for (double v : x) {
    if (!std::isfinite(v) || std::abs(v) > cap) {
      throw DivergenceError("trajectory left the divergence guard (|x| > " + std::to_string(cap) +
                                ") at t=" + std::to_string(tau),
                            tau);
    }
  }
}

}  // namespace

void IntegratorSettings::check() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) throw ParameterError("integrator tolerances must be positive");
  if (!(divergence_cap > 0.0)) throw ParameterError("divergence cap must be positive");
  if (!std::isfinite(step) || !std::isfinite(max_step)) throw ParameterError("integrator step must be finite");
  if (max_steps < 1) throw ParameterError("max_steps must be >= 1");
}

MatrixXd integrate_rhs(const OdeRhs& rhs, const VectorXd& x0, const VectorXd& t, const MatrixXd& U,
                       const IntegratorSettings& settings) {
  settings.check();
  const Index m = t.size();
  const std::size_t n = static_cast<std::size_t>(x0.size());
  if (m < 1) throw DataError("integration grid is empty");
  if (U.rows() != m) throw ShapeError("input samples do not match the integration grid");
  if (!x0.allFinite()) throw DataError("initial state is not finite");
  if (!U.allFinite()) throw DataError("inputs contain missing or non-finite values");
  for (Index i = 1; i < m; ++i) {
    if (!(t(i) > t(i - 1))) throw DataError("integration grid is not strictly increasing");
  }

  MatrixXd out(m, x0.size());
  Vec x(x0.data(), x0.data() + x0.size());
  out.row(0) = x0.transpose();
  guard(x, settings.divergence_cap, t(0));

  Stepper stepper(rhs, U, t, settings, n);
  double h_next = m > 1 ? t(1) - t(0) : 0.0;
  long steps = 0;

  for (Index i = 0; i + 1 < m; ++i) {
    stepper.set_segment(i);
    const double t0 = t(i);
    const double t1 = t(i + 1);
    const double len = t1 - t0;
    if (settings.method == IntegratorMethod::Rk4) {
      const long sub = settings.step > 0.0 ? std::max(1L, static_cast<long>(std::ceil(len / settings.step - 1e-9))) : 1L;
      const double h = len / static_cast<double>(sub);
      for (long s = 0; s < sub; ++s) {
        const double tau = t0 + static_cast<double>(s) * h;
        stepper.rk4(tau, h, x);
        guard(x, settings.divergence_cap, tau + h);
      }
    } else {
      double tau = t0;
      while (tau < t1) {
        double h = std::min(h_next, t1 - tau);
        if (settings.max_step > 0.0) h = std::min(h, settings.max_step);
        const bool last = h >= t1 - tau;
        const double err = stepper.dp45(tau, h, x);
        if (++steps > settings.max_steps) {
          throw StiffnessError("adaptive integrator exceeded its step budget at t=" + std::to_string(tau), tau);
        }
        if (err <= 1.0) {
          x = stepper.candidate();
          tau = last ? t1 : tau + h;
          guard(x, settings.divergence_cap, tau);
          const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
          // Keep the unclipped proposal when the step was shortened to land on t1.
          h_next = last ? std::max(h_next, h * grow) : h * grow;
        } else {
          const double shrink = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.25)) : 0.2;
          h_next = h * shrink;
          if (h_next < 1e-13 * std::max(1.0, std::abs(tau))) {
            throw StiffnessError("adaptive step size underflow at t=" + std::to_string(tau), tau);
          }
        }
      }
    }
    out.row(i + 1) = Eigen::Map<const VectorXd>(x.data(), static_cast<Index>(n)).transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------

ModelRhs::ModelRhs(const SparseModel& model) : n_states_(model.spec.n_states), aug_width_(model.spec.augmented_width()) {
  model.check();
  const LibrarySpec& spec = model.spec;
  for (Index j = 0; j < spec.size(); ++j) {
    Term term;
    for (int k = 0; k < spec.n_states; ++k) {
      const double c = model.Xi(j, k);
      if (c != 0.0) term.coeffs.emplace_back(k, c);
    }
    if (term.coeffs.empty()) continue;
    const auto& powers = spec.terms[static_cast<std::size_t>(j)].powers;
    for (std::size_t v = 0; v < powers.size(); ++v) {
      if (powers[v] == 0) continue;
      const Variable& var = spec.variables[v];
      int slot = var.index;
      if (var.kind == VariableKind::Input) slot = spec.n_states + var.index;
      if (var.kind == VariableKind::InputDerivative) slot = spec.n_states + spec.n_inputs + var.index;
      term.factors.push_back({slot, powers[v]});
    }
    terms_.push_back(std::move(term));
  }
}

void ModelRhs::operator()(std::span<const double> x, std::span<const double> u_aug, std::span<double> dx) const {
  std::fill(dx.begin(), dx.end(), 0.0);
  for (const Term& term : terms_) {
    double value = 1.0;
    for (const Factor& f : term.factors) {
      const double base = f.slot < n_states_ ? x[static_cast<std::size_t>(f.slot)]
                                             : u_aug[static_cast<std::size_t>(f.slot - n_states_)];
      for (int p = 0; p < f.power; ++p) value *= base;
    }
    for (const auto& [k, c] : term.coeffs) dx[static_cast<std::size_t>(k)] += c * value;
  }
}

TimeSeriesData integrate(const SparseModel& model, const VectorXd& x0, const TimeSeriesData& inputs,
                         const IntegratorSettings& settings) {
  model.check();
  if (x0.size() != model.spec.n_states) {
    throw ShapeError("initial state has " + std::to_string(x0.size()) + " entries, model has " +
                     std::to_string(model.spec.n_states) + " states");
  }
  if (inputs.n_inputs() != model.spec.n_inputs) {
    throw ShapeError("model expects " + std::to_string(model.spec.n_inputs) + " inputs, got " +
                     std::to_string(inputs.n_inputs()));
  }
  if (inputs.t.size() != inputs.U.rows()) throw ShapeError("input samples do not match their time grid");

  MatrixXd u_aug = inputs.U;
  if (model.spec.with_input_derivatives) {
    const MatrixXd du = differentiate_columns(inputs.t, inputs.U);
    u_aug.resize(inputs.U.rows(), 2 * inputs.U.cols());
    u_aug << inputs.U, du;
  }

  const ModelRhs f(model);
  const OdeRhs rhs = [&f](double, std::span<const double> x, std::span<const double> u, std::span<double> dx) {
    f(x, u, dx);
  };

  TimeSeriesData out;
  out.t = inputs.t;
  out.U = inputs.U;
  out.inputs = inputs.inputs;
  if (out.inputs.size() != static_cast<std::size_t>(out.U.cols())) out.inputs = model.inputs;
  out.time_name = inputs.time_name;
  out.time_unit = inputs.time_unit;
  out.states = model.states;
  out.X = integrate_rhs(rhs, x0, inputs.t, u_aug, settings);
  return out;
}

TimeSeriesData integrate(const SparseModel& model, const VectorXd& x0, const VectorXd& t, const MatrixXd& U,
                         const IntegratorSettings& settings) {
  TimeSeriesData inputs;
  inputs.t = t;
  inputs.U = U.size() == 0 ? MatrixXd(t.size(), 0) : U;
  inputs.inputs = model.inputs;
  return integrate(model, x0, inputs, settings);
}

VectorXd uniform_grid(double t0, double t1, double dt) {
  if (!(dt > 0.0) || !(t1 > t0)) throw ParameterError("grid needs t1 > t0 and dt > 0");
  const Index count = static_cast<Index>(std::llround((t1 - t0) / dt)) + 1;
  VectorXd t(count);
  for (Index i = 0; i < count; ++i) t(i) = t0 + static_cast<double>(i) * dt;
  return t;
}

}  // namespace sindykit
