#pragma once

#include "sindykit/dataset.hpp"
#include "sindykit/regression.hpp"

#include <functional>
#include <span>

namespace sindykit {

enum class IntegratorMethod { Rk4, Rk45 };
enum class InputInterp { ZeroOrderHold, Linear };

struct IntegratorSettings {
  IntegratorMethod method = IntegratorMethod::Rk45;
  /// Fixed RK4 step. <= 0 means one step per sample interval.
  double step = 0.0;
  double rtol = 1e-6;
  double atol = 1e-9;
  InputInterp input_interp = InputInterp::Linear;
  /// Upper bound on adaptive steps; <= 0 means unbounded.
  double max_step = 0.0;
  double divergence_cap = 1e8;
  long max_steps = 5'000'000;

  void check() const;
};

/// dx = f(t, x, u). `u` holds the (interpolated) input vector at time t.
using OdeRhs =
    std::function<void(double t, std::span<const double> x, std::span<const double> u, std::span<double> dx)>;

/// Integrates from x0 at t(0) and returns the m x n states on the grid `t`.
/// Inputs are samples on the same grid; between samples they follow
/// settings.input_interp, and each sample interval is integrated on its own so
/// a zero-order-hold switch never falls inside a step.
MatrixXd integrate_rhs(const OdeRhs& rhs, const VectorXd& x0, const VectorXd& t, const MatrixXd& U,
                       const IntegratorSettings& settings);

/// Evaluates a SparseModel right-hand side with only the terms it uses.
class ModelRhs {
 public:
  explicit ModelRhs(const SparseModel& model);
  void operator()(std::span<const double> x, std::span<const double> u_aug, std::span<double> dx) const;
  int n_states() const { return n_states_; }

 private:
  struct Factor {
    int slot;  // index into [x, u_aug]
    int power;
  };
  struct Term {
    std::vector<Factor> factors;
    std::vector<std::pair<int, double>> coeffs;  // (state, coefficient)
  };
  int n_states_ = 0;
  int aug_width_ = 0;
  std::vector<Term> terms_;
};

/// Integrates `model` from x0 over the grid and inputs of `inputs` (its X is
/// ignored). Input derivatives, when the library uses them, are taken from
/// the sampled inputs with the central scheme. Returns the trajectory with
/// the same t and U and the model's state columns.
TimeSeriesData integrate(const SparseModel& model, const VectorXd& x0, const TimeSeriesData& inputs,
                         const IntegratorSettings& settings = {});

/// Input-free or pre-sampled convenience form.
TimeSeriesData integrate(const SparseModel& model, const VectorXd& x0, const VectorXd& t, const MatrixXd& U,
                         const IntegratorSettings& settings = {});

/// Uniform grid t0, t0 + dt, ..., t1 (count rounded to the nearest integer).
VectorXd uniform_grid(double t0, double t1, double dt);

}  // namespace sindykit
