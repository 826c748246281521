#pragma once

#include "sindykit/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sindykit {

enum class ExcitationKind {
  /// Two-level maximal-length sequence mapped onto {low, high}.
  Prbs,
  /// Maximal-length sequence over GF(q) mapped onto q equispaced levels.
  Multilevel,
  /// PRBS switching instants with a fresh uniform amplitude at each switch.
  RandomAmplitudePrbs,
};

/// Piecewise-constant pseudo-random excitation. The feedback polynomial is
/// x^r + c[r-1] x^(r-1) + ... + c[0] over GF(q); `polynomial` holds c[0..r-1]
/// and, when empty, is taken from the built-in table.
struct ExcitationSignal {
  ExcitationKind kind = ExcitationKind::Multilevel;
  std::uint64_t seed = 1;
  double switch_period = 1.0;
  double low = -1.0;
  double high = 1.0;
  int q = 2;
  int r = 4;
  std::vector<int> polynomial;

  bool operator==(const ExcitationSignal&) const = default;
};

/// Built-in primitive polynomials for (q, r) in {(2,4), (2,7), (2,10), (3,2),
/// (3,3), (5,2)}. Throws ConfigError for other pairs.
std::vector<int> builtin_polynomial(int q, int r);
std::vector<std::pair<int, int>> builtin_polynomial_orders();

/// Cycle length of the shift register started from state (0, ..., 0, 1),
/// found by stepping until the state repeats.
std::int64_t register_cycle_length(int q, const std::vector<int>& polynomial);

/// Linear recurring sequence s[k+r] = -(c[0] s[k] + ... + c[r-1] s[k+r-1]) mod q.
class ShiftRegister {
 public:
  /// Validates q in {2, 3, 5} and that the polynomial is primitive
  /// (cycle length q^r - 1); throws ConfigError otherwise. The seed picks a
  /// nonzero initial state.
  ShiftRegister(int q, std::vector<int> polynomial, std::uint64_t seed);

  int next();
  std::int64_t period() const { return period_; }

 private:
  int q_;
  std::vector<int> poly_;
  std::vector<int> state_;
  std::int64_t period_ = 0;
};

/// Symbols s[0..count) of the m-sequence for the signal's field, polynomial
/// and seed.
std::vector<int> sequence_symbols(const ExcitationSignal& cfg, std::int64_t count);

/// Sampled on `t_grid`; interval k covers [t_grid(0) + k P, t_grid(0) + (k+1) P).
VectorXd generate_prbs(const ExcitationSignal& cfg, const VectorXd& t_grid);
VectorXd generate_multilevel(const ExcitationSignal& cfg, const VectorXd& t_grid);
/// Dispatches on cfg.kind.
VectorXd generate(const ExcitationSignal& cfg, const VectorXd& t_grid);

/// One column per signal on a shared grid, named u1..uq.
TimeSeriesData excitation_series(const std::vector<ExcitationSignal>& signals, const VectorXd& t_grid);

}  // namespace sindykit
