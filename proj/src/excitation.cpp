#include "sindykit/excitation.hpp"

#include "sindykit/errors.hpp"

#include <cmath>
#include <map>

namespace sindykit {

namespace {

constexpr std::int64_t kMaxStates = std::int64_t{1} << 22;

std::int64_t ipow(int base, int exp) {
  std::int64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    r *= base;
    if (r > kMaxStates) throw ConfigError("shift register with q^r > 2^22 states is not supported");
  }
  return r;
}

void check_field(int q, const std::vector<int>& poly) {
  if (q != 2 && q != 3 && q != 5) throw ConfigError("unsupported field order " + std::to_string(q) + " (use 2, 3 or 5)");
  if (poly.size() < 2) throw ConfigError("shift register length must be >= 2");
  for (int c : poly) {
    if (c < 0 || c >= q) throw ConfigError("polynomial coefficient " + std::to_string(c) + " is outside GF(" + std::to_string(q) + ")");
  }
  if (poly.front() == 0) throw ConfigError("feedback polynomial has a zero constant term");
  ipow(q, static_cast<int>(poly.size()));
}

int feedback(int q, const std::vector<int>& poly, const std::vector<int>& state) {
  int acc = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) acc += poly[i] * state[i];
  return (q - acc % q) % q;
}

void shift(int q, const std::vector<int>& poly, std::vector<int>& state) {
  const int next = feedback(q, poly, state);
  for (std::size_t i = 0; i + 1 < state.size(); ++i) state[i] = state[i + 1];
  state.back() = next;
}

std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double unit_uniform(std::uint64_t& s) { return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53; }

std::vector<int> polynomial_of(const ExcitationSignal& cfg, int q) {
  if (!cfg.polynomial.empty()) {
    if (static_cast<int>(cfg.polynomial.size()) != cfg.r) {
      throw ConfigError("polynomial has " + std::to_string(cfg.polynomial.size()) + " coefficients, register length is " +
                        std::to_string(cfg.r));
    }
    return cfg.polynomial;
  }
  return builtin_polynomial(q, cfg.r);
}

std::vector<Index> switch_intervals(const ExcitationSignal& cfg, const VectorXd& t_grid, Index& count) {
  if (!(cfg.switch_period > 0.0) || !std::isfinite(cfg.switch_period)) {
    throw ConfigError("switch period must be positive");
  }
  if (!(cfg.high >= cfg.low)) throw ConfigError("amplitude bounds need low <= high");
  std::vector<Index> idx(static_cast<std::size_t>(t_grid.size()));
  count = 0;
  for (Index i = 0; i < t_grid.size(); ++i) {
    const Index k = static_cast<Index>(std::floor((t_grid(i) - t_grid(0)) / cfg.switch_period + 1e-9));
    idx[static_cast<std::size_t>(i)] = k;
    count = std::max(count, k + 1);
  }
  return idx;
}

}  // namespace

std::vector<int> builtin_polynomial(int q, int r) {
  static const std::map<std::pair<int, int>, std::vector<int>> table = {
      {{2, 4}, {1, 0, 0, 1}},                    // x^4 + x^3 + 1
      {{2, 7}, {1, 0, 0, 0, 0, 0, 1}},           // x^7 + x^6 + 1
      {{2, 10}, {1, 0, 0, 0, 0, 0, 0, 1, 0, 0}},  // x^10 + x^7 + 1
      {{3, 2}, {2, 1}},                          // x^2 + x + 2
      {{3, 3}, {1, 2, 0}},                       // x^3 + 2x + 1
      {{5, 2}, {2, 1}},                          // x^2 + x + 2
  };
  const auto it = table.find({q, r});
  if (it == table.end()) {
    throw ConfigError("no built-in primitive polynomial for q=" + std::to_string(q) + ", r=" + std::to_string(r));
  }
  return it->second;
}

std::vector<std::pair<int, int>> builtin_polynomial_orders() {
  return {{2, 4}, {2, 7}, {2, 10}, {3, 2}, {3, 3}, {5, 2}};
}

std::int64_t register_cycle_length(int q, const std::vector<int>& polynomial) {
  check_field(q, polynomial);
  std::vector<int> start(polynomial.size(), 0);
  start.back() = 1;
  std::vector<int> state = start;
  const std::int64_t limit = ipow(q, static_cast<int>(polynomial.size()));
  for (std::int64_t n = 1; n <= limit; ++n) {
    shift(q, polynomial, state);
    if (state == start) return n;
  }
  return -1;
}

ShiftRegister::ShiftRegister(int q, std::vector<int> polynomial, std::uint64_t seed)
    : q_(q), poly_(std::move(polynomial)) {
  check_field(q_, poly_);
  const std::int64_t full = ipow(q_, static_cast<int>(poly_.size())) - 1;
  period_ = register_cycle_length(q_, poly_);
  if (period_ != full) {
    throw ConfigError("feedback polynomial is not primitive over GF(" + std::to_string(q_) + "): cycle length " +
                      std::to_string(period_) + " instead of " + std::to_string(full));
  }
  std::uint64_t code = seed % static_cast<std::uint64_t>(full) + 1;
  state_.assign(poly_.size(), 0);
  for (auto& digit : state_) {
    digit = static_cast<int>(code % static_cast<std::uint64_t>(q_));
    code /= static_cast<std::uint64_t>(q_);
  }
}

int ShiftRegister::next() {
  const int out = state_.front();
  shift(q_, poly_, state_);
  return out;
}

std::vector<int> sequence_symbols(const ExcitationSignal& cfg, std::int64_t count) {
  const int q = cfg.kind == ExcitationKind::Multilevel ? cfg.q : 2;
  ShiftRegister reg(q, polynomial_of(cfg, q), cfg.seed);
  std::vector<int> out(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
  for (auto& s : out) s = reg.next();
  return out;
}

VectorXd generate_prbs(const ExcitationSignal& cfg, const VectorXd& t_grid) {
  Index count = 0;
  const auto idx = switch_intervals(cfg, t_grid, count);
  ExcitationSignal binary = cfg;
  binary.q = 2;
  if (binary.kind == ExcitationKind::Multilevel) binary.kind = ExcitationKind::Prbs;
  const auto bits = sequence_symbols(binary, count);

  std::vector<double> level(static_cast<std::size_t>(count));
  if (cfg.kind == ExcitationKind::RandomAmplitudePrbs) {
    std::uint64_t rng = cfg.seed;
    double current = 0.0;
    for (Index k = 0; k < count; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      if (k == 0 || bits[ku] != bits[ku - 1]) current = cfg.low + (cfg.high - cfg.low) * unit_uniform(rng);
      level[ku] = current;
    }
  } else {
    for (Index k = 0; k < count; ++k) {
      level[static_cast<std::size_t>(k)] = bits[static_cast<std::size_t>(k)] ? cfg.high : cfg.low;
    }
  }
  VectorXd out(t_grid.size());
  for (Index i = 0; i < t_grid.size(); ++i) out(i) = level[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
  return out;
}

VectorXd generate_multilevel(const ExcitationSignal& cfg, const VectorXd& t_grid) {
  Index count = 0;
  const auto idx = switch_intervals(cfg, t_grid, count);
  ExcitationSignal ml = cfg;
  ml.kind = ExcitationKind::Multilevel;
  const auto symbols = sequence_symbols(ml, count);
  const double step = cfg.q > 1 ? (cfg.high - cfg.low) / static_cast<double>(cfg.q - 1) : 0.0;
  VectorXd out(t_grid.size());
  for (Index i = 0; i < t_grid.size(); ++i) {
    const int s = symbols[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    out(i) = s == cfg.q - 1 ? cfg.high : cfg.low + static_cast<double>(s) * step;
  }
  return out;
}

VectorXd generate(const ExcitationSignal& cfg, const VectorXd& t_grid) {
  return cfg.kind == ExcitationKind::Multilevel ? generate_multilevel(cfg, t_grid) : generate_prbs(cfg, t_grid);
}

TimeSeriesData excitation_series(const std::vector<ExcitationSignal>& signals, const VectorXd& t_grid) {
  MatrixXd U(t_grid.size(), static_cast<Index>(signals.size()));
  for (std::size_t j = 0; j < signals.size(); ++j) U.col(static_cast<Index>(j)) = generate(signals[j], t_grid);
  return make_series(t_grid, MatrixXd(t_grid.size(), 0), std::move(U));
}

}  // namespace sindykit
