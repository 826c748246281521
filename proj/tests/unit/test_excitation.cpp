#include <doctest.h>

#include <map>
#include <set>

#include "sindykit/errors.hpp"
#include "sindykit/excitation.hpp"
#include "sindykit/simulate.hpp"

using namespace sindykit;

namespace {

// Brute-force cycle detection by walking the register and storing every state.
std::int64_t brute_force_period(int q, const std::vector<int>& c) {
  const std::size_t r = c.size();
  std::vector<int> s(r, 0);
  s[r - 1] = 1;
  std::map<std::vector<int>, std::int64_t> seen;
  for (std::int64_t k = 0;; ++k) {
    const auto [it, fresh] = seen.emplace(s, k);
    if (!fresh) return k - it->second;
    int next = 0;
    for (std::size_t i = 0; i < r; ++i) next += c[i] * s[i];
    next = ((-next) % q + q) % q;
    s.erase(s.begin());
    s.push_back(next);
  }
}

}  // namespace

TEST_CASE("built-in polynomials are maximal length") {
  for (const auto& [q, r] : builtin_polynomial_orders()) {
    std::int64_t expected = 1;
    for (int i = 0; i < r; ++i) expected *= q;
    --expected;
    const auto poly = builtin_polynomial(q, r);
    CHECK(brute_force_period(q, poly) == expected);
    CHECK(register_cycle_length(q, poly) == expected);
    CHECK(ShiftRegister(q, poly, 5).period() == expected);
  }
}

TEST_CASE("x^4 + x^3 + 1 has period 15") {
  // c[0..3] for x^4 + x^3 + 1: constant 1, x^3 coefficient 1.
  const std::vector<int> poly = {1, 0, 0, 1};
  CHECK(brute_force_period(2, poly) == 15);
  CHECK(ShiftRegister(2, poly, 1).period() == 15);
}

TEST_CASE("non-primitive polynomials and unsupported fields are rejected") {
  CHECK_THROWS_AS(ShiftRegister(2, {1, 0, 0, 0}, 1), ConfigError);
  CHECK_THROWS_AS(ShiftRegister(4, {1, 1}, 1), ConfigError);
  CHECK_THROWS_AS(builtin_polynomial(7, 2), ConfigError);
}

TEST_CASE("sequence repeats with the register period") {
  ExcitationSignal cfg;
  cfg.q = 3;
  cfg.r = 2;
  const auto s = sequence_symbols(cfg, 24);
  for (std::size_t i = 0; i + 8 < s.size(); ++i) CHECK(s[i] == s[i + 8]);
}

TEST_CASE("multilevel balance: every symbol appears within one period") {
  for (const auto& [q, r] : builtin_polynomial_orders()) {
    ExcitationSignal cfg;
    cfg.q = q;
    cfg.r = r;
    cfg.seed = 9;
    std::int64_t period = 1;
    for (int i = 0; i < r; ++i) period *= q;
    --period;
    const auto s = sequence_symbols(cfg, period);
    std::map<int, std::int64_t> count;
    for (int v : s) ++count[v];
    CHECK(static_cast<int>(count.size()) == q);
    // Nonzero symbols occur q^(r-1) times, zero one fewer.
    std::int64_t per = period / q + 1;
    for (int v = 1; v < q; ++v) CHECK(count[v] == per);
    CHECK(count[0] == per - 1);
  }
}

TEST_CASE("PRBS samples are two-level") {
  ExcitationSignal cfg;
  cfg.kind = ExcitationKind::Prbs;
  cfg.r = 7;
  const VectorXd u = generate(cfg, uniform_grid(0.0, 50.0, 0.1));
  for (Index i = 0; i < u.size(); ++i) CHECK((u(i) == -1.0 || u(i) == 1.0));
}

TEST_CASE("multilevel levels are equispaced in the bounds") {
  ExcitationSignal cfg;
  cfg.q = 5;
  cfg.r = 2;
  cfg.low = 0.0;
  cfg.high = 2.0;
  const VectorXd u = generate_multilevel(cfg, uniform_grid(0.0, 30.0, 0.5));
  std::set<double> levels(u.data(), u.data() + u.size());
  CHECK(levels == std::set<double>{0.0, 0.5, 1.0, 1.5, 2.0});
}

TEST_CASE("switching is piecewise constant on the period") {
  ExcitationSignal cfg;
  cfg.kind = ExcitationKind::RandomAmplitudePrbs;
  cfg.switch_period = 1.0;
  cfg.low = -2.0;
  cfg.high = 3.0;
  const VectorXd t = uniform_grid(0.0, 20.0, 0.25);
  const VectorXd u = generate(cfg, t);
  for (Index i = 0; i < t.size(); ++i) {
    CHECK(u(i) >= -2.0);
    CHECK(u(i) <= 3.0);
    if (i % 4 != 0) CHECK(u(i) == u(i - 1));
  }
}

TEST_CASE("determinism and seed sensitivity") {
  for (auto kind : {ExcitationKind::Prbs, ExcitationKind::Multilevel, ExcitationKind::RandomAmplitudePrbs}) {
    ExcitationSignal cfg;
    cfg.kind = kind;
    cfg.q = kind == ExcitationKind::Multilevel ? 3 : 2;
    cfg.r = kind == ExcitationKind::Multilevel ? 3 : 7;
    cfg.seed = 42;
    const VectorXd t = uniform_grid(0.0, 100.0, 0.5);
    CHECK(generate(cfg, t) == generate(cfg, t));
    ExcitationSignal other = cfg;
    other.seed = 43;
    CHECK(generate(cfg, t) != generate(other, t));
  }
}

TEST_CASE("excitation_series names its columns") {
  ExcitationSignal a, b;
  b.seed = 2;
  const auto s = excitation_series({a, b}, uniform_grid(0.0, 10.0, 1.0));
  CHECK(s.input_names() == std::vector<std::string>{"u1", "u2"});
  CHECK(s.n_states() == 0);
  CHECK(s.rows() == 11);
}
