#include <doctest.h>

#include <set>

#include "sindykit/errors.hpp"
#include "sindykit/library.hpp"

using namespace sindykit;

namespace {

std::vector<std::string> labels(const LibrarySpec& spec) {
  std::vector<std::string> xs, us;
  for (int i = 1; i <= spec.n_states; ++i) xs.push_back("x" + std::to_string(i));
  for (int i = 1; i <= spec.n_inputs; ++i) us.push_back("u" + std::to_string(i));
  const auto names = variable_names(spec, xs, us);
  std::vector<std::string> out;
  for (const auto& t : spec.terms) out.push_back(term_label(t, names));
  return out;
}

// Number of monomials of degree <= d in p variables, counted by brute force.
int count_monomials(int p, int d) {
  int count = 0;
  std::vector<int> e(static_cast<std::size_t>(p), 0);
  while (true) {
    int sum = 0;
    for (int v : e) sum += v;
    if (sum <= d) ++count;
    std::size_t i = 0;
    while (i < e.size() && ++e[i] > d) e[i++] = 0;
    if (i == e.size()) break;
  }
  return count;
}

}  // namespace

TEST_CASE("smallest library") {
  const auto spec = build_spec(1, 0, 1);
  CHECK(labels(spec) == std::vector<std::string>{"1", "x1"});
}

TEST_CASE("term counts match a brute-force enumeration") {
  CHECK(build_spec(2, 1, 2).size() == 10);
  for (int n = 1; n <= 3; ++n) {
    for (int q = 0; q <= 2; ++q) {
      for (int d = 1; d <= 3; ++d) {
        CHECK(build_spec(n, q, d).size() == count_monomials(n + q, d));
        CHECK(build_spec(n, q, d, false).size() == count_monomials(n + q, d) - 1);
        if (q > 0) CHECK(build_spec(n, q, d, true, true).size() == count_monomials(n + 2 * q, d));
      }
    }
  }
}

TEST_CASE("graded order, constant first, unique terms") {
  const auto spec = build_spec(2, 0, 2);
  const auto l = labels(spec);
  CHECK(l.front() == "1");
  CHECK(std::find(l.begin(), l.end(), "x1 x2") != l.end());
  CHECK(std::set<std::string>(l.begin(), l.end()).size() == l.size());
  for (std::size_t i = 1; i < spec.terms.size(); ++i) CHECK(spec.terms[i - 1].degree() <= spec.terms[i].degree());
}

TEST_CASE("variables and names with input derivatives") {
  const auto spec = build_spec(1, 2, 1, true, true);
  CHECK(spec.augmented_width() == 4);
  CHECK(variable_names(spec, {"Q"}, {"P", "T"}) == std::vector<std::string>{"Q", "P", "T", "P_dot", "T_dot"});
  CHECK(spec.variables[3] == Variable{VariableKind::InputDerivative, 0});
}

TEST_CASE("degree < 1 is a parameter error") {
  CHECK_THROWS_AS(build_spec(1, 0, 0), ParameterError);
}

TEST_CASE("evaluate") {
  const auto spec = build_spec(2, 0, 2);
  SUBCASE("constant column is all ones") {
    MatrixXd X = MatrixXd::Random(7, 2);
    const MatrixXd theta = evaluate(spec, X, AugmentedInputs{MatrixXd(X.rows(), 0), false});
    CHECK(theta.col(0) == VectorXd::Ones(7));
  }
  SUBCASE("cross term") {
    MatrixXd X(1, 2);
    X << 2, 3;
    const MatrixXd theta = evaluate(spec, X, AugmentedInputs{MatrixXd(X.rows(), 0), false});
    const auto l = labels(spec);
    const auto k = std::find(l.begin(), l.end(), "x1 x2") - l.begin();
    CHECK(theta(0, k) == 6.0);
  }
  SUBCASE("column mismatch is a shape error") {
    CHECK_THROWS_AS(evaluate(spec, MatrixXd::Ones(3, 3), AugmentedInputs{MatrixXd(3, 0), false}), ShapeError);
  }
}

TEST_CASE("evaluate_point") {
  SUBCASE("zero vector") {
    const auto spec = build_spec(2, 1, 2);
    const VectorXd row = evaluate_point(spec, VectorXd::Zero(2), VectorXd::Zero(1));
    CHECK(row(0) == 1.0);
    CHECK(row.tail(row.size() - 1).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("all ones, three variables, degree 2") {
    const auto spec = build_spec(2, 1, 2);
    const VectorXd row = evaluate_point(spec, VectorXd::Ones(2), VectorXd::Ones(1));
    CHECK(row.size() == 10);
    CHECK(row == VectorXd::Ones(10));
  }
  SUBCASE("agrees with the matrix form") {
    const auto spec = build_spec(2, 1, 3);
    const MatrixXd X = MatrixXd::Random(5, 2);
    AugmentedInputs u{MatrixXd::Random(5, 1), false};
    const MatrixXd theta = evaluate(spec, X, u);
    for (Index i = 0; i < 5; ++i) {
      const VectorXd row = evaluate_point(spec, X.row(i).transpose(), u.values.row(i).transpose());
      CHECK((row.transpose() - theta.row(i)).cwiseAbs().maxCoeff() < 1e-15);
    }
  }
}

TEST_CASE("augment_inputs appends derivatives") {
  const VectorXd t = VectorXd::LinSpaced(11, 0.0, 1.0);
  const auto data = make_series(t, t, 3.0 * t);
  const auto a = augment_inputs(data, true);
  REQUIRE(a.values.cols() == 2);
  CHECK(a.includes_derivatives);
  CHECK((a.values.col(1).array() - 3.0).abs().maxCoeff() < 1e-12);
  CHECK(augment_inputs(data, false).values.cols() == 1);
}
