#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "sindykit/dataset.hpp"
#include "sindykit/errors.hpp"

using namespace sindykit;

namespace {

Schema schema_tx() {
  return Schema::from_json(nlohmann::json{{"t", "time"}, {"x1", "state"}});
}

TimeSeriesData parse(const std::string& text, const Schema& schema) {
  std::istringstream in(text);
  return read_csv(in, schema);
}

}  // namespace

TEST_CASE("read_csv: minimal well-formed file") {
  const auto d = parse("t,x1\n0,1\n1,2\n2,3\n", schema_tx());
  CHECK(d.rows() == 3);
  CHECK(d.n_states() == 1);
  CHECK(d.n_inputs() == 0);
  CHECK(d.X(2, 0) == 3.0);
}

TEST_CASE("read_csv: duplicate timestamp is a data error") {
  CHECK_THROWS_AS(parse("t,x1\n0,1\n1,2\n1,3\n", schema_tx()), DataError);
}

TEST_CASE("read_csv: fewer than two rows is a data error") {
  CHECK_THROWS_AS(parse("t,x1\n0,1\n", schema_tx()), DataError);
}

TEST_CASE("read_csv: missing schema column is a schema error") {
  const auto schema = Schema::from_json(nlohmann::json{{"t", "time"}, {"x1", "state"}, {"u1", "input"}});
  CHECK_THROWS_AS(parse("t,x1\n0,1\n1,2\n", schema), SchemaError);
}

TEST_CASE("read_csv: blank cell is stored as missing") {
  const auto d = parse("t,x1\n0,1\n1,\n2,3\n", schema_tx());
  CHECK(is_missing(d.X(1, 0)));
  CHECK(d.has_missing());
  CHECK_THROWS_AS(d.require_clean(), DataError);
}

TEST_CASE("read_csv: roles and column order follow the file") {
  const auto schema = Schema::from_json(nlohmann::json{
      {"time", "time"}, {"b", "state"}, {"a", "state"}, {"u", {{"role", "input"}, {"policy", "mean"}}}, {"junk", "ignore"}});
  const auto d = parse("time,a,junk,u,b\n0,1,9,5,2\n1,3,9,6,4\n", schema);
  CHECK(d.state_names() == std::vector<std::string>{"a", "b"});
  CHECK(d.input_names() == std::vector<std::string>{"u"});
  CHECK(d.inputs[0].aggregation == Aggregation::Mean);
  CHECK(d.X(1, 1) == 4.0);
}

TEST_CASE("write_csv round-trips exactly") {
  VectorXd t(3);
  t << 0.0, 0.1, 0.30000000000000004;
  MatrixXd X(3, 1);
  X << 1.0 / 3.0, -2e-17, 12345.678901234567;
  MatrixXd U(3, 1);
  U << 1.0, kMissing, -1.0;
  const auto d = make_series(t, X, U);
  std::ostringstream out;
  write_csv(out, d);
  const auto back = parse(out.str(), Schema::for_series(d));
  CHECK(back.t == d.t);
  CHECK(back.X == d.X);
  CHECK(is_missing(back.U(1, 0)));
  CHECK(back.U(2, 0) == -1.0);
}

TEST_CASE("format_double") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK(std::stod(format_double(1.0 / 7.0)) == 1.0 / 7.0);
}

TEST_CASE("fill_missing_linear") {
  SUBCASE("midpoint") {
    VectorXd t(3);
    t << 0, 1, 2;
    MatrixXd X(3, 1);
    X << 1, kMissing, 3;
    const auto f = fill_missing_linear(make_series(t, X));
    CHECK(f.X(1, 0) == doctest::Approx(2.0));
  }
  SUBCASE("no missing entries is the identity") {
    VectorXd t(3);
    t << 0, 1, 2;
    MatrixXd X(3, 1);
    X << 5, -1, 7;
    CHECK(fill_missing_linear(make_series(t, X)).X == X);
  }
  SUBCASE("two-sample gap on a line through (0,0) and (3,6)") {
    VectorXd t(4);
    t << 0, 1, 2, 3;
    MatrixXd X(4, 1);
    X << 0, kMissing, kMissing, 6;
    const auto f = fill_missing_linear(make_series(t, X));
    CHECK(f.X(1, 0) == doctest::Approx(2.0));
    CHECK(f.X(2, 0) == doctest::Approx(4.0));
  }
  SUBCASE("missing endpoint") {
    VectorXd t(3);
    t << 0, 1, 2;
    MatrixXd X(3, 1);
    X << 1, 2, kMissing;
    CHECK_THROWS_AS(fill_missing_linear(make_series(t, X)), EndpointError);
  }
}

TEST_CASE("resample_sum") {
  SUBCASE("96 quarter-hours of ones in one day") {
    const Index m = 96;
    VectorXd t(m);
    for (Index i = 0; i < m; ++i) t(i) = 0.25 * static_cast<double>(i);
    const auto r = resample_sum(make_series(t, MatrixXd::Ones(m, 1)), 24.0);
    REQUIRE(r.rows() == 1);
    CHECK(r.X(0, 0) == doctest::Approx(96.0));
  }
  SUBCASE("four 6-hour samples") {
    VectorXd t(4);
    t << 0, 6, 12, 18;
    MatrixXd X(4, 1);
    X << 1, 2, 3, 4;
    const auto r = resample_sum(make_series(t, X), 24.0);
    REQUIRE(r.rows() == 1);
    CHECK(r.X(0, 0) == doctest::Approx(10.0));
  }
  SUBCASE("bin width equal to spacing is the identity") {
    VectorXd t(4);
    t << 0, 1, 2, 3;
    MatrixXd X(4, 1);
    X << 3, 1, 4, 1;
    const auto r = resample_sum(make_series(t, X), 1.0);
    CHECK(r.X == X);
  }
  SUBCASE("mean policy averages") {
    VectorXd t(4);
    t << 0, 6, 12, 18;
    MatrixXd X(4, 1);
    X << 1, 2, 3, 4;
    auto d = make_series(t, X);
    d.states[0].aggregation = Aggregation::Mean;
    CHECK(resample_sum(d, 24.0).X(0, 0) == doctest::Approx(2.5));
  }
  SUBCASE("empty bin") {
    VectorXd t(3);
    t << 0, 1, 5;
    CHECK_THROWS_AS(resample_sum(make_series(t, MatrixXd::Ones(3, 1)), 1.0), DataError);
  }
}

TEST_CASE("differentiate_columns") {
  SUBCASE("constant column") {
    const VectorXd t = VectorXd::LinSpaced(11, 0.0, 1.0);
    CHECK(differentiate_columns(t, MatrixXd::Constant(11, 1, 4.0)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("linear data is exact") {
    const VectorXd t = VectorXd::LinSpaced(11, 0.0, 1.0);
    const MatrixXd d = differentiate_columns(t, 2.0 * t);
    CHECK((d.array() - 2.0).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("sin against cos") {
    const Index m = static_cast<Index>(std::floor(2.0 * std::numbers::pi / 0.01)) + 1;
    VectorXd t(m);
    for (Index i = 0; i < m; ++i) t(i) = 0.01 * static_cast<double>(i);
    const MatrixXd d = differentiate_columns(t, t.array().sin().matrix());
    CHECK((d.col(0).array() - t.array().cos()).abs().maxCoeff() < 1e-3);
  }
  SUBCASE("quadratic on a non-uniform grid is exact") {
    VectorXd t(5);
    t << 0.0, 0.1, 0.35, 0.4, 1.0;
    const MatrixXd d = differentiate_columns(t, t.array().square().matrix());
    CHECK((d.col(0) - 2.0 * t).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("fewer than three rows") {
    const VectorXd t = VectorXd::LinSpaced(2, 0.0, 1.0);
    CHECK_THROWS_AS(differentiate_columns(t, t), DataError);
  }
}

TEST_CASE("segmented differentiation ignores input switches") {
  const VectorXd t = VectorXd::LinSpaced(21, 0.0, 2.0);
  MatrixXd X(21, 1);
  MatrixXd U(21, 1);
  for (Index i = 0; i < 21; ++i) {
    // x has a kink at t = 1 where u switches.
    X(i, 0) = t(i) <= 1.0 ? t(i) : 1.0 - 3.0 * (t(i) - 1.0);
    U(i, 0) = t(i) <= 1.0 ? 0.0 : 1.0;
  }
  CHECK(input_switch_rows(U) == std::vector<Index>{11});
  const auto d = differentiate(make_series(t, X, U), DiffTarget::States, DiffScheme::SegmentedCentral);
  for (Index i = 0; i <= 10; ++i) CHECK(d.values(i, 0) == doctest::Approx(1.0));
  for (Index i = 12; i < 21; ++i) CHECK(d.values(i, 0) == doctest::Approx(-3.0));
}

TEST_CASE("slice_rows and slice_time") {
  const VectorXd t = VectorXd::LinSpaced(11, 0.0, 1.0);
  const auto d = make_series(t, t);
  CHECK(slice_rows(d, 2, 5).rows() == 3);
  const auto s = slice_time(d, 0.2, 0.5);
  CHECK(s.rows() == 4);
  CHECK(s.t(0) == doctest::Approx(0.2));
}
