#include <doctest.h>

#include <cmath>

#include "sindykit/errors.hpp"
#include "sindykit/excitation.hpp"
#include "sindykit/reference.hpp"
#include "sindykit/simulate.hpp"
#include "sindykit/validate.hpp"

using namespace sindykit;

namespace {

IntegratorSettings tight_zoh() {
  IntegratorSettings s;
  s.rtol = 1e-10;
  s.atol = 1e-12;
  s.input_interp = InputInterp::ZeroOrderHold;
  return s;
}

// x' = -x + u driven by a PRBS, 40 time units at 0.02.
TimeSeriesData scalar_data() {
  ExcitationSignal sig;
  sig.kind = ExcitationKind::Prbs;
  sig.r = 7;
  sig.switch_period = 0.5;
  const auto inputs = excitation_series({sig}, uniform_grid(0.0, 40.0, 0.02));
  const auto truth = make_model(build_spec(1, 1, 1), (MatrixXd(3, 1) << 0.0, -1.0, 1.0).finished());
  return integrate(truth, VectorXd::Zero(1), inputs, tight_zoh());
}

ValidationSettings zoh_settings() {
  ValidationSettings v;
  v.integ = tight_zoh();
  v.fit.diff_scheme = DiffScheme::SegmentedCentral;
  v.refine.integ.input_interp = InputInterp::ZeroOrderHold;
  return v;
}

TimeSeriesData plant_data(double hours, std::uint64_t seed, const SparseModel& model) {
  ExcitationSignal u1, u2;
  u1.q = 3;
  u1.r = 3;
  u1.seed = seed;
  u2.q = 5;
  u2.r = 2;
  u2.switch_period = 1.5;
  u2.seed = seed + 1;
  const auto inputs = excitation_series({u1, u2}, uniform_grid(0.0, hours, 0.02));
  return integrate(model, VectorXd::Zero(6), inputs, tight_zoh());
}

}  // namespace

TEST_CASE("kfold_split sizes") {
  SUBCASE("even split") {
    const auto f = kfold_split(10, 5);
    REQUIRE(f.size() == 5);
    for (int i = 0; i < 5; ++i) {
      CHECK(f[i].begin == 2 * i);
      CHECK(f[i].end == 2 * i + 2);
    }
  }
  SUBCASE("remainder goes to the first blocks") {
    const auto f = kfold_split(11, 5);
    std::vector<Index> sizes;
    for (const auto& x : f) sizes.push_back(x.end - x.begin);
    CHECK(sizes == std::vector<Index>{3, 2, 2, 2, 2});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(kfold_split(4, 5), ParameterError);
    CHECK_THROWS_AS(kfold_split(10, 1), ParameterError);
  }
}

TEST_CASE("kfold_split partition properties") {
  for (Index m = 2; m <= 60; ++m) {
    for (int k = 2; k <= std::min<Index>(m, 10); ++k) {
      const auto folds = kfold_split(m, k);
      REQUIRE(folds.size() == static_cast<std::size_t>(k));
      std::vector<int> hits(static_cast<std::size_t>(m), 0);
      Index prev_end = 0;
      for (const auto& f : folds) {
        CHECK(f.begin == prev_end);
        prev_end = f.end;
        CHECK(static_cast<Index>(f.validation.size()) == f.end - f.begin);
        CHECK(static_cast<Index>(f.train.size()) == m - (f.end - f.begin));
        for (Index i : f.validation) ++hits[static_cast<std::size_t>(i)];
        for (Index i : f.train) CHECK((i < f.begin || i >= f.end));
      }
      CHECK(prev_end == m);
      for (int h : hits) CHECK(h == 1);
    }
  }
}

TEST_CASE("lambda_grid") {
  const auto g = lambda_grid(0.0, 0.1, 0.0025);
  CHECK(g.size() == 41);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == doctest::Approx(0.1));
  CHECK(lambda_grid(0.05, 0.05, 0.01).size() == 1);
}

TEST_CASE("crossvalidate on exact data") {
  const auto data = scalar_data();
  const auto reports = crossvalidate(data, build_spec(1, 1, 1), 0.05, false, zoh_settings());
  REQUIRE(reports.size() == 5);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    CHECK(reports[i].fold_index == static_cast<int>(i));
    CHECK(reports[i].mae_mean < 1e-4);
    CHECK(reports[i].nonzero_terms == 2);
    CHECK(reports[i].mae_x1 == reports[i].mae_per_state(0));
  }
}

TEST_CASE("refined folds never score worse on their training data") {
  const auto data = scalar_data();
  auto settings = zoh_settings();
  settings.folds = 3;
  settings.refine.max_evals = 200;
  const auto raw = crossvalidate(data, build_spec(1, 1, 1), 0.05, false, settings);
  const auto refined = crossvalidate(data, build_spec(1, 1, 1), 0.05, true, settings);
  REQUIRE(refined.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(refined[i].refined);
    CHECK(refined[i].nonzero_terms == raw[i].nonzero_terms);
    CHECK(std::isfinite(refined[i].mae_mean));
  }
}

TEST_CASE("a diverging fold is marked NaN and the others stay finite") {
  const auto data = scalar_data();
  auto settings = zoh_settings();
  settings.post_fit = [](SparseModel& m, int fold) {
    if (fold == 1) m.Xi(1, 0) = 40.0;
  };
  const auto reports = crossvalidate(data, build_spec(1, 1, 1), 0.05, false, settings);
  REQUIRE(reports.size() == 5);
  for (const auto& r : reports) {
    if (r.fold_index == 1) {
      CHECK(r.failed());
      CHECK(std::isnan(r.mae_x1));
      CHECK_FALSE(r.failure.empty());
    } else {
      CHECK_FALSE(r.failed());
    }
  }
  const std::string csv = fold_reports_csv(reports, data.state_names());
  CHECK(csv.find("NaN") != std::string::npos);
}

TEST_CASE("evaluate_on_test") {
  const auto truth = plant_model_lambda_0025().model;
  const auto data = plant_data(20.0, 5, truth);
  SUBCASE("self-test") {
    CHECK(evaluate_on_test(truth, data, tight_zoh()).mae_mean < 1e-4);
  }
  SUBCASE("a different model scores worse") {
    CHECK(evaluate_on_test(plant_model_lambda_0080().model, data, tight_zoh()).mae_mean > 0.0);
  }
  SUBCASE("a diverging model gives the NaN marker") {
    auto bad = truth;
    bad.Xi(find_term(bad, "x1"), 0) = 50.0;
    const auto r = evaluate_on_test(bad, data, tight_zoh());
    CHECK(r.failed());
    CHECK(r.fold_index == -1);
  }
}

TEST_CASE("sweep") {
  const auto data = scalar_data();
  auto settings = zoh_settings();
  settings.folds = 3;
  SUBCASE("single value is one crossvalidate call") {
    const auto rep = sweep(data, build_spec(1, 1, 1), {0.05}, false, settings);
    const auto cv = crossvalidate(data, build_spec(1, 1, 1), 0.05, false, settings);
    REQUIRE(rep.cells.size() == cv.size());
    for (std::size_t i = 0; i < cv.size(); ++i) CHECK(rep.cells[i].mae_mean == cv[i].mae_mean);
  }
  SUBCASE("selection is the lowest finite cell and is reproducible") {
    settings.threads = 3;
    const std::vector<double> grid = {0.0, 0.05, 5.0};
    const auto a = sweep(data, build_spec(1, 1, 1), grid, false, settings);
    settings.threads = 1;
    const auto b = sweep(data, build_spec(1, 1, 1), grid, false, settings);
    CHECK(sweep_csv(a, data.state_names()) == sweep_csv(b, data.state_names()));
    REQUIRE(a.cells.size() == 9);
    REQUIRE(a.best.has_value());
    double lowest = INFINITY;
    for (const auto& c : a.cells) {
      if (!c.failed()) lowest = std::min(lowest, c.mae_mean);
    }
    CHECK(a.cells[a.best->cell].mae_mean == lowest);
    // Threshold 5 removes every term; the zero model must score worse.
    CHECK(a.cells[6].nonzero_terms == 0);
    CHECK(a.cells[6].mae_mean > a.cells[a.best->cell].mae_mean);
  }
}

TEST_CASE("sweep csv layout") {
  const auto data = scalar_data();
  auto settings = zoh_settings();
  settings.folds = 2;
  const auto rep = sweep(data, build_spec(1, 1, 1), {0.05}, false, settings);
  const std::string csv = sweep_csv(rep, data.state_names());
  CHECK(csv.rfind("lambda,fold,refined,degree,with_input_derivatives,nonzero,mae_x1,mae_mean,mae_first_state\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
