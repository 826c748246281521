#include <doctest.h>

#include <random>
#include <regex>

#include "sindykit/errors.hpp"
#include "sindykit/reference.hpp"

using namespace sindykit;

namespace {

// Printed right-hand sides, transcribed as typeset. Each line is one state.
const char* kPlant0010[] = {
    R"(0.0243\,u_{2}-1.31\,x_{1}-1.72\,x_{2}+0.451\,x_{3}-0.0344\,x_{4}-0.0696\,x_{5}-0.0289\,x_{6})",
    R"(1.27\,x_{1}-0.0273\,u_{2}-0.00935\,u_{1}+1.66\,x_{2}-0.431\,x_{3}+0.0215\,x_{4}+0.0735\,x_{5}+0.0282\,x_{6})",
    R"(1.09\,x_{1}-0.0332\,u_{2}-0.0738\,u_{1}+1.72\,x_{2}-0.605\,x_{3}+0.151\,x_{4}+0.0844\,x_{5}-0.123\,x_{6}+0.027)",
    R"(0.0117\,u_{2}-1.73\,u_{1}+0.0626\,x_{2}-0.0823\,x_{3}-1.3\,x_{4}+0.0192\,x_{6}+0.00423)",
    R"(0.0385\,x_{6}-0.534\,x_{2}-0.00384\,x_{3}-0.0693\,x_{5}-0.544\,x_{1}-0.0233)",
    R"(0.174\,u_{1}-0.0055\,u_{2}-0.607\,x_{1}-0.945\,x_{2}+0.354\,x_{3}+0.472\,x_{4}-0.0775\,x_{5}-0.135\,x_{6})",
};

const char* kPlant0025[] = {
    R"(0.0317\,u_{2}-1.16\,x_{1}-1.57\,x_{2}+0.436\,x_{3}-0.046\,x_{4}-0.0685\,x_{5}-0.0218\,x_{6})",
    R"(1.12\,x_{1}-0.0331\,u_{2}+1.52\,x_{2}-0.424\,x_{3}+0.0455\,x_{4}+0.0702\,x_{5}+0.0171\,x_{6})",
    R"(0.885\,x_{1}-0.0886\,u_{1}+1.56\,x_{2}-0.659\,x_{3}+0.138\,x_{4}+0.0737\,x_{5}-0.124\,x_{6})",
    R"(0.138\,x_{2}-1.63\,u_{1}-0.142\,x_{3}-1.18\,x_{4})",
    R"(0.0367\,x_{6}-0.441\,x_{2}-0.0457\,x_{5}-0.454\,x_{1})",
    R"(0.181\,u_{1}-0.548\,x_{1}-0.893\,x_{2}+0.36\,x_{3}+0.469\,x_{4}-0.0739\,x_{5}-0.139\,x_{6})",
};

const char* kPlant0080[] = {
    R"(0.373\,x_{3}-0.729\,x_{2}-0.399\,x_{1})",
    R"(0.328\,x_{1}+0.634\,x_{2}-0.35\,x_{3})",
    R"(0.993\,x_{1}+1.77\,x_{2}-0.751\,x_{3}+0.245\,x_{4}+0.0816\,x_{5}-0.147\,x_{6})",
    R"(-1.8\,u_{1}-1.35\,x_{4})",
    R"(0)",
    R"(0.168\,u_{1}-0.65\,x_{1}-1.02\,x_{2}+0.381\,x_{3}+0.456\,x_{4}-0.086\,x_{5}-0.13\,x_{6})",
};

const char* kStreamflow =
    R"(0.00781\,P-0.024\,T_{{min}}+0.0191\,T_{{max}}-0.0112\,V-0.0138\,P\,Q_{{stream}})"
    R"(-0.0048\,P\,R_{{solar}}-0.00284\,Q_{{stream}}\,R_{{solar}}+0.00352\,P\,T_{{min}})"
    R"(-0.0144\,P\,T_{{max}}+0.0276\,Q_{{stream}}\,T_{{min}}-0.0248\,Q_{{stream}}\,T_{{max}})"
    R"(+0.0157\,P\,V+0.009\,R_{{solar}}\,T_{{min}}+0.00673\,R_{{solar}}\,T_{{max}})"
    R"(-2.71e-4\,R_{{solar}}\,V+0.00329\,T_{{min}}\,T_{{max}}+0.0223\,T_{{max}}\,V)"
    R"(-0.0159\,{T_{{min}}}^2-0.00754\,{T_{{max}}}^2-0.00347\,V^2-7.85e-4)";

struct Term {
  std::string label;
  double value;
};

// "1.27\,x_{1}-0.0273\,u_{2}" -> {("x1", 1.27), ("u2", -0.0273)}; a bare
// number is the constant term.
std::vector<Term> parse_rhs(std::string s) {
  s = std::regex_replace(s, std::regex(R"(\\,)"), " ");
  s = std::regex_replace(s, std::regex(R"([{}])"), "");
  s = std::regex_replace(s, std::regex(R"(([xu])_(\d))"), "$1$2");
  std::vector<Term> out;
  const std::regex term(R"(([+-]?)\s*(\d+(?:\.\d+)?(?:e-?\d+)?)((?:\s+[A-Za-z][A-Za-z0-9_]*(?:\^\d)?)*))");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), term); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const double v = std::stod(m[2].str()) * (m[1].str() == "-" ? -1.0 : 1.0);
    std::string label = std::regex_replace(m[3].str(), std::regex(R"(^\s+)"), "");
    if (label.empty()) label = "1";
    if (v != 0.0) out.push_back({label, v});
  }
  return out;
}

void check_state(const SparseModel& model, int state, const std::string& printed) {
  const auto terms = parse_rhs(printed);
  for (const auto& t : terms) {
    const Index k = find_term(model, t.label);
    REQUIRE_MESSAGE(k >= 0, t.label);
    CHECK_MESSAGE(model.Xi(k, state) == t.value, t.label);
  }
  Index nnz = 0;
  for (Index k = 0; k < model.Xi.rows(); ++k) nnz += model.Xi(k, state) != 0.0;
  CHECK(nnz == static_cast<Index>(terms.size()));
}

template <std::size_t N>
void check_plant(const ReferenceSystem& ref, const char* (&printed)[N]) {
  REQUIRE(ref.n_states() == 6);
  REQUIRE(ref.n_inputs() == 2);
  for (std::size_t k = 0; k < N; ++k) check_state(ref.model, static_cast<int>(k), printed[k]);
}

}  // namespace

TEST_CASE("plant tables match the printed equations term by term") {
  check_plant(plant_model_lambda_0010(), kPlant0010);
  check_plant(plant_model_lambda_0025(), kPlant0025);
  check_plant(plant_model_lambda_0080(), kPlant0080);
}

TEST_CASE("plant spot values") {
  const auto m15 = plant_model_lambda_0025().model;
  CHECK(m15.Xi(find_term(m15, "u2"), 0) == 0.0317);
  const auto m16 = plant_model_lambda_0080().model;
  CHECK(m16.Xi.col(4).isZero(0.0));
  const auto m14 = plant_model_lambda_0010().model;
  CHECK(m14.Xi(find_term(m14, "1"), 2) == 0.027);
}

TEST_CASE("streamflow table matches the printed equation") {
  const auto ref = streamflow_model();
  REQUIRE(ref.n_states() == 1);
  REQUIRE(ref.n_inputs() == 5);
  check_state(ref.model, 0, kStreamflow);
  CHECK(ref.model.Xi(find_term(ref.model, "T_max^2"), 0) == -0.00754);
  CHECK(ref.model.Xi(find_term(ref.model, "1"), 0) == -7.85e-4);
}

TEST_CASE("streamflow with input derivatives") {
  const auto ref = streamflow_model_with_input_derivatives();
  CHECK(ref.model.spec.with_input_derivatives);
  CHECK(ref.model.Xi(find_term(ref.model, "T_max^2"), 0) == -0.0158);
}

TEST_CASE("right-hand sides are dot products of the tables") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (const auto& name : reference_names()) {
    const auto ref = reference_by_name(name);
    const auto& spec = ref.model.spec;
    for (int trial = 0; trial < 10; ++trial) {
      VectorXd x(spec.n_states), u(spec.augmented_width());
      for (Index i = 0; i < x.size(); ++i) x(i) = d(rng);
      for (Index i = 0; i < u.size(); ++i) u(i) = d(rng);
      std::vector<double> vars(x.data(), x.data() + x.size());
      vars.insert(vars.end(), u.data(), u.data() + u.size());
      for (int k = 0; k < spec.n_states; ++k) {
        double expected = 0.0;
        for (Index j = 0; j < spec.size(); ++j) {
          double mono = 1.0;
          const auto& pw = spec.terms[static_cast<std::size_t>(j)].powers;
          for (std::size_t v = 0; v < pw.size(); ++v) {
            for (int p = 0; p < pw[v]; ++p) mono *= vars[v];
          }
          expected += ref.model.Xi(j, k) * mono;
        }
        const double got = ref.model.Xi.col(k).dot(evaluate_point(spec, x, u));
        CHECK(got == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("forced textbook systems") {
  const auto lv = forced_lotka_volterra();
  CHECK(lv.n_states() == 2);
  CHECK(lv.n_inputs() == 1);
  const auto lz = forced_lorenz();
  CHECK(lz.n_states() == 3);
  CHECK(lz.model.Xi(find_term(lz.model, "x1 x2"), 2) != 0.0);
}

TEST_CASE("registry") {
  const auto names = reference_names();
  CHECK(names.size() == 7);
  CHECK(reference_by_name("eq15").model == plant_model_lambda_0025().model);
  CHECK(reference_by_name("eq14").model == plant_model_lambda_0010().model);
  CHECK(reference_by_name("eq17").model == streamflow_model().model);
  CHECK_THROWS_AS(reference_by_name("nope"), ConfigError);
}

TEST_CASE("set_coefficient") {
  auto m = make_model(build_spec(2, 0, 2), MatrixXd::Zero(6, 2));
  set_coefficient(m, "x2", "x2 x1", 1.5);
  CHECK(m.Xi(find_term(m, "x1 x2"), 1) == 1.5);
  CHECK_THROWS_AS(set_coefficient(m, "x2", "x1 x2", 2.0), ParameterError);
  CHECK_THROWS_AS(set_coefficient(m, "x1", "x3", 2.0), ParameterError);
  CHECK(find_term(m, "x1^3") == -1);
}
