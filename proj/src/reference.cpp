#include "sindykit/reference.hpp"

#include "sindykit/errors.hpp"

#include <algorithm>
#include <initializer_list>
#include <sstream>

namespace sindykit {

namespace {

struct Entry {
  const char* term;
  double value;
};

using Equation = std::pair<const char*, std::initializer_list<Entry>>;

SparseModel blank_model(int degree, std::vector<std::string> states, std::vector<std::string> inputs,
                        bool with_derivatives) {
  LibrarySpec spec = build_spec(static_cast<int>(states.size()), static_cast<int>(inputs.size()), degree, true,
                                with_derivatives);
  SparseModel m = make_model(spec, MatrixXd::Zero(spec.size(), spec.n_states));
  for (std::size_t i = 0; i < states.size(); ++i) m.states[i].name = states[i];
  for (std::size_t i = 0; i < inputs.size(); ++i) m.inputs[i].name = inputs[i];
  return m;
}

void fill(SparseModel& m, std::initializer_list<Equation> equations) {
  for (const auto& [state, entries] : equations) {
    for (const Entry& e : entries) set_coefficient(m, state, e.term, e.value);
  }
}

std::vector<std::string> plant_states() { return {"x1", "x2", "x3", "x4", "x5", "x6"}; }
std::vector<std::string> plant_inputs() { return {"u1", "u2"}; }
std::vector<std::string> forcings() { return {"P", "R_solar", "T_min", "T_max", "V"}; }

// Sorted multiset of variable indices described by a label like "P Q_stream^2".
std::vector<int> parse_label(const std::vector<std::string>& names, const std::string& label) {
  std::vector<int> powers(names.size(), 0);
  if (label == "1") return powers;
  std::istringstream ss(label);
  std::string token;
  while (ss >> token) {
    int power = 1;
    const auto caret = token.find('^');
    if (caret != std::string::npos) {
      power = std::stoi(token.substr(caret + 1));
      token = token.substr(0, caret);
    }
    const auto it = std::find(names.begin(), names.end(), token);
    if (it == names.end()) throw ParameterError("unknown variable '" + token + "' in term '" + label + "'");
    powers[static_cast<std::size_t>(it - names.begin())] += power;
  }
  return powers;
}

}  // namespace

Index find_term(const SparseModel& model, const std::string& term) {
  const auto names = variable_names(model.spec, model.state_names(), model.input_names());
  const auto powers = parse_label(names, term);
  for (Index j = 0; j < model.spec.size(); ++j) {
    if (model.spec.terms[static_cast<std::size_t>(j)].powers == powers) return j;
  }
  return -1;
}

void set_coefficient(SparseModel& model, const std::string& state, const std::string& term, double value) {
  const auto names = model.state_names();
  const auto it = std::find(names.begin(), names.end(), state);
  if (it == names.end()) throw ParameterError("unknown state '" + state + "'");
  const Index j = find_term(model, term);
  if (j < 0) throw ParameterError("term '" + term + "' is not in the library");
  const Index k = it - names.begin();
  if (model.Xi(j, k) != 0.0) throw ParameterError("term '" + term + "' of state '" + state + "' set twice");
  model.Xi(j, k) = value;
}

ReferenceSystem plant_model_lambda_0010() {
  SparseModel m = blank_model(1, plant_states(), plant_inputs(), false);
  fill(m, {
              {"x1", {{"u2", 0.0243}, {"x1", -1.31}, {"x2", -1.72}, {"x3", 0.451}, {"x4", -0.0344},
                      {"x5", -0.0696}, {"x6", -0.0289}}},
              {"x2", {{"x1", 1.27}, {"u2", -0.0273}, {"u1", -0.00935}, {"x2", 1.66}, {"x3", -0.431},
                      {"x4", 0.0215}, {"x5", 0.0735}, {"x6", 0.0282}}},
              {"x3", {{"x1", 1.09}, {"u2", -0.0332}, {"u1", -0.0738}, {"x2", 1.72}, {"x3", -0.605},
                      {"x4", 0.151}, {"x5", 0.0844}, {"x6", -0.123}, {"1", 0.027}}},
              {"x4", {{"u2", 0.0117}, {"u1", -1.73}, {"x2", 0.0626}, {"x3", -0.0823}, {"x4", -1.3},
                      {"x6", 0.0192}, {"1", 0.00423}}},
              {"x5", {{"x6", 0.0385}, {"x2", -0.534}, {"x3", -0.00384}, {"x5", -0.0693}, {"x1", -0.544},
                      {"1", -0.0233}}},
              {"x6", {{"u1", 0.174}, {"u2", -0.0055}, {"x1", -0.607}, {"x2", -0.945}, {"x3", 0.354},
                      {"x4", 0.472}, {"x5", -0.0775}, {"x6", -0.135}}},
          });
  m.lambda = 0.01;
  return {"plant-0.01", "soybean-diesel plant, lambda = 0.01, third validation fold, refined", std::move(m)};
}

ReferenceSystem plant_model_lambda_0025() {
  SparseModel m = blank_model(1, plant_states(), plant_inputs(), false);
  fill(m, {
              {"x1", {{"u2", 0.0317}, {"x1", -1.16}, {"x2", -1.57}, {"x3", 0.436}, {"x4", -0.046},
                      {"x5", -0.0685}, {"x6", -0.0218}}},
              {"x2", {{"x1", 1.12}, {"u2", -0.0331}, {"x2", 1.52}, {"x3", -0.424}, {"x4", 0.0455},
                      {"x5", 0.0702}, {"x6", 0.0171}}},
              {"x3", {{"x1", 0.885}, {"u1", -0.0886}, {"x2", 1.56}, {"x3", -0.659}, {"x4", 0.138},
                      {"x5", 0.0737}, {"x6", -0.124}}},
              {"x4", {{"x2", 0.138}, {"u1", -1.63}, {"x3", -0.142}, {"x4", -1.18}}},
              {"x5", {{"x6", 0.0367}, {"x2", -0.441}, {"x5", -0.0457}, {"x1", -0.454}}},
              {"x6", {{"u1", 0.181}, {"x1", -0.548}, {"x2", -0.893}, {"x3", 0.36}, {"x4", 0.469},
                      {"x5", -0.0739}, {"x6", -0.139}}},
          });
  m.lambda = 0.025;
  return {"plant-0.025", "soybean-diesel plant, lambda = 0.025, third validation fold, refined", std::move(m)};
}

ReferenceSystem plant_model_lambda_0080() {
  SparseModel m = blank_model(1, plant_states(), plant_inputs(), false);
  fill(m, {
              {"x1", {{"x3", 0.373}, {"x2", -0.729}, {"x1", -0.399}}},
              {"x2", {{"x1", 0.328}, {"x2", 0.634}, {"x3", -0.35}}},
              {"x3", {{"x1", 0.993}, {"x2", 1.77}, {"x3", -0.751}, {"x4", 0.245}, {"x5", 0.0816}, {"x6", -0.147}}},
              {"x4", {{"u1", -1.8}, {"x4", -1.35}}},
              {"x6", {{"u1", 0.168}, {"x1", -0.65}, {"x2", -1.02}, {"x3", 0.381}, {"x4", 0.456}, {"x5", -0.086},
                      {"x6", -0.13}}},
          });
  m.lambda = 0.08;
  return {"plant-0.08", "soybean-diesel plant, lambda = 0.08, fifth validation fold, refined", std::move(m)};
}

ReferenceSystem streamflow_model() {
  SparseModel m = blank_model(2, {"Q_stream"}, forcings(), false);
  fill(m, {
              {"Q_stream",
               {{"P", 0.00781},
                {"T_min", -0.024},
                {"T_max", 0.0191},
                {"V", -0.0112},
                {"P Q_stream", -0.0138},
                {"P R_solar", -0.0048},
                {"Q_stream R_solar", -0.00284},
                {"P T_min", 0.00352},
                {"P T_max", -0.0144},
                {"Q_stream T_min", 0.0276},
                {"Q_stream T_max", -0.0248},
                {"P V", 0.0157},
                {"R_solar T_min", 0.009},
                {"R_solar T_max", 0.00673},
                {"R_solar V", -2.71e-4},
                {"T_min T_max", 0.00329},
                {"T_max V", 0.0223},
                {"T_min^2", -0.0159},
                {"T_max^2", -0.00754},
                {"V^2", -0.00347},
                {"1", -7.85e-4}}},
          });
  m.lambda = 0.00125;
  return {"streamflow", "streamflow into the water-supply lake, degree 2, lambda = 0.00125, refined", std::move(m)};
}

ReferenceSystem streamflow_model_with_input_derivatives() {
  SparseModel m = blank_model(2, {"Q_stream"}, forcings(), true);
  fill(m, {
              {"Q_stream",
               {{"P", 0.00619},
                {"R_solar", -0.00656},
                {"R_solar_dot", 0.0167},
                {"T_min", -0.0475},
                {"T_max", 0.0707},
                {"T_min_dot", 0.0121},
                {"T_max_dot", -0.0141},
                {"V", -0.0208},
                {"V_dot", -0.00707},
                {"P Q_stream", -0.0235},
                {"P_dot Q_stream", 0.0133},
                {"Q_stream R_solar", -0.00506},
                {"Q_stream R_solar_dot", 0.00593},
                {"P T_min", 0.0334},
                {"P T_max", -0.0497},
                {"P T_min_dot", -0.0156},
                {"P T_max_dot", -0.0343},
                {"P_dot T_min", -0.0173},
                {"P_dot T_max", 0.0314},
                {"P_dot T_min_dot", 0.0129},
                {"P_dot T_max_dot", 0.0224},
                {"Q_stream T_min", 0.00748},
                {"Q_stream T_max", -0.00738},
                {"Q_stream T_max_dot", 0.0128},
                {"P V", 0.0304},
                {"P V_dot", 0.00566},
                {"P_dot V", -0.0201},
                {"R_solar T_min", -0.0112},
                {"R_solar T_max", 0.0282},
                {"R_solar_dot T_min", 0.0253},
                {"R_solar T_max_dot", -0.0233},
                {"R_solar_dot T_max", -0.0198},
                {"R_solar_dot T_max_dot", -0.0266},
                {"Q_stream V", 0.00654},
                {"Q_stream V_dot", 0.00344},
                {"R_solar V", 0.00506},
                {"R_solar_dot V", -0.0218},
                {"R_solar V_dot", -0.0171},
                {"R_solar_dot V_dot", 0.0384},
                {"T_min T_max", 0.0211},
                {"T_min T_min_dot", 0.0572},
                {"T_min T_max_dot", -0.0239},
                {"T_max T_min_dot", -0.0462},
                {"T_max T_max_dot", 0.0579},
                {"T_min_dot T_max_dot", -0.00872},
                {"T_min V", 0.0099},
                {"T_max V", 0.0289},
                {"T_max_dot V", -0.0646},
                {"T_min V_dot", 0.0163},
                {"T_max V_dot", -0.0112},
                {"T_max_dot V_dot", 0.0623},
                {"V V_dot", 0.0189},
                {"R_solar_dot^2", -0.00742},
                {"T_min^2", -0.0195},
                {"T_max^2", -0.0158},
                {"T_max_dot^2", -0.0374},
                {"V^2", -0.0113},
                {"V_dot^2", -0.0206},
                {"1", -0.0112}}},
          });
  m.lambda = 0.00175;
  return {"streamflow-udot", "streamflow with input-derivative terms, degree 2, lambda = 0.00175, refined",
          std::move(m)};
}

ReferenceSystem forced_lotka_volterra() {
  SparseModel m = blank_model(2, {"x1", "x2"}, {"u1"}, false);
  fill(m, {
              {"x1", {{"x1", 0.5}, {"x1 x2", -0.025}}},
              {"x2", {{"x2", -0.5}, {"x1 x2", 0.005}, {"u1", 1.0}}},
          });
  return {"lotka-volterra", "predator-prey dynamics with a forcing on the predator", std::move(m)};
}

ReferenceSystem forced_lorenz() {
  SparseModel m = blank_model(2, {"x1", "x2", "x3"}, {"u1"}, false);
  fill(m, {
              {"x1", {{"x1", -10.0}, {"x2", 10.0}, {"u1", 1.0}}},
              {"x2", {{"x1", 28.0}, {"x2", -1.0}, {"x1 x3", -1.0}}},
              {"x3", {{"x1 x2", 1.0}, {"x3", -8.0 / 3.0}}},
          });
  return {"lorenz", "Lorenz system (sigma 10, rho 28, beta 8/3) forced on the first state", std::move(m)};
}

std::vector<std::string> reference_names() {
  return {"plant-0.01", "plant-0.025", "plant-0.08", "streamflow", "streamflow-udot", "lotka-volterra", "lorenz"};
}

ReferenceSystem reference_by_name(const std::string& name) {
  if (name == "plant-0.01" || name == "eq14") return plant_model_lambda_0010();
  if (name == "plant-0.025" || name == "eq15") return plant_model_lambda_0025();
  if (name == "plant-0.08" || name == "eq16") return plant_model_lambda_0080();
  if (name == "streamflow" || name == "eq17") return streamflow_model();
  if (name == "streamflow-udot" || name == "eq18") return streamflow_model_with_input_derivatives();
  if (name == "lotka-volterra") return forced_lotka_volterra();
  if (name == "lorenz") return forced_lorenz();
  throw ConfigError("unknown reference system '" + name + "'");
}

}  // namespace sindykit
