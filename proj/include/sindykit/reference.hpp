#pragma once

#include "sindykit/regression.hpp"

#include <string>
#include <utility>
#include <vector>

namespace sindykit {

/// A closed-form polynomial ODE shipped as ground truth. The right-hand side
/// is the embedded SparseModel.
struct ReferenceSystem {
  std::string name;
  std::string description;
  SparseModel model;

  int n_states() const { return model.spec.n_states; }
  int n_inputs() const { return model.spec.n_inputs; }
};

/// Six-state, two-input linear plant models (states x1..x6 are molar flow
/// rates, u1 soybean-oil feed, u2 wash water), recovered at lambda = 0.01,
/// 0.025 and 0.08.
ReferenceSystem plant_model_lambda_0010();
ReferenceSystem plant_model_lambda_0025();
ReferenceSystem plant_model_lambda_0080();

/// One-state quadratic streamflow models over precipitation, solar radiation,
/// daily min/max temperature and vapour pressure deficit; the second variant
/// also uses the time derivatives of those forcings.
ReferenceSystem streamflow_model();
ReferenceSystem streamflow_model_with_input_derivatives();

/// Predator-prey with a forcing on the predator, and the Lorenz system forced
/// on its first state.
ReferenceSystem forced_lotka_volterra();
ReferenceSystem forced_lorenz();

/// Registry names, canonical first: "plant-0.01", "plant-0.025",
/// "plant-0.08", "streamflow", "streamflow-udot", "lotka-volterra", "lorenz".
/// The short aliases "eq14" ... "eq18" are accepted by reference_by_name.
std::vector<std::string> reference_names();
ReferenceSystem reference_by_name(const std::string& name);

/// Sets Xi(term, state) where `term` is a label such as "x1", "1",
/// "P Q_stream" or "T_max^2" (factor order is irrelevant). Throws
/// ParameterError for unknown labels or a term set twice.
void set_coefficient(SparseModel& model, const std::string& state, const std::string& term, double value);

/// Index of the term matching a label, or -1.
Index find_term(const SparseModel& model, const std::string& term);

}  // namespace sindykit
