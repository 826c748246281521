#pragma once

#include "sindykit/excitation.hpp"
#include "sindykit/refine.hpp"
#include "sindykit/regression.hpp"
#include "sindykit/simulate.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sindykit {

struct LambdaGridConfig {
  double start = 0.0;
  double stop = 0.1;
  double step = 0.0025;
};

struct ExcitationConfig {
  double t0 = 0.0;
  double t1 = 200.0;
  double dt = 0.02;
  /// Signals without an explicit seed get run seed + position.
  std::vector<ExcitationSignal> signals;
  std::vector<bool> explicit_seed;
};

/// Everything a run needs. Every key is optional in the JSON form; unknown
/// keys are rejected.
struct RunConfig {
  std::string data;
  std::string schema;
  std::string test_data;
  std::string model;
  std::string inputs;
  std::string reference = "plant-0.025";

  int degree = 1;
  bool include_constant = true;
  bool with_input_derivatives = false;

  double lambda = 0.025;
  LambdaGridConfig lambda_grid;
  int folds = 5;
  FitOptions fit;

  bool refine = false;
  RefineConfig refine_cfg;
  IntegratorSettings integ;

  ExcitationConfig excitation;
  std::vector<double> x0;
  std::optional<std::pair<double, double>> t_span;
  double dt = 0.02;

  std::uint64_t seed = 1;
  int threads = 0;
  std::string out = "out";

  static RunConfig defaults();
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  /// Canonical form; the config hash is computed from its compact dump.
  nlohmann::json to_json() const;
  std::string hash() const;

  /// Signals with their effective seeds.
  std::vector<ExcitationSignal> excitation_signals() const;
};

}  // namespace sindykit
