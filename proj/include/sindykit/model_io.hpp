#pragma once

#include "sindykit/regression.hpp"
#include "sindykit/validate.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace sindykit {

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;

  bool operator==(const Provenance&) const = default;
};

struct ModelFile {
  SparseModel model;
  Provenance provenance;

  bool operator==(const ModelFile&) const = default;
};

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

nlohmann::json library_to_json(const LibrarySpec& spec, const std::vector<std::string>& variable_names);

/// Terms are written as {variable: power} maps and checked against the
/// library rebuilt from (degree, constant, input-derivative flag) on load.
nlohmann::json model_to_json(const ModelFile& file);
ModelFile model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

/// One line per state, e.g. "dx1/dt = -1.16 x1 - 1.57 x2 + 0.0317 u2".
/// Coefficients use three significant digits.
std::string render_equations(const SparseModel& model);

nlohmann::json fold_report_to_json(const FoldReport& report, const std::vector<std::string>& state_names);
/// Grid, per-(lambda, variant) selections with their models inline, and the
/// overall best cell.
nlohmann::json sweep_summary_json(const SweepReport& report, const std::vector<std::string>& state_names);

}  // namespace sindykit
