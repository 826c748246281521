#pragma once

#include "sindykit/dataset.hpp"

#include <span>
#include <string>
#include <vector>

namespace sindykit {

enum class VariableKind { State, Input, InputDerivative };

/// One column a library term can draw from. `index` is zero-based within its
/// kind, so the derivative of input 2 is {InputDerivative, 1}.
struct Variable {
  VariableKind kind = VariableKind::State;
  int index = 0;

  bool operator==(const Variable&) const = default;
};

/// Only polynomial terms are built; the tag marks where other function
/// families would plug in.
enum class TermKind { Polynomial };

/// A monomial over the library variables. `powers[v]` is the exponent of
/// `LibrarySpec::variables[v]`; all-zero powers is the constant term.
struct TermDescriptor {
  std::vector<int> powers;
  TermKind kind = TermKind::Polynomial;

  int degree() const;
  bool is_constant() const { return degree() == 0; }
  bool operator==(const TermDescriptor&) const = default;
};

struct LibrarySpec {
  int degree = 1;
  bool include_constant = true;
  int n_states = 0;
  int n_inputs = 0;
  bool with_input_derivatives = false;
  /// States, then inputs, then input derivatives.
  std::vector<Variable> variables;
  /// Graded lexicographic order, constant first when included.
  std::vector<TermDescriptor> terms;

  Index size() const { return static_cast<Index>(terms.size()); }
  /// Width of the augmented input vector: q, or 2q with derivatives.
  int augmented_width() const { return with_input_derivatives ? 2 * n_inputs : n_inputs; }

  bool operator==(const LibrarySpec&) const = default;
};

LibrarySpec build_spec(int n_states, int n_inputs, int degree, bool include_constant = true,
                       bool with_input_derivatives = false);

/// Display names for the library variables, e.g. {"x1", "u1", "u1_dot"}.
std::vector<std::string> variable_names(const LibrarySpec& spec, const std::vector<std::string>& state_names,
                                        const std::vector<std::string>& input_names);

/// "1", "x1", "x1 x2", "T_max^2".
std::string term_label(const TermDescriptor& term, const std::vector<std::string>& names);

/// U or [U, dU/dt].
struct AugmentedInputs {
  MatrixXd values;
  bool includes_derivatives = false;
};

AugmentedInputs augment_inputs(const TimeSeriesData& data, bool with_derivatives,
                               DiffScheme scheme = DiffScheme::Central);

/// Theta(X, U_aug): m x |terms|, columns in `spec.terms` order.
MatrixXd evaluate(const LibrarySpec& spec, const MatrixXd& X, const AugmentedInputs& inputs);

/// Single-sample evaluate; `row` must have |terms| entries.
void evaluate_point(const LibrarySpec& spec, std::span<const double> x, std::span<const double> u_aug,
                    std::span<double> row);
VectorXd evaluate_point(const LibrarySpec& spec, const VectorXd& x, const VectorXd& u_aug);

}  // namespace sindykit
