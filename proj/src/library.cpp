#include "sindykit/library.hpp"

#include "sindykit/errors.hpp"

#include <numeric>

namespace sindykit {

namespace {

// Appends every multiset of size `remaining` drawn from variables >= `first`,
// in lexicographic order of the sorted index sequence.
void enumerate_degree(int n_vars, int first, int remaining, std::vector<int>& powers,
                      std::vector<TermDescriptor>& out) {
  if (remaining == 0) {
    out.push_back({powers, TermKind::Polynomial});
    return;
  }
  for (int v = first; v < n_vars; ++v) {
    ++powers[static_cast<std::size_t>(v)];
    enumerate_degree(n_vars, v, remaining - 1, powers, out);
    --powers[static_cast<std::size_t>(v)];
  }
}

double value_of(const LibrarySpec& spec, const Variable& v, std::span<const double> x, std::span<const double> u) {
  switch (v.kind) {
    case VariableKind::State: return x[static_cast<std::size_t>(v.index)];
    case VariableKind::Input: return u[static_cast<std::size_t>(v.index)];
    case VariableKind::InputDerivative: return u[static_cast<std::size_t>(spec.n_inputs + v.index)];
  }
  return 0.0;
}

}  // namespace

int TermDescriptor::degree() const { return std::accumulate(powers.begin(), powers.end(), 0); }

LibrarySpec build_spec(int n_states, int n_inputs, int degree, bool include_constant, bool with_input_derivatives) {
  if (degree < 1) throw ParameterError("library degree must be >= 1, got " + std::to_string(degree));
  if (n_states < 1) throw ParameterError("library needs at least one state");
  if (n_inputs < 0) throw ParameterError("negative input count");

  LibrarySpec spec;
  spec.degree = degree;
  spec.include_constant = include_constant;
  spec.n_states = n_states;
  spec.n_inputs = n_inputs;
  spec.with_input_derivatives = with_input_derivatives && n_inputs > 0;
  for (int i = 0; i < n_states; ++i) spec.variables.push_back({VariableKind::State, i});
  for (int i = 0; i < n_inputs; ++i) spec.variables.push_back({VariableKind::Input, i});
  if (spec.with_input_derivatives) {
    for (int i = 0; i < n_inputs; ++i) spec.variables.push_back({VariableKind::InputDerivative, i});
  }

  const int p = static_cast<int>(spec.variables.size());
  std::vector<int> powers(static_cast<std::size_t>(p), 0);
  if (include_constant) spec.terms.push_back({powers, TermKind::Polynomial});
  for (int d = 1; d <= degree; ++d) enumerate_degree(p, 0, d, powers, spec.terms);
  return spec;
}

std::vector<std::string> variable_names(const LibrarySpec& spec, const std::vector<std::string>& state_names,
                                        const std::vector<std::string>& input_names) {
  if (static_cast<int>(state_names.size()) != spec.n_states || static_cast<int>(input_names.size()) != spec.n_inputs) {
    throw ShapeError("name lists do not match the library's state/input counts");
  }
  std::vector<std::string> names;
  for (const Variable& v : spec.variables) {
    switch (v.kind) {
      case VariableKind::State: names.push_back(state_names[static_cast<std::size_t>(v.index)]); break;
      case VariableKind::Input: names.push_back(input_names[static_cast<std::size_t>(v.index)]); break;
      case VariableKind::InputDerivative:
        names.push_back(input_names[static_cast<std::size_t>(v.index)] + "_dot");
        break;
    }
  }
  return names;
}

std::string term_label(const TermDescriptor& term, const std::vector<std::string>& names) {
  std::string label;
  for (std::size_t v = 0; v < term.powers.size(); ++v) {
    const int p = term.powers[v];
    if (p == 0) continue;
    if (!label.empty()) label += ' ';
    label += names[v];
    if (p > 1) label += "^" + std::to_string(p);
  }
  return label.empty() ? "1" : label;
}

AugmentedInputs augment_inputs(const TimeSeriesData& data, bool with_derivatives, DiffScheme scheme) {
  AugmentedInputs out;
  out.includes_derivatives = with_derivatives && data.n_inputs() > 0;
  if (!out.includes_derivatives) {
    out.values = data.U;
    return out;
  }
  const MatrixXd du = differentiate(data, DiffTarget::Inputs, scheme).values;
  out.values.resize(data.rows(), 2 * data.n_inputs());
  out.values << data.U, du;
  return out;
}

MatrixXd evaluate(const LibrarySpec& spec, const MatrixXd& X, const AugmentedInputs& inputs) {
  if (X.cols() != spec.n_states) {
    throw ShapeError("state matrix has " + std::to_string(X.cols()) + " columns, library expects " +
                     std::to_string(spec.n_states));
  }
  if (inputs.values.cols() != spec.augmented_width() || inputs.values.rows() != X.rows()) {
    throw ShapeError("input matrix is " + std::to_string(inputs.values.rows()) + "x" +
                     std::to_string(inputs.values.cols()) + ", library expects " + std::to_string(X.rows()) + "x" +
                     std::to_string(spec.augmented_width()));
  }
  const Index m = X.rows();
  MatrixXd theta(m, spec.size());
  for (Index j = 0; j < spec.size(); ++j) {
    const TermDescriptor& term = spec.terms[static_cast<std::size_t>(j)];
    VectorXd col = VectorXd::Ones(m);
    for (std::size_t v = 0; v < term.powers.size(); ++v) {
      const int p = term.powers[v];
      if (p == 0) continue;
      const Variable& var = spec.variables[v];
      const auto source = var.kind == VariableKind::State
                              ? X.col(var.index)
                              : inputs.values.col(var.kind == VariableKind::Input ? var.index
                                                                                  : spec.n_inputs + var.index);
      for (int k = 0; k < p; ++k) col.array() *= source.array();
    }
    theta.col(j) = col;
  }
  return theta;
}

void evaluate_point(const LibrarySpec& spec, std::span<const double> x, std::span<const double> u_aug,
                    std::span<double> row) {
  if (static_cast<int>(x.size()) != spec.n_states || static_cast<int>(u_aug.size()) != spec.augmented_width() ||
      static_cast<Index>(row.size()) != spec.size()) {
    throw ShapeError("evaluate_point: argument sizes do not match the library");
  }
  for (std::size_t j = 0; j < spec.terms.size(); ++j) {
    const TermDescriptor& term = spec.terms[j];
    double acc = 1.0;
    for (std::size_t v = 0; v < term.powers.size(); ++v) {
      if (term.powers[v] == 0) continue;
      // Same multiplication order as evaluate() so rows agree bitwise.
      const double value = value_of(spec, spec.variables[v], x, u_aug);
      for (int k = 0; k < term.powers[v]; ++k) acc *= value;
    }
    row[j] = acc;
  }
}

VectorXd evaluate_point(const LibrarySpec& spec, const VectorXd& x, const VectorXd& u_aug) {
  VectorXd row(spec.size());
  evaluate_point(spec, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                 std::span<const double>(u_aug.data(), static_cast<std::size_t>(u_aug.size())),
                 std::span<double>(row.data(), static_cast<std::size_t>(row.size())));
  return row;
}

}  // namespace sindykit
