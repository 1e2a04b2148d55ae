#pragma once

// Jet-space derivatives, the Euler-Lagrange operator and Noether currents for
// Lagrangians of at most second derivative order.

#include "emt/dsl.hpp"
#include "emt/expr.hpp"

#include <string>
#include <vector>

namespace emt::variational {

inline constexpr int kMaxDerivativeOrder = 2;

/// ∂..∂ Φ with covariant derivative and slot indices; the derivative of a
/// Lagrangian with respect to it carries the same names upstairs.
struct JetVariable {
  std::string field;
  std::vector<Index> derivs;
  std::vector<Index> slots;
};

/// Highest number of derivatives on any `field` factor (-1 if absent).
int derivative_order(const TensorExpr& e, const std::string& field);

/// Formal partial derivative, symmetrized over the derivative indices and
/// over the field's symmetric (or antisymmetric) slot range. Occurrences of
/// the field with raised indices are lowered through eta first, so in curved
/// terms the field must appear fully covariant. Returns the canonical form.
/// Throws UsageError if the variable has more than two derivatives or if its
/// indices are not covariant.
TensorExpr jet_derivative(const TensorExpr& L, const JetVariable& v);

/// Default names for the slots of a rank-`rank` field: nu, alpha, beta, ...
std::vector<std::string> slot_names(int rank);

/// ∂L/∂Φ - ∂_μ ∂L/∂(∂_μΦ) + ∂_μ∂_ω ∂L/∂(∂_μ∂_ωΦ), free indices `slots`
/// (upper). Throws UsageError on derivative order above two.
TensorExpr euler_lagrange(const TensorExpr& L, const std::string& field, int rank,
                          std::vector<std::string> slots = {});

/// Leibniz expansion of ∂_idx e. The name may only reappear as a free index
/// of opposite variance (a divergence); any other reuse is a UsageError.
TensorExpr total_derivative(const TensorExpr& e, const Index& idx);

/// δΦ_{slots} = -∂^β Φ_{slots} dx_β, with the field's symmetry.
dsl::VariationRule canonical_rule(const dsl::FieldSpec& field);

/// Rules for every field of the program: its `delta` statement when present,
/// otherwise the canonical translation.
std::vector<dsl::VariationRule> rules_for(const dsl::Program& p, Dim dim = std::nullopt);

/// η^{γν} L dx_ν + ∂L/∂(∂_γΦ) δΦ + ∂L/∂(∂_γ∂_ωΦ) ∂_ωδΦ
///   - [∂_ω ∂L/∂(∂_γ∂_ωΦ)] δΦ, summed over fields, canonical, free index ^gamma.
/// Throws UsageError when a non-reserved head of L has no rule.
TensorExpr noether_current(const TensorExpr& L,
                           const std::vector<dsl::VariationRule>& rules);

/// Coefficient T^{γρ} of dx_ρ in the current.
TensorExpr noether_emt(const TensorExpr& L,
                       const std::vector<dsl::VariationRule>& rules);

/// Σ EL(Φ)·δΦ + ∂_γ J^γ, canonical; zero whenever the rules leave L
/// invariant up to the translation of L itself.
TensorExpr noether_identity_residual(const TensorExpr& L,
                                     const std::vector<dsl::VariationRule>& rules);

}  // namespace emt::variational
