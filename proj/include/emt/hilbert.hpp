#pragma once

// Curved-space promotion and metric variation: the Hilbert energy-momentum
// tensor 2/sqrt(-g) δL/δg_{γρ} at g = η.
//
// Curved alphabet: g (covariant metric), ginv (inverse metric), sqrtg
// (sqrt(-g)) and Gamma (Christoffel symbol of the second kind, slots
// [^λ, μ, ν], symmetric in the last two). Only g carries partial
// derivatives; ∂ginv and ∂sqrtg are rewritten through ∂g on the fly.

#include "emt/dsl.hpp"
#include "emt/expr.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace emt::hilbert {

/// ∂ rules for ginv and sqrtg in terms of ∂g; g and Gamma keep their jets.
DerivativeRule curved_rule();

Factor metric(Index a, Index b);
Factor inverse_metric(Index a, Index b);
Factor christoffel(Index upper, Index a, Index b);

/// ½ ginv^{λm} (∂_a g_{mb} + ∂_b g_{ma} - ∂_m g_{ab}).
TensorExpr christoffel_definition(const Index& upper, const Index& a, const Index& b);
/// Replaces every Gamma (and its derivatives) by its definition.
TensorExpr expand_christoffel(const TensorExpr& e);

/// ∇_mu of an expression whose free indices are all covariant.
TensorExpr covariant_derivative(const TensorExpr& e, const Index& mu);

/// Field strength or curvature with ∂ -> ∇, covariant indices, Gamma unexpanded.
/// Rank 1: ∇_μA_ν - ∇_νA_μ. Rank 2: ½(∇_μ∇_α h_{νβ} + ∇_ν∇_β h_{μα}
/// - ∇_μ∇_β h_{να} - ∇_ν∇_α h_{μβ}) with free μ,ν,α,β. Other ranks throw.
TensorExpr covariant_curvature(const std::string& field, int rank);

// ---- Kronecker combinations -------------------------------------------------

/// Δ^{γρ}_{να} = ½(δ^γ_ν δ^ρ_α + δ^γ_α δ^ρ_ν).
TensorExpr sym_delta(const std::string& g, const std::string& r, const std::string& n,
                     const std::string& a);
/// Δ̄^{ωγρ}_{mνα} = -δ^ω_m Δ^{γρ}_{να} + δ^ω_α Δ^{γρ}_{mν} + δ^ω_ν Δ^{γρ}_{mα}.
TensorExpr delta_bar(const std::string& w, const std::string& g, const std::string& r,
                     const std::string& m, const std::string& n, const std::string& a);
/// Δ̂^{ξωγρ}_{ambc} = -Δ^{ξω}_{am} Δ^{γρ}_{bc} + Δ^{ξω}_{ac} Δ^{γρ}_{mb}
///                    + Δ^{ξω}_{ab} Δ^{γρ}_{mc}.
TensorExpr delta_hat(const std::string& x, const std::string& w, const std::string& g,
                     const std::string& r, const std::string& a, const std::string& m,
                     const std::string& b, const std::string& c);

// ---- pipeline ---------------------------------------------------------------

/// Number of metric-derivative factors (∂g, ∂∂g, Gamma, ∂Gamma) in a term.
int metric_grade(const Term& t);

struct CurvedLagrangian {
  TensorExpr expr;
  /// term count per grade
  std::map<int, std::size_t> grades() const;
};

/// sqrt(-g) times the Lagrangian with ∂ -> ∇ (in source order, outermost
/// derivative outermost), η -> g/ginv and every raised index raised by ginv.
/// Gamma stays unexpanded. With `max_grade`, terms above it are dropped as
/// they arise (grades never decrease under products or derivatives, so this
/// equals pruning afterwards). Throws UsageError when the Lagrangian applies
/// two or more derivatives directly to a field of nonzero rank, since the
/// ordering of ∇ would be ambiguous; write such terms through macros.
CurvedLagrangian promote_to_curved(const dsl::Program& p, Dim dim = 4,
                                   std::optional<int> max_grade = std::nullopt);

/// Drops terms with more than `max_metric_derivative_use` metric-derivative
/// factors. With 1 this keeps exactly what can survive δ/δg at g = η.
CurvedLagrangian prune_flat_vanishing(const CurvedLagrangian& c, int max_metric_derivative_use);

/// g -> η, ginv -> η, sqrtg -> 1, ∂g and Gamma -> 0, canonicalized.
TensorExpr flat_restriction(const TensorExpr& e);

enum class VariationMode {
  /// δL/δg_{γρ} in the curved alphabet.
  Full,
  /// Each Euler piece is restricted to g = η before its outer derivatives;
  /// returns the flat restriction of δL/δg_{γρ} directly.
  FlatTarget,
};

/// ∂L/∂g - ∂_ω ∂L/∂(∂_ω g) + ∂_ξ∂_ω ∂L/∂(∂_ξ∂_ω g), free indices ^gamma ^rho.
/// Gamma is expanded first.
TensorExpr metric_variation(const CurvedLagrangian& c, VariationMode mode);

/// The first Euler piece only, ∂L/∂g_{γρ} (ginv and sqrtg through g).
TensorExpr metric_partial(const TensorExpr& L);

struct HilbertOptions {
  Dim dim = 4;
  int max_use = 1;
  VariationMode mode = VariationMode::FlatTarget;
  /// Called with "promoted", "pruned", "varied" and "flat".
  std::function<void(std::string_view, const TensorExpr&)> on_stage;
};

/// T_H^{γρ}, canonical, free indices ^gamma ^rho.
TensorExpr hilbert_emt(const dsl::Program& p, const HilbertOptions& opt = {});

}  // namespace emt::hilbert
