#pragma once

#include "emt/expr.hpp"

#include <span>
#include <string>

namespace emt {

/// Returns the flat sum of monomials for a product of sums. With a single
/// operand this validates and drops zero-coefficient terms.
TensorExpr expand(std::span<const TensorExpr> factors);
TensorExpr expand(const TensorExpr& e);

/// Deterministic canonical form.
///
/// Per term: Kronecker deltas and (in flat terms) eta factors are contracted
/// into their partners, eta^a_a and delta^a_a become D, partial derivatives
/// and symmetric slot ranges are sorted (antisymmetric ranges flip the sign),
/// factors are ordered and dummy indices relabeled to the lexicographically
/// minimal encoding found by colour refinement with individualization.
/// Dummy variance is normalized (first occurrence lower) only in terms free of
/// curved-metric heads. Identical terms are merged and zeros dropped.
///
/// Distinct terms are canonicalized in parallel when EMT_THREADS allows it;
/// the result does not depend on the thread count.
TensorExpr canonicalize(const TensorExpr& e);

/// Canonical single term, or std::nullopt when it vanishes.
std::optional<Term> canonicalize_term(const Term& t, Dim dim);

/// Stable text key of a canonical term (parameters and factors, no
/// coefficient).
std::string term_key(const Term& t);

/// True iff canonicalize(a - b) has no terms. Free indices of `b` are renamed
/// to those of `a` position by position (both sorted by name); a mismatch in
/// count or variance is a UsageError.
bool equal(const TensorExpr& a, const TensorExpr& b);

/// `b` with its free indices renamed onto those of `a` (see equal()).
TensorExpr align_free_indices(const TensorExpr& a, const TensorExpr& b);

/// Replaces every occurrence of `field` by `rule`. The rule's free indices are
/// the placeholders, matched to the replaced factor's slots in order (a
/// variance mismatch inserts eta). Derivatives on the replaced factor are
/// applied to the rule. The result is expanded but not canonicalized. Throws
/// UsageError on an arity mismatch.
TensorExpr substitute(const TensorExpr& e, const std::string& field,
                      const TensorExpr& rule,
                      std::span<const Index> placeholders);

}  // namespace emt
