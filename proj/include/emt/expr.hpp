#pragma once

// Tensor-expression data model: abstract-index monomials with exact rational
// coefficients, commutative scalar parameters and partial-derivative jets.

#include "emt/rational.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace emt {

// Reserved head and parameter names shared by every module.
namespace heads {
inline constexpr std::string_view kEta = "eta";
inline constexpr std::string_view kDelta = "delta";
inline constexpr std::string_view kDx = "dx";  // constant translation parameter
inline constexpr std::string_view kMetric = "g";
inline constexpr std::string_view kInverseMetric = "ginv";
inline constexpr std::string_view kSqrtMinusG = "sqrtg";
inline constexpr std::string_view kChristoffel = "Gamma";
}  // namespace heads

/// Symbolic spacetime dimension, carried as a commutative parameter.
inline constexpr std::string_view kDimParam = "D";

/// Heads whose partial derivatives vanish identically.
bool is_constant_head(std::string_view head);
/// Heads of the curved-space alphabet. Terms containing them are never
/// raised/lowered implicitly by the canonicalizer.
bool is_metric_head(std::string_view head);

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Variance : std::uint8_t { Lower, Upper };

constexpr Variance flip(Variance v) {
  return v == Variance::Lower ? Variance::Upper : Variance::Lower;
}

struct Index {
  std::string name;
  Variance var = Variance::Lower;

  friend bool operator==(const Index&, const Index&) = default;
  friend auto operator<=>(const Index&, const Index&) = default;
};

inline Index lo(std::string name) { return {std::move(name), Variance::Lower}; }
inline Index up(std::string name) { return {std::move(name), Variance::Upper}; }

enum class SymmetryKind : std::uint8_t { None, Symmetric, Antisymmetric };

/// Permutation symmetry over the contiguous slot range [begin, end).
struct SlotSymmetry {
  SymmetryKind kind = SymmetryKind::None;
  std::uint8_t begin = 0;
  std::uint8_t end = 0;

  static SlotSymmetry none() { return {}; }
  static SlotSymmetry whole(SymmetryKind kind, std::size_t rank) {
    if (kind == SymmetryKind::None || rank < 2) return {};
    return {kind, 0, static_cast<std::uint8_t>(rank)};
  }

  friend bool operator==(const SlotSymmetry&, const SlotSymmetry&) = default;
  friend auto operator<=>(const SlotSymmetry&, const SlotSymmetry&) = default;
};

/// Symmetry assumed for a head when a serialized factor does not state one.
SlotSymmetry default_symmetry(std::string_view head, std::size_t rank);

struct Factor {
  std::string head;
  std::vector<Index> derivs;  // partial derivatives, commuting
  std::vector<Index> slots;
  SlotSymmetry sym;

  friend bool operator==(const Factor&, const Factor&) = default;
  friend auto operator<=>(const Factor&, const Factor&) = default;
};

struct Term {
  Rational coeff{1};
  std::vector<std::string> params;  // sorted multiset
  std::vector<Factor> factors;
};

bool operator==(const Term& a, const Term& b);

/// Fixed spacetime dimension; std::nullopt keeps D symbolic.
using Dim = std::optional<int>;

struct TensorExpr {
  std::vector<Term> terms;
  Dim dim;

  bool is_zero() const { return terms.empty(); }
};

// ---- builders ---------------------------------------------------------------

Factor make_factor(std::string head, std::vector<Index> slots,
                   std::vector<Index> derivs = {},
                   SlotSymmetry sym = SlotSymmetry::none());
Factor eta_factor(Index a, Index b);
/// Kronecker delta; slots are stored upper first.
Factor delta_factor(Index upper, Index lower);

TensorExpr zero(Dim dim = std::nullopt);
TensorExpr scalar(const Rational& value);
TensorExpr parameter(std::string name);
TensorExpr monomial(std::vector<Factor> factors, Rational coeff = 1);
TensorExpr from_term(Term t);

TensorExpr operator+(const TensorExpr& a, const TensorExpr& b);
TensorExpr operator-(const TensorExpr& a, const TensorExpr& b);
TensorExpr operator-(const TensorExpr& a);
TensorExpr& operator+=(TensorExpr& a, const TensorExpr& b);
TensorExpr operator*(const Rational& s, const TensorExpr& a);

/// Distributes the product. Dummy indices of either operand that collide with
/// names used by the other are renamed to fresh names; matching free indices
/// of opposite variance become contractions.
TensorExpr operator*(const TensorExpr& a, const TensorExpr& b);

Term multiply(const Term& a, const Term& b);

// ---- index bookkeeping -------------------------------------------------------

/// Globally unique internal index name ("_k<n>"); never produced by parsing.
std::string fresh_name();

/// Indices appearing exactly once, sorted by name.
std::vector<Index> free_indices(const Term& t);
/// Free indices of the first term (all terms must agree after validation).
std::vector<Index> free_indices(const TensorExpr& e);
std::set<std::string> index_names(const Term& t);
std::set<std::string> dummy_names(const Term& t);

/// Checks index wiring: every name appears once, or twice with opposite
/// variance; slot counts match declared symmetry ranges. Throws
/// ValidationError naming the offending index.
void validate(const Term& t);
/// Also checks that every term carries the same free-index set.
void validate(const TensorExpr& e);

/// Renames index names (variance untouched) by exact-name lookup.
Term rename_indices(const Term& t,
                    const std::function<std::optional<std::string>(
                        const std::string&)>& mapping);
/// Renames every dummy of `t` to a fresh internal name.
Term freshen_dummies(const Term& t);
TensorExpr freshen_dummies(const TensorExpr& e);
/// Renames free index `from` to `to` in every term.
TensorExpr rename_free(const TensorExpr& e, const std::string& from,
                       const std::string& to);

/// Replaces scalar parameters by rational values; unknown parameters stay.
TensorExpr substitute_params(
    const TensorExpr& e,
    const std::vector<std::pair<std::string, Rational>>& values);

/// Optional per-head derivative rule: returns ∂_idx(factor) as an
/// expression, or std::nullopt to append the index to the factor's jet.
using DerivativeRule =
    std::function<std::optional<TensorExpr>(const Factor&, const Index&)>;

/// Leibniz-rule partial derivative. Constant heads differentiate to zero.
/// A dummy of `e` that shares the derivative's name is freshened first; a
/// free index of the same name (opposite variance) becomes a contraction.
TensorExpr differentiate(const TensorExpr& e, const Index& idx,
                         const DerivativeRule& rule = {});

}  // namespace emt
