#pragma once

// Exact numeric oracle over random polynomial field configurations, and
// property checks on candidate energy-momentum tensors.

#include "emt/dsl.hpp"
#include "emt/expr.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace emt::verify {

inline constexpr int kDim = 4;
/// Oracle metric signature diag(+1,-1,-1,-1).
inline constexpr std::array<int, kDim> kSignature{1, -1, -1, -1};

using Point = std::array<std::int64_t, kDim>;

struct Monomial {
  std::array<std::uint8_t, kDim> exps;
  std::int64_t coeff;
};
using Polynomial = std::vector<Monomial>;

struct FieldData {
  int rank = 0;
  SymmetryKind symmetry = SymmetryKind::None;
  /// Covariant components, flattened as sum_i idx_i * 4^i.
  std::vector<Polynomial> components;
};

struct FieldConfig {
  std::uint64_t seed = 0;
  int degree = 0;
  std::map<std::string, FieldData> fields;
  std::map<std::string, Rational> params;
};

/// Field declarations covering every non-builtin head of the expressions
/// (rank and whole-range symmetry read off the factors).
std::vector<dsl::FieldSpec> infer_fields(const std::vector<const TensorExpr*>& es);
std::vector<std::string> infer_params(const std::vector<const TensorExpr*>& es);

/// Deterministic random configuration: integer coefficients in [-3, 3] on
/// every monomial of degree <= `degree`; symmetric fields mirrored,
/// antisymmetric ones negated. Constant-kind fields and the translation
/// parameter `dx` get degree 0. Unset parameters draw small nonzero
/// rationals. Throws UsageError if degree < 2 and max_jet_order >= 2.
FieldConfig sample_config(std::uint64_t seed, int degree,
                          const std::vector<dsl::FieldSpec>& fields,
                          const std::vector<std::string>& params = {},
                          int max_jet_order = 2);

/// Configuration with `vector_field` set to the gradient of a random scalar
/// (pure gauge); other fields as in sample_config.
FieldConfig pure_gauge_config(std::uint64_t seed, int degree,
                              const std::string& vector_field,
                              const std::vector<dsl::FieldSpec>& fields);

Point sample_point(std::uint64_t seed);

/// Exact value at a point with the free indices (sorted by name) bound to
/// `free_values`. Throws UsageError on symbolic D or unknown heads.
Rational evaluate(const TensorExpr& e, const FieldConfig& cfg, const Point& x,
                  const std::vector<int>& free_values = {});

struct Witness {
  std::uint64_t config_seed;
  Point point;
  std::vector<int> indices;
  Rational value;
};

struct OracleReport {
  bool equal = true;
  int trials = 0;
  std::uint64_t seed = 0;
  std::optional<Witness> witness;

  nlohmann::json to_json() const;
};

struct OracleOptions {
  int trials = 20;
  std::uint64_t seed = 1;
  int degree = 3;
  std::vector<dsl::FieldSpec> fields;  // inferred when empty
  std::map<std::string, Rational> params;
  /// When set, this rank-1 field is sampled as a pure gradient.
  std::optional<std::string> pure_gauge_field;
};

/// Evaluates a - b (free indices of b aligned to a) over `trials` random
/// configurations and points, all free-index assignments each; the first
/// nonzero value is reported as the witness.
OracleReport oracle_equal(const TensorExpr& a, const TensorExpr& b,
                          const OracleOptions& opt = {});
/// Same with b = 0.
OracleReport oracle_zero(const TensorExpr& e, const OracleOptions& opt = {});

enum class Property { Symmetric, Traceless, GaugeInvariant, Conserved };
enum class Mode { Symbolic, Numeric };

Property parse_property(std::string_view name);
std::string_view property_name(Property p);

struct CheckContext {
  Dim dim = 4;
  Mode mode = Mode::Symbolic;
  /// h -> h + shift, for gauge_invariant.
  std::optional<dsl::VariationRule> gauge_rule;
  OracleOptions oracle;
};

struct PropertyReport {
  Property property;
  Mode mode;
  bool pass = false;
  /// Symbolic residual (canonical); empty on pass.
  TensorExpr residual;
  /// Numeric counterexample, when one was found.
  std::optional<Witness> witness;
  /// For a nonzero symbolic residual: "oracle_zero" when it vanishes on every
  /// sampled configuration at D=4 (an identity the canonicalizer does not
  /// reach), "nonzero" otherwise.
  std::string classification;
  int configurations = 0;

  nlohmann::json to_json() const;
};

/// T must carry exactly two free upper indices.
PropertyReport check_property(const TensorExpr& t, Property p,
                              const CheckContext& ctx);

}  // namespace emt::verify
