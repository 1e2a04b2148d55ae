#pragma once

// Comparison of a computed quadratic-curvature Hilbert tensor against the
// hand-derived coefficients of its eta^{γρ}-proportional part.

#include "emt/dsl.hpp"
#include "emt/expr.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace emt::hilbert {

/// Terms of `t` carrying the bare factor eta[^a,^b], with that factor removed.
TensorExpr eta_part(const TensorExpr& t, const std::string& a = "gamma",
                    const std::string& b = "rho");

struct LinearFit {
  std::vector<Rational> coeffs;
  /// target - Σ coeffs·basis, canonical
  TensorExpr residual;
  /// false when the basis is linearly dependent (free coefficients set to 0)
  bool determined = true;

  bool exact() const { return residual.is_zero(); }
};

/// Exact solution of target = Σ c_k basis_k over canonical term keys.
LinearFit fit_coefficients(const TensorExpr& target, const std::vector<TensorExpr>& basis);

struct GroupComparison {
  std::string coupling;   // parameter name, or "" for fixed couplings
  std::string structure;  // definition name in the structures file
  Rational printed;
  Rational computed;
  /// 1 or 2; linear groups change sign with the curvature convention
  int curvature_degree = 2;

  bool matches() const { return printed == computed; }
};

struct PathCertificate {
  std::string path;  // e.g. "max_use=2/flat-target"
  bool agrees = false;
  int trials = 0;
};

struct DiscrepancyReport {
  /// eta part with A, B, C free
  std::vector<GroupComparison> eta_groups;
  LinearFit eta_fit;
  /// eta part of T_H - T_N at the Gauss-Bonnet couplings
  std::vector<GroupComparison> difference_groups;
  LinearFit difference_fit;
  /// oracle agreement of the fitted decompositions with the computed parts
  bool fits_oracle_checked = false;
  std::vector<PathCertificate> paths;

  /// A·Riem², B·Ric², C·R² coefficients all match.
  bool first_line_exact() const;
  bool all_groups_match() const;
  bool certified() const;
  nlohmann::json to_json() const;
};

struct DiscrepancyInputs {
  const dsl::Program* theory = nullptr;       // free couplings A, B, C
  const dsl::Program* structures = nullptr;   // Riem2, ..., EtaPart, U1..U4, Difference
  TensorExpr noether;                         // the Noether tensor at GB couplings
  std::vector<std::pair<std::string, Rational>> couplings;
  int trials = 20;
  std::uint64_t seed = 1;
  /// also run the slow unpruned full-variation path
  bool include_slow_paths = false;
};

DiscrepancyReport gauss_bonnet_discrepancy(const DiscrepancyInputs& in);

}  // namespace emt::hilbert
