#include "emt/canonicalize.hpp"
#include "emt/json_io.hpp"
#include "emt/verify.hpp"

namespace emt::verify {

Property parse_property(std::string_view name) {
  if (name == "symmetric") return Property::Symmetric;
  if (name == "traceless") return Property::Traceless;
  if (name == "gauge_invariant" || name == "gauge-invariant") return Property::GaugeInvariant;
  if (name == "conserved") return Property::Conserved;
  throw UsageError("unknown property '" + std::string(name) + "'");
}

std::string_view property_name(Property p) {
  switch (p) {
    case Property::Symmetric: return "symmetric";
    case Property::Traceless: return "traceless";
    case Property::GaugeInvariant: return "gauge_invariant";
    case Property::Conserved: return "conserved";
  }
  return "?";
}

nlohmann::json PropertyReport::to_json() const {
  nlohmann::json j{{"property", property_name(property)},
                   {"mode", mode == Mode::Symbolic ? "symbolic" : "numeric"},
                   {"verdict", pass ? "pass" : "fail"}};
  if (!residual.is_zero()) {
    j["residual_terms"] = residual.terms.size();
    j["residual"] = emt::to_json(residual);
  }
  if (!classification.empty()) j["classification"] = classification;
  if (configurations) j["configurations"] = configurations;
  if (witness) {
    j["witness"] = {{"config_seed", witness->config_seed},
                    {"point", witness->point},
                    {"indices", witness->indices},
                    {"value", to_string(witness->value)}};
  }
  return j;
}

namespace {

TensorExpr swap_free(const TensorExpr& t, const std::string& a, const std::string& b) {
  const std::string tmp = fresh_name();
  return rename_free(rename_free(rename_free(t, a, tmp), b, a), tmp, b);
}

TensorExpr residual_of(const TensorExpr& t, Property p, const CheckContext& ctx,
                       const std::vector<Index>& free) {
  const auto& g = free[0].name;
  const auto& r = free[1].name;
  switch (p) {
    case Property::Symmetric:
      return t - swap_free(t, g, r);
    case Property::Traceless:
      return monomial({eta_factor(lo(g), lo(r))}) * t;
    case Property::GaugeInvariant: {
      if (!ctx.gauge_rule) throw UsageError("gauge_invariant needs a gauge rule");
      const auto& rule = *ctx.gauge_rule;
      Factor f = make_factor(rule.field, rule.placeholders);
      // whole-range symmetry of the field as it appears in t
      for (const auto& term : t.terms)
        for (const auto& x : term.factors)
          if (x.head == rule.field) f.sym = x.sym;
      TensorExpr shifted = monomial({f}) + rule.expr;
      return substitute(t, rule.field, shifted, rule.placeholders) - t;
    }
    case Property::Conserved:
      return differentiate(t, lo(g));
  }
  return t;
}

}  // namespace

PropertyReport check_property(const TensorExpr& t, Property p, const CheckContext& ctx) {
  const auto free = free_indices(t);
  if (!t.is_zero() && (free.size() != 2 || free[0].var != Variance::Upper ||
                       free[1].var != Variance::Upper))
    throw UsageError("property checks need exactly two free upper indices");
  PropertyReport rep;
  rep.property = p;
  rep.mode = ctx.mode;
  if (t.is_zero()) {
    rep.pass = true;
    return rep;
  }
  TensorExpr res = residual_of(t, p, ctx, free);
  res.dim = ctx.dim;
  if (ctx.mode == Mode::Symbolic) {
    rep.residual = canonicalize(res);
    rep.pass = rep.residual.is_zero();
    if (!rep.pass) {
      TensorExpr at4 = rep.residual;
      at4.dim = std::nullopt;
      auto o = oracle_zero(at4, ctx.oracle);
      rep.configurations = o.trials;
      rep.classification = o.equal ? "oracle_zero" : "nonzero";
      rep.witness = o.witness;
    }
    return rep;
  }
  res.dim = std::nullopt;
  auto o = oracle_zero(res, ctx.oracle);
  rep.pass = o.equal;
  rep.configurations = o.trials;
  rep.witness = o.witness;
  return rep;
}

}  // namespace emt::verify
