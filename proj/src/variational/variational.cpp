#include "emt/variational.hpp"

#include "emt/canonicalize.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace emt::variational {

namespace {

std::set<std::string> field_heads(const TensorExpr& e) {
  std::set<std::string> out;
  for (const auto& t : e.terms)
    for (const auto& f : t.factors)
      if (!dsl::is_builtin_head(f.head)) out.insert(f.head);
  return out;
}

void require_order(const TensorExpr& L) {
  for (const auto& h : field_heads(L))
    if (derivative_order(L, h) > kMaxDerivativeOrder)
      throw UsageError("'" + h + "' carries more than " +
                       std::to_string(kMaxDerivativeOrder) + " derivatives");
}

// Raised indices on `field` factors become lower ones contracted with eta.
Term lower_field(const Term& t, const std::string& field) {
  Term out = t;
  std::vector<Factor> etas;
  for (auto& f : out.factors) {
    if (f.head != field) continue;
    auto lower = [&](Index& i) {
      if (i.var == Variance::Lower) return;
      std::string k = fresh_name();
      etas.push_back(eta_factor(up(i.name), up(k)));
      i = lo(k);
    };
    for (auto& d : f.derivs) lower(d);
    for (auto& s : f.slots) lower(s);
  }
  if (!etas.empty() && std::any_of(out.factors.begin(), out.factors.end(),
                                   [](const Factor& f) { return is_metric_head(f.head); }))
    throw UsageError("'" + field + "' appears with raised indices in a curved term");
  out.factors.insert(out.factors.end(), etas.begin(), etas.end());
  return out;
}

// (1/n!) Σ_π sign(π) Π δ^{want_i}_{have_π(i)} over the given positions.
TensorExpr symmetrizer(const std::vector<Index>& want, const std::vector<Index>& have,
                       bool antisymmetric) {
  const std::size_t n = want.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  TensorExpr out;
  Rational weight = 1;
  for (std::size_t k = 2; k <= n; ++k) weight /= static_cast<long>(k);
  do {
    int inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) inversions += perm[i] > perm[j];
    std::vector<Factor> ds;
    for (std::size_t i = 0; i < n; ++i)
      ds.push_back(delta_factor(up(want[i].name), have[perm[i]]));
    Rational c = (antisymmetric && inversions % 2) ? Rational(-weight) : weight;
    out += monomial(std::move(ds), c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

TensorExpr slot_symmetrizer(const Factor& f, const std::vector<Index>& want) {
  const auto& s = f.sym;
  std::vector<Factor> plain;
  for (std::size_t i = 0; i < f.slots.size(); ++i)
    if (s.kind == SymmetryKind::None || i < s.begin || i >= s.end)
      plain.push_back(delta_factor(up(want[i].name), f.slots[i]));
  TensorExpr out = monomial(std::move(plain));
  if (s.kind != SymmetryKind::None) {
    std::vector<Index> w(want.begin() + s.begin, want.begin() + s.end);
    std::vector<Index> h(f.slots.begin() + s.begin, f.slots.begin() + s.end);
    out = out * symmetrizer(w, h, s.kind == SymmetryKind::Antisymmetric);
  }
  return out;
}

// δΦ with its placeholders renamed onto covariant `slots`.
TensorExpr rule_on(const dsl::VariationRule& r, const std::vector<std::string>& slots) {
  if (r.placeholders.size() != slots.size())
    throw UsageError("variation rule for '" + r.field + "' has the wrong arity");
  TensorExpr e = r.expr;
  std::vector<std::string> tmp;
  for (const auto& p : r.placeholders) {
    tmp.push_back(fresh_name());
    e = rename_free(e, p.name, tmp.back());
  }
  std::vector<Factor> etas;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (r.placeholders[i].var == Variance::Lower)
      e = rename_free(e, tmp[i], slots[i]);
    else
      etas.push_back(eta_factor(lo(slots[i]), lo(tmp[i])));
  }
  return etas.empty() ? e : monomial(std::move(etas)) * e;
}

std::vector<std::string> fresh_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(fresh_name());
  return out;
}

std::vector<Index> lowered(const std::vector<std::string>& names) {
  std::vector<Index> out;
  for (const auto& n : names) out.push_back(lo(n));
  return out;
}

int field_rank(const TensorExpr& L, const std::string& field) {
  for (const auto& t : L.terms)
    for (const auto& f : t.factors)
      if (f.head == field) return static_cast<int>(f.slots.size());
  return -1;
}

const dsl::VariationRule& rule_for(const std::vector<dsl::VariationRule>& rules,
                                   const std::string& field) {
  for (const auto& r : rules)
    if (r.field == field) return r;
  throw UsageError("no variation rule covers field '" + field + "'");
}

}  // namespace

int derivative_order(const TensorExpr& e, const std::string& field) {
  int order = -1;
  for (const auto& t : e.terms)
    for (const auto& f : t.factors)
      if (f.head == field) order = std::max(order, static_cast<int>(f.derivs.size()));
  return order;
}

TensorExpr jet_derivative(const TensorExpr& L, const JetVariable& v) {
  if (v.derivs.size() > static_cast<std::size_t>(kMaxDerivativeOrder))
    throw UsageError("jet variables of derivative order above " +
                     std::to_string(kMaxDerivativeOrder) + " are out of scope");
  for (const auto* list : {&v.derivs, &v.slots})
    for (const auto& i : *list)
      if (i.var != Variance::Lower)
        throw UsageError("jet variable indices must be covariant");
  TensorExpr out;
  out.dim = L.dim;
  for (const auto& raw : L.terms) {
    Term t = lower_field(freshen_dummies(raw), v.field);
    for (std::size_t k = 0; k < t.factors.size(); ++k) {
      const Factor& f = t.factors[k];
      if (f.head != v.field || f.derivs.size() != v.derivs.size()) continue;
      if (f.slots.size() != v.slots.size())
        throw UsageError("jet variable rank does not match '" + v.field + "'");
      Term rest = t;
      rest.factors.erase(rest.factors.begin() + static_cast<long>(k));
      TensorExpr piece = from_term(rest);
      if (!f.derivs.empty()) piece = piece * symmetrizer(v.derivs, f.derivs, false);
      piece = piece * slot_symmetrizer(f, v.slots);
      out += piece;
    }
  }
  return canonicalize(out);
}

std::vector<std::string> slot_names(int rank) {
  static const char* names[] = {"nu", "alpha", "beta", "sigma", "tau", "kappa"};
  if (rank < 0 || rank > 6) throw UsageError("unsupported field rank");
  return {names, names + rank};
}

TensorExpr euler_lagrange(const TensorExpr& L, const std::string& field, int rank,
                          std::vector<std::string> slots) {
  require_order(L);
  if (slots.empty()) slots = slot_names(rank);
  if (static_cast<int>(slots.size()) != rank) throw UsageError("slot name count != rank");
  const auto s = lowered(slots);
  const std::string mu = fresh_name(), om = fresh_name();
  TensorExpr out = jet_derivative(L, {field, {}, s});
  out = out - differentiate(jet_derivative(L, {field, {lo(mu)}, s}), lo(mu));
  out = out + differentiate(
                  differentiate(jet_derivative(L, {field, {lo(mu), lo(om)}, s}), lo(mu)),
                  lo(om));
  out.dim = L.dim;
  return canonicalize(out);
}

TensorExpr total_derivative(const TensorExpr& e, const Index& idx) {
  // contracting with a free index of opposite variance is a divergence
  for (const auto& t : e.terms) {
    bool clash = dummy_names(t).count(idx.name) > 0;
    for (const auto& f : free_indices(t)) clash |= f.name == idx.name && f.var == idx.var;
    if (clash) throw UsageError("derivative index '" + idx.name + "' already used in the expression");
  }
  return differentiate(e, idx);
}

dsl::VariationRule canonical_rule(const dsl::FieldSpec& field) {
  auto names = slot_names(field.rank);
  std::vector<Index> ph = lowered(names);
  const std::string b = fresh_name();
  TensorExpr e = monomial({make_factor(field.name, ph, {up(b)},
                                       SlotSymmetry::whole(field.symmetry, ph.size())),
                           make_factor(std::string(heads::kDx), {lo(b)})},
                          -1);
  return {field.name, ph, e};
}

std::vector<dsl::VariationRule> rules_for(const dsl::Program& p, Dim dim) {
  auto given = dsl::variation_rules(p, dim);
  std::vector<dsl::VariationRule> out;
  for (const auto& f : p.fields) {
    if (f.kind != dsl::FieldKind::Dynamical) continue;
    auto it = std::find_if(given.begin(), given.end(),
                           [&](const auto& r) { return r.field == f.name; });
    out.push_back(it != given.end() ? *it : canonical_rule(f));
  }
  return out;
}

TensorExpr noether_current(const TensorExpr& L, const std::vector<dsl::VariationRule>& rules) {
  require_order(L);
  const std::string g = "gamma";
  TensorExpr Lf = freshen_dummies(L);
  const std::string nu = fresh_name();
  TensorExpr J = monomial({eta_factor(up(g), up(nu)), make_factor(std::string(heads::kDx), {lo(nu)})}) * Lf;
  for (const auto& field : field_heads(L)) {
    const auto& r = rule_for(rules, field);
    const auto names = fresh_names(static_cast<std::size_t>(field_rank(L, field)));
    const auto s = lowered(names);
    const TensorExpr dphi = rule_on(r, names);
    J += jet_derivative(Lf, {field, {lo(g)}, s}) * dphi;
    if (derivative_order(L, field) >= 2) {
      const std::string om = fresh_name();
      TensorExpr P2 = jet_derivative(Lf, {field, {lo(g), lo(om)}, s});
      J += P2 * differentiate(dphi, lo(om));
      J = J - differentiate(P2, lo(om)) * dphi;
    }
  }
  J.dim = L.dim;
  return canonicalize(J);
}

TensorExpr noether_emt(const TensorExpr& L, const std::vector<dsl::VariationRule>& rules) {
  TensorExpr J = noether_current(L, rules);
  const std::string rho = "rho";
  TensorExpr out;
  out.dim = L.dim;
  for (const auto& t : J.terms) {
    Term u = t;
    auto it = std::find_if(u.factors.begin(), u.factors.end(),
                           [](const Factor& f) { return f.head == heads::kDx; });
    if (it == u.factors.end() ||
        std::count_if(u.factors.begin(), u.factors.end(),
                      [](const Factor& f) { return f.head == heads::kDx; }) != 1)
      throw UsageError("current is not linear in the translation parameter");
    const Index i = it->slots[0];
    *it = i.var == Variance::Lower ? delta_factor(up(rho), i) : eta_factor(up(rho), i);
    out.terms.push_back(std::move(u));
  }
  return canonicalize(out);
}

TensorExpr noether_identity_residual(const TensorExpr& L,
                                     const std::vector<dsl::VariationRule>& rules) {
  TensorExpr J = noether_current(L, rules);
  TensorExpr out = differentiate(J, lo("gamma"));
  for (const auto& field : field_heads(L)) {
    const int rank = field_rank(L, field);
    const auto names = fresh_names(static_cast<std::size_t>(rank));
    out += euler_lagrange(L, field, rank, names) * rule_on(rule_for(rules, field), names);
  }
  out.dim = L.dim;
  return canonicalize(out);
}

}  // namespace emt::variational
