#include "emt/canonicalize.hpp"
#include "emt/hilbert.hpp"
#include "emt/variational.hpp"

#include <algorithm>
#include <set>

namespace emt::hilbert {

using heads::kChristoffel;
using heads::kInverseMetric;
using heads::kMetric;
using heads::kSqrtMinusG;

namespace {

// A promoted subexpression: `core` carries every free index covariant, under
// the same name as in the source; names in `raised` are upstairs in the source
// and get their ginv when contracted.
struct Node {
  TensorExpr core;
  std::set<std::string> raised;
};

TensorExpr truncate(TensorExpr e, std::optional<int> max_grade) {
  if (!max_grade) return e;
  std::erase_if(e.terms, [&](const Term& t) { return metric_grade(t) > *max_grade; });
  return e;
}

bool has_free(const TensorExpr& e, const std::string& name) {
  if (e.is_zero()) return false;
  for (const auto& i : free_indices(e))
    if (i.name == name) return true;
  return false;
}

class Promoter {
 public:
  Promoter(const dsl::Program& p, Dim dim, std::optional<int> max_grade)
      : p_(p), dim_(dim), max_grade_(max_grade) {}

  Node operator()(const dsl::Ast& a) const {
    using K = dsl::Ast::Kind;
    switch (a.kind) {
      case K::Number: {
        TensorExpr e = scalar(a.value);
        e.dim = dim_;
        return {e, {}};
      }
      case K::Symbol: return symbol(a);
      case K::Deriv: return deriv(a);
      case K::Sum: {
        Node out{zero(dim_), {}};
        bool first = true;
        for (std::size_t k = 0; k < a.children.size(); ++k) {
          Node c = (*this)(a.children[k]);
          if (first) out.raised = c.raised;
          else if (c.raised != out.raised)
            throw ValidationError("summands disagree on index placement");
          first = false;
          out.core += a.signs[k] < 0 ? -c.core : c.core;
        }
        return out;
      }
      case K::Product: {
        Node out{scalar(1), {}};
        out.core.dim = dim_;
        for (const auto& ch : a.children) out = product(std::move(out), (*this)(ch));
        return out;
      }
    }
    return {zero(dim_), {}};
  }

 private:
  Node symbol(const dsl::Ast& a) const {
    if (p_.has_param(a.name) || a.name == kDimParam) {
      TensorExpr e = parameter(a.name);
      e.dim = dim_;
      return {e, {}};
    }
    std::vector<Index> slots;
    std::set<std::string> raised;
    std::vector<Factor> extra;
    std::set<std::string> seen;
    for (const auto& i : a.indices) {
      if (seen.count(i.name)) {
        // trace inside one symbol: close it with the inverse metric
        const auto k = fresh_name();
        slots.push_back(lo(k));
        extra.push_back(inverse_metric(up(i.name), up(k)));
        raised.erase(i.name);
        continue;
      }
      seen.insert(i.name);
      slots.push_back(lo(i.name));
      if (i.var == Variance::Upper) raised.insert(i.name);
    }
    Factor f;
    if (const dsl::FieldSpec* fs = p_.field(a.name)) {
      f = make_factor(a.name, slots, {}, SlotSymmetry::whole(fs->symmetry, slots.size()));
    } else if (a.name == heads::kEta || a.name == heads::kDelta) {
      f = metric(slots[0], slots[1]);
    } else {
      throw UsageError("'" + a.name + "' has no curved-space counterpart");
    }
    extra.insert(extra.begin(), f);
    TensorExpr e = monomial(std::move(extra));
    e.dim = dim_;
    return {e, raised};
  }

  Node deriv(const dsl::Ast& a) const {
    Node c = (*this)(a.children[0]);
    const Index& d = a.indices[0];
    if (has_free(c.core, d.name)) {
      if (c.raised.count(d.name) == (d.var == Variance::Upper ? 1u : 0u))
        throw ValidationError("index '" + d.name + "' repeated with equal variance");
      const auto k = fresh_name();
      c.core = monomial({inverse_metric(up(k), up(d.name))}) *
               covariant_derivative(c.core, lo(k));
      c.raised.erase(d.name);
    } else {
      c.core = covariant_derivative(c.core, lo(d.name));
      if (d.var == Variance::Upper) c.raised.insert(d.name);
    }
    c.core = truncate(std::move(c.core), max_grade_);
    return c;
  }

  Node product(Node a, Node b) const {
    if (a.core.is_zero() || b.core.is_zero()) return {zero(dim_), {}};
    std::set<std::string> fa, fb;
    for (const auto& i : free_indices(a.core)) fa.insert(i.name);
    for (const auto& i : free_indices(b.core)) fb.insert(i.name);
    std::vector<Factor> bridges;
    for (const auto& n : fa) {
      if (!fb.count(n)) continue;
      if (a.raised.count(n) == b.raised.count(n))
        throw ValidationError("index '" + n + "' repeated with equal variance");
      const auto k = fresh_name();
      b.core = rename_free(b.core, n, k);
      bridges.push_back(inverse_metric(up(n), up(k)));
      a.raised.erase(n);
      b.raised.erase(n);
    }
    Node out;
    out.core = a.core * b.core;
    if (!bridges.empty()) out.core = out.core * monomial(std::move(bridges));
    out.core.dim = dim_;
    out.core = truncate(std::move(out.core), max_grade_);
    out.raised = a.raised;
    out.raised.insert(b.raised.begin(), b.raised.end());
    return out;
  }

  const dsl::Program& p_;
  Dim dim_;
  std::optional<int> max_grade_;
};

// ∂∂Φ with Φ a tensor field, written directly (not through a macro).
void reject_raw_second_derivatives(const dsl::Ast& a, const dsl::Program& p) {
  using K = dsl::Ast::Kind;
  if (a.kind == K::Deriv && a.children[0].kind == K::Deriv) {
    const dsl::Ast* inner = &a.children[0];
    while (inner->kind == K::Deriv) inner = &inner->children[0];
    if (inner->kind == K::Symbol && !p.def(inner->name)) {
      const dsl::FieldSpec* f = p.field(inner->name);
      if (f && f->rank > 0)
        throw UsageError("unsupported structure at " + a.loc.file + ":" +
                         std::to_string(a.loc.line) + ": repeated derivatives of '" +
                         inner->name +
                         "' have no unique covariant ordering; write the term through "
                         "curvature macros");
    }
  }
  for (const auto& c : a.children) reject_raw_second_derivatives(c, p);
}

TensorExpr flat_term_restriction(const Term& t) {
  Term out{t.coeff, t.params, {}};
  for (const auto& f : t.factors) {
    if (f.head == kChristoffel) return {};
    if (is_metric_head(f.head) && !f.derivs.empty()) return {};
    if (f.head == kSqrtMinusG) continue;
    if (f.head == kMetric || f.head == kInverseMetric) out.factors.push_back(eta_factor(f.slots[0], f.slots[1]));
    else out.factors.push_back(f);
  }
  return from_term(std::move(out));
}

}  // namespace

CurvedLagrangian promote_to_curved(const dsl::Program& p, Dim dim, std::optional<int> max_grade) {
  CurvedLagrangian out;
  out.expr.dim = dim;
  if (!p.lagrangian) return out;
  reject_raw_second_derivatives(*p.lagrangian, p);
  Node n = Promoter(p, dim, max_grade)(dsl::inline_macros(*p.lagrangian, p));
  if (!n.core.is_zero() && !free_indices(n.core).empty())
    throw ValidationError("the Lagrangian has free indices");
  TensorExpr e = monomial({make_factor(std::string(kSqrtMinusG), {})}) * n.core;
  e.dim = dim;
  out.expr = canonicalize(e);
  return out;
}

CurvedLagrangian prune_flat_vanishing(const CurvedLagrangian& c, int max_use) {
  return {truncate(c.expr, max_use)};
}

TensorExpr flat_restriction(const TensorExpr& e) {
  TensorExpr out;
  out.dim = e.dim;
  for (const auto& t : e.terms) {
    TensorExpr r = flat_term_restriction(t);
    out.terms.insert(out.terms.end(), r.terms.begin(), r.terms.end());
  }
  return canonicalize(out);
}

TensorExpr metric_partial(const TensorExpr& L) {
  TensorExpr out;
  out.dim = L.dim;
  const std::string g = "gamma", r = "rho";
  for (const auto& raw : L.terms) {
    const Term t = freshen_dummies(raw);
    for (std::size_t k = 0; k < t.factors.size(); ++k) {
      const Factor& f = t.factors[k];
      if (!f.derivs.empty()) continue;
      TensorExpr d;
      if (f.head == kMetric) {
        d = sym_delta(g, r, f.slots[0].name, f.slots[1].name);
      } else if (f.head == kInverseMetric) {
        const Index &a = f.slots[0], &b = f.slots[1];
        d = monomial({inverse_metric(a, up(g)), inverse_metric(b, up(r))}, Rational(-1, 2)) +
            monomial({inverse_metric(a, up(r)), inverse_metric(b, up(g))}, Rational(-1, 2));
      } else if (f.head == kSqrtMinusG) {
        d = monomial({f, inverse_metric(up(g), up(r))}, Rational(1, 2));
      } else {
        continue;
      }
      Term rest = t;
      rest.factors.erase(rest.factors.begin() + static_cast<long>(k));
      for (auto dt : d.terms) {
        Term m = rest;
        m.coeff *= dt.coeff;
        m.factors.insert(m.factors.end(), dt.factors.begin(), dt.factors.end());
        out.terms.push_back(std::move(m));
      }
    }
  }
  return canonicalize(out);
}

TensorExpr metric_variation(const CurvedLagrangian& c, VariationMode mode) {
  const TensorExpr L = canonicalize(expand_christoffel(c.expr));
  const Index gl = lo("gamma"), rl = lo("rho"), wl = lo("omega"), xl = lo("xi");
  TensorExpr p0 = metric_partial(L);
  TensorExpr p1 = variational::jet_derivative(L, {std::string(kMetric), {wl}, {gl, rl}});
  TensorExpr p2 = variational::jet_derivative(L, {std::string(kMetric), {xl, wl}, {gl, rl}});
  if (mode == VariationMode::FlatTarget) {
    p0 = flat_restriction(p0);
    p1 = flat_restriction(p1);
    p2 = flat_restriction(p2);
    TensorExpr out = p0 - variational::total_derivative(p1, wl) +
                     variational::total_derivative(variational::total_derivative(p2, xl), wl);
    out.dim = L.dim;
    return canonicalize(out);
  }
  const auto rule = curved_rule();
  TensorExpr out = p0 - differentiate(p1, wl, rule) +
                   differentiate(differentiate(p2, xl, rule), wl, rule);
  out.dim = L.dim;
  return canonicalize(out);
}

TensorExpr hilbert_emt(const dsl::Program& p, const HilbertOptions& opt) {
  auto stage = [&](std::string_view name, const TensorExpr& e) {
    if (opt.on_stage) opt.on_stage(name, e);
  };
  CurvedLagrangian c = promote_to_curved(p, opt.dim, opt.max_use);
  stage("promoted", c.expr);
  c = prune_flat_vanishing(c, opt.max_use);
  stage("pruned", c.expr);
  TensorExpr varied = metric_variation(c, opt.mode);
  stage("varied", varied);
  TensorExpr flat = opt.mode == VariationMode::FlatTarget ? varied : flat_restriction(varied);
  stage("flat", flat);
  TensorExpr t = canonicalize(Rational(2) * flat);
  t.dim = opt.dim;
  return t;
}

}  // namespace emt::hilbert
