#include "emt/canonicalize.hpp"
#include "emt/hilbert.hpp"

namespace emt::hilbert {

using heads::kChristoffel;
using heads::kInverseMetric;
using heads::kMetric;
using heads::kSqrtMinusG;

Factor metric(Index a, Index b) {
  return make_factor(std::string(kMetric), {std::move(a), std::move(b)}, {},
                     default_symmetry(kMetric, 2));
}

Factor inverse_metric(Index a, Index b) {
  return make_factor(std::string(kInverseMetric), {std::move(a), std::move(b)}, {},
                     default_symmetry(kInverseMetric, 2));
}

Factor christoffel(Index upper, Index a, Index b) {
  return make_factor(std::string(kChristoffel), {std::move(upper), std::move(a), std::move(b)},
                     {}, default_symmetry(kChristoffel, 3));
}

DerivativeRule curved_rule() {
  return [](const Factor& f, const Index& d) -> std::optional<TensorExpr> {
    if (f.head == kInverseMetric) {
      // ∂ginv^{ab} = -ginv^{ac} ginv^{bd} ∂g_{cd}
      const auto c = fresh_name(), e = fresh_name();
      Factor dg = metric(lo(c), lo(e));
      dg.derivs.push_back(d);
      return monomial({inverse_metric(f.slots[0], up(c)), inverse_metric(f.slots[1], up(e)), dg}, -1);
    }
    if (f.head == kSqrtMinusG) {
      const auto c = fresh_name(), e = fresh_name();
      Factor dg = metric(lo(c), lo(e));
      dg.derivs.push_back(d);
      return monomial({f, inverse_metric(up(c), up(e)), dg}, Rational(1, 2));
    }
    return std::nullopt;
  };
}

TensorExpr christoffel_definition(const Index& upper, const Index& a, const Index& b) {
  if (upper.var != Variance::Upper || a.var != Variance::Lower || b.var != Variance::Lower)
    throw UsageError("Christoffel symbols are written Gamma[^l,a,b]");
  const auto m = fresh_name();
  auto dg = [&](const Index& d, Index x, Index y) {
    Factor f = metric(std::move(x), std::move(y));
    f.derivs.push_back(d);
    return f;
  };
  const Factor gi = inverse_metric(upper, up(m));
  return monomial({gi, dg(a, lo(m), b)}, Rational(1, 2)) +
         monomial({gi, dg(b, lo(m), a)}, Rational(1, 2)) -
         monomial({gi, dg(lo(m), a, b)}, Rational(1, 2));
}

TensorExpr expand_christoffel(const TensorExpr& e) {
  TensorExpr out;
  out.dim = e.dim;
  const auto rule = curved_rule();
  for (const auto& t : e.terms) {
    TensorExpr acc = from_term(Term{t.coeff, t.params, {}});
    bool any = false;
    std::vector<Factor> rest;
    std::vector<TensorExpr> parts;
    for (const auto& f : t.factors) {
      if (f.head != kChristoffel) {
        rest.push_back(f);
        continue;
      }
      any = true;
      TensorExpr def = christoffel_definition(f.slots[0], f.slots[1], f.slots[2]);
      for (const auto& d : f.derivs) def = differentiate(def, d, rule);
      parts.push_back(std::move(def));
    }
    if (!any) {
      out.terms.push_back(t);
      continue;
    }
    // the pieces share index names with each other and with `rest`, so the
    // product is formed term by term without any renaming of free indices
    std::vector<Term> cur{Term{t.coeff, t.params, rest}};
    for (const auto& p : parts) {
      std::vector<Term> next;
      for (const auto& a : cur)
        for (auto b : p.terms) {
          // fresh names inside the definition are private to it
          Term m = a;
          m.coeff *= b.coeff;
          m.params.insert(m.params.end(), b.params.begin(), b.params.end());
          std::sort(m.params.begin(), m.params.end());
          m.factors.insert(m.factors.end(), b.factors.begin(), b.factors.end());
          next.push_back(std::move(m));
        }
      cur = std::move(next);
    }
    for (auto& m : cur) out.terms.push_back(std::move(m));
  }
  return out;
}

TensorExpr covariant_derivative(const TensorExpr& e, const Index& mu) {
  if (mu.var != Variance::Lower) throw UsageError("covariant derivative index must be covariant");
  TensorExpr out = differentiate(e, mu, curved_rule());
  out.dim = e.dim;
  if (e.is_zero()) return out;
  for (const auto& i : free_indices(e)) {
    if (i.var != Variance::Lower)
      throw UsageError("covariant derivative needs covariant free indices");
    const auto l = fresh_name();
    out = out - monomial({christoffel(up(l), mu, lo(i.name))}) * rename_free(e, i.name, l);
  }
  return out;
}

TensorExpr covariant_curvature(const std::string& field, int rank) {
  auto leaf = [&](std::vector<Index> slots) {
    const auto sym = SlotSymmetry::whole(
        rank == 2 ? SymmetryKind::Symmetric : SymmetryKind::None, slots.size());
    return monomial({make_factor(field, std::move(slots), {}, sym)});
  };
  if (rank == 1) {
    return canonicalize(covariant_derivative(leaf({lo("nu")}), lo("mu")) -
                        covariant_derivative(leaf({lo("mu")}), lo("nu")));
  }
  if (rank == 2) {
    auto nn = [&](const char* a, const char* b, const char* c, const char* d) {
      return covariant_derivative(covariant_derivative(leaf({lo(c), lo(d)}), lo(b)), lo(a));
    };
    TensorExpr r = nn("mu", "alpha", "nu", "beta") + nn("nu", "beta", "mu", "alpha") -
                   nn("mu", "beta", "nu", "alpha") - nn("nu", "alpha", "mu", "beta");
    return canonicalize(Rational(1, 2) * r);
  }
  if (rank == 0)
    throw UsageError("a scalar has no curvature; its covariant derivative is the partial one");
  throw UsageError("covariant curvature is defined for rank 1 and 2 only");
}

TensorExpr sym_delta(const std::string& g, const std::string& r, const std::string& n,
                     const std::string& a) {
  return monomial({delta_factor(up(g), lo(n)), delta_factor(up(r), lo(a))}, Rational(1, 2)) +
         monomial({delta_factor(up(g), lo(a)), delta_factor(up(r), lo(n))}, Rational(1, 2));
}

TensorExpr delta_bar(const std::string& w, const std::string& g, const std::string& r,
                     const std::string& m, const std::string& n, const std::string& a) {
  auto d = [](const std::string& u, const std::string& l) {
    return monomial({delta_factor(up(u), lo(l))});
  };
  return -(d(w, m) * sym_delta(g, r, n, a)) + d(w, a) * sym_delta(g, r, m, n) +
         d(w, n) * sym_delta(g, r, m, a);
}

TensorExpr delta_hat(const std::string& x, const std::string& w, const std::string& g,
                     const std::string& r, const std::string& a, const std::string& m,
                     const std::string& b, const std::string& c) {
  return -(sym_delta(x, w, a, m) * sym_delta(g, r, b, c)) +
         sym_delta(x, w, a, c) * sym_delta(g, r, m, b) +
         sym_delta(x, w, a, b) * sym_delta(g, r, m, c);
}

int metric_grade(const Term& t) {
  int n = 0;
  for (const auto& f : t.factors)
    if (f.head == kChristoffel || (is_metric_head(f.head) && !f.derivs.empty())) ++n;
  return n;
}

std::map<int, std::size_t> CurvedLagrangian::grades() const {
  std::map<int, std::size_t> out;
  for (const auto& t : expr.terms) ++out[metric_grade(t)];
  return out;
}

}  // namespace emt::hilbert
