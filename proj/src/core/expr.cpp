#include "emt/expr.hpp"

#include <algorithm>
#include <atomic>
#include <map>

namespace emt {

bool is_constant_head(std::string_view head) {
  return head == heads::kEta || head == heads::kDelta || head == heads::kDx;
}

bool is_metric_head(std::string_view head) {
  return head == heads::kMetric || head == heads::kInverseMetric ||
         head == heads::kSqrtMinusG || head == heads::kChristoffel;
}

SlotSymmetry default_symmetry(std::string_view head, std::size_t rank) {
  if (head == heads::kEta || head == heads::kMetric ||
      head == heads::kInverseMetric || head == "h") {
    return SlotSymmetry::whole(SymmetryKind::Symmetric, rank);
  }
  if (head == heads::kChristoffel && rank == 3) {
    return {SymmetryKind::Symmetric, 1, 3};
  }
  return {};
}

bool operator==(const Term& a, const Term& b) {
  return a.coeff == b.coeff && a.params == b.params && a.factors == b.factors;
}

Factor make_factor(std::string head, std::vector<Index> slots,
                   std::vector<Index> derivs, SlotSymmetry sym) {
  return Factor{std::move(head), std::move(derivs), std::move(slots), sym};
}

Factor eta_factor(Index a, Index b) {
  return make_factor(std::string(heads::kEta), {std::move(a), std::move(b)},
                     {}, SlotSymmetry::whole(SymmetryKind::Symmetric, 2));
}

Factor delta_factor(Index upper, Index lower) {
  return make_factor(std::string(heads::kDelta),
                     {std::move(upper), std::move(lower)});
}

TensorExpr zero(Dim dim) { return TensorExpr{{}, dim}; }

TensorExpr scalar(const Rational& value) {
  TensorExpr e;
  if (value != 0) e.terms.push_back(Term{value, {}, {}});
  return e;
}

TensorExpr parameter(std::string name) {
  TensorExpr e;
  e.terms.push_back(Term{1, {std::move(name)}, {}});
  return e;
}

TensorExpr monomial(std::vector<Factor> factors, Rational coeff) {
  TensorExpr e;
  if (coeff != 0) e.terms.push_back(Term{coeff, {}, std::move(factors)});
  return e;
}

TensorExpr from_term(Term t) {
  TensorExpr e;
  if (t.coeff != 0) e.terms.push_back(std::move(t));
  return e;
}

namespace {

Dim merge_dim(Dim a, Dim b) {
  if (a && b && *a != *b) {
    throw ValidationError("cannot combine expressions of dimension " +
                          std::to_string(*a) + " and " + std::to_string(*b));
  }
  return a ? a : b;
}

std::map<std::string, int> occurrence_counts(const Term& t) {
  std::map<std::string, int> counts;
  for (const auto& f : t.factors) {
    for (const auto& i : f.derivs) ++counts[i.name];
    for (const auto& i : f.slots) ++counts[i.name];
  }
  return counts;
}

}  // namespace

TensorExpr operator+(const TensorExpr& a, const TensorExpr& b) {
  TensorExpr r = a;
  r += b;
  return r;
}

TensorExpr& operator+=(TensorExpr& a, const TensorExpr& b) {
  a.dim = merge_dim(a.dim, b.dim);
  a.terms.insert(a.terms.end(), b.terms.begin(), b.terms.end());
  return a;
}

TensorExpr operator-(const TensorExpr& a) {
  TensorExpr r = a;
  for (auto& t : r.terms) t.coeff = -t.coeff;
  return r;
}

TensorExpr operator-(const TensorExpr& a, const TensorExpr& b) {
  return a + (-b);
}

TensorExpr operator*(const Rational& s, const TensorExpr& a) {
  if (s == 0) return zero(a.dim);
  TensorExpr r = a;
  for (auto& t : r.terms) t.coeff *= s;
  return r;
}

std::string fresh_name() {
  static std::atomic<std::uint64_t> counter{0};
  return "_k" + std::to_string(counter.fetch_add(1, std::memory_order_relaxed));
}

std::set<std::string> index_names(const Term& t) {
  std::set<std::string> names;
  for (const auto& f : t.factors) {
    for (const auto& i : f.derivs) names.insert(i.name);
    for (const auto& i : f.slots) names.insert(i.name);
  }
  return names;
}

std::set<std::string> dummy_names(const Term& t) {
  std::set<std::string> names;
  for (const auto& [name, n] : occurrence_counts(t)) {
    if (n >= 2) names.insert(name);
  }
  return names;
}

std::vector<Index> free_indices(const Term& t) {
  auto counts = occurrence_counts(t);
  std::vector<Index> out;
  for (const auto& f : t.factors) {
    for (const auto* list : {&f.derivs, &f.slots}) {
      for (const auto& i : *list) {
        if (counts[i.name] == 1) out.push_back(i);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Index> free_indices(const TensorExpr& e) {
  if (e.terms.empty()) return {};
  return free_indices(e.terms.front());
}

void validate(const Term& t) {
  std::map<std::string, std::vector<Variance>> seen;
  for (const auto& f : t.factors) {
    if (f.sym.kind != SymmetryKind::None &&
        (f.sym.begin >= f.sym.end || f.sym.end > f.slots.size())) {
      throw ValidationError("symmetry range of '" + f.head +
                            "' exceeds its slot count");
    }
    for (const auto* list : {&f.derivs, &f.slots}) {
      for (const auto& i : *list) seen[i.name].push_back(i.var);
    }
  }
  for (const auto& [name, vars] : seen) {
    if (vars.size() > 2) {
      throw ValidationError("index '" + name + "' appears " +
                            std::to_string(vars.size()) + " times");
    }
    if (vars.size() == 2 && vars[0] == vars[1]) {
      throw ValidationError("dummy index '" + name +
                            "' must pair an upper with a lower occurrence");
    }
  }
}

void validate(const TensorExpr& e) {
  std::optional<std::vector<Index>> reference;
  for (const auto& t : e.terms) {
    validate(t);
    auto free = free_indices(t);
    if (!reference) {
      reference = std::move(free);
    } else if (*reference != free) {
      std::string msg = "terms carry different free indices:";
      for (const auto& i : *reference) msg += " " + i.name;
      msg += " vs";
      for (const auto& i : free) msg += " " + i.name;
      throw ValidationError(msg);
    }
  }
}

Term rename_indices(
    const Term& t,
    const std::function<std::optional<std::string>(const std::string&)>&
        mapping) {
  Term r = t;
  for (auto& f : r.factors) {
    for (auto* list : {&f.derivs, &f.slots}) {
      for (auto& i : *list) {
        if (auto m = mapping(i.name)) i.name = *m;
      }
    }
  }
  return r;
}

namespace {

Term rename_dummies_if(const Term& t,
                       const std::function<bool(const std::string&)>& pred) {
  std::map<std::string, std::string> renames;
  for (const auto& d : dummy_names(t)) {
    if (pred(d)) renames.emplace(d, fresh_name());
  }
  if (renames.empty()) return t;
  return rename_indices(t, [&](const std::string& n) -> std::optional<std::string> {
    auto it = renames.find(n);
    if (it == renames.end()) return std::nullopt;
    return it->second;
  });
}

void merge_params(std::vector<std::string>& into,
                  const std::vector<std::string>& from) {
  if (from.empty()) return;
  into.insert(into.end(), from.begin(), from.end());
  std::sort(into.begin(), into.end());
}

}  // namespace

Term freshen_dummies(const Term& t) {
  return rename_dummies_if(t, [](const std::string&) { return true; });
}

TensorExpr freshen_dummies(const TensorExpr& e) {
  TensorExpr r{{}, e.dim};
  r.terms.reserve(e.terms.size());
  for (const auto& t : e.terms) r.terms.push_back(freshen_dummies(t));
  return r;
}

TensorExpr rename_free(const TensorExpr& e, const std::string& from,
                       const std::string& to) {
  if (from == to) return e;
  TensorExpr r{{}, e.dim};
  for (const auto& t : e.terms) {
    Term u = rename_dummies_if(t, [&](const std::string& d) { return d == to; });
    r.terms.push_back(rename_indices(
        u, [&](const std::string& n) -> std::optional<std::string> {
          if (n == from) return to;
          return std::nullopt;
        }));
  }
  return r;
}

Term multiply(const Term& a, const Term& b) {
  const auto names_a = index_names(a);
  const auto names_b = index_names(b);
  Term left = rename_dummies_if(
      a, [&](const std::string& d) { return names_b.contains(d); });
  Term right = rename_dummies_if(
      b, [&](const std::string& d) { return names_a.contains(d); });
  Term r;
  r.coeff = left.coeff * right.coeff;
  r.params = std::move(left.params);
  merge_params(r.params, right.params);
  r.factors = std::move(left.factors);
  r.factors.insert(r.factors.end(),
                   std::make_move_iterator(right.factors.begin()),
                   std::make_move_iterator(right.factors.end()));
  return r;
}

TensorExpr operator*(const TensorExpr& a, const TensorExpr& b) {
  TensorExpr r{{}, merge_dim(a.dim, b.dim)};
  r.terms.reserve(a.terms.size() * b.terms.size());
  for (const auto& ta : a.terms) {
    for (const auto& tb : b.terms) {
      Term t = multiply(ta, tb);
      if (t.coeff != 0) r.terms.push_back(std::move(t));
    }
  }
  return r;
}

TensorExpr substitute_params(
    const TensorExpr& e,
    const std::vector<std::pair<std::string, Rational>>& values) {
  TensorExpr r{{}, e.dim};
  for (const auto& t : e.terms) {
    Term u = t;
    u.params.clear();
    for (const auto& p : t.params) {
      auto it = std::find_if(values.begin(), values.end(),
                             [&](const auto& kv) { return kv.first == p; });
      if (it == values.end()) {
        u.params.push_back(p);
      } else {
        u.coeff *= it->second;
      }
    }
    if (u.coeff != 0) r.terms.push_back(std::move(u));
  }
  return r;
}

TensorExpr differentiate(const TensorExpr& e, const Index& idx,
                         const DerivativeRule& rule) {
  TensorExpr r{{}, e.dim};
  for (const auto& original : e.terms) {
    Term t = rename_dummies_if(
        original, [&](const std::string& d) { return d == idx.name; });
    for (std::size_t i = 0; i < t.factors.size(); ++i) {
      const Factor& f = t.factors[i];
      if (is_constant_head(f.head)) continue;
      if (rule) {
        if (auto replacement = rule(f, idx)) {
          Term rest = t;
          rest.factors.erase(rest.factors.begin() +
                             static_cast<std::ptrdiff_t>(i));
          r += from_term(rest) * *replacement;
          continue;
        }
      }
      Term u = t;
      auto& derivs = u.factors[i].derivs;
      derivs.insert(std::upper_bound(derivs.begin(), derivs.end(), idx,
                                     [](const Index& a, const Index& b) {
                                       return a.name < b.name;
                                     }),
                    idx);
      r.terms.push_back(std::move(u));
    }
  }
  return r;
}

}  // namespace emt
