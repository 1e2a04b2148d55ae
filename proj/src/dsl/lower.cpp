#include "emt/canonicalize.hpp"
#include "emt/dsl.hpp"

#include <map>

namespace emt::dsl {

namespace {

void collect_names(const Ast& a, std::set<std::string>& out) {
  for (const auto& i : a.indices) out.insert(i.name);
  for (const auto& c : a.children) collect_names(c, out);
}

void rename(Ast& a, const std::map<std::string, std::string>& m) {
  for (auto& i : a.indices)
    if (auto it = m.find(i.name); it != m.end()) i.name = it->second;
  for (auto& c : a.children) rename(c, m);
}

Ast inline_rec(const Ast& a, const Program& p, std::vector<std::string>& stack) {
  if (a.kind == Ast::Kind::Symbol) {
    const MacroDef* d = p.def(a.name);
    if (!d) return a;
    if (std::find(stack.begin(), stack.end(), d->name) != stack.end()) {
      std::string chain;
      for (const auto& s : stack) chain += s + " -> ";
      throw ParseError(d->loc.file, d->loc.line, d->loc.col,
                       "recursive macro definition: " + chain + d->name);
    }
    stack.push_back(d->name);
    Ast body = inline_rec(d->body, p, stack);
    stack.pop_back();

    std::set<std::string> names;
    collect_names(body, names);
    std::map<std::string, std::string> m;
    for (const auto& n : names) m[n] = fresh_name();
    std::vector<Ast> bridges;
    for (std::size_t k = 0; k < d->params.size(); ++k) {
      const Index& par = d->params[k];
      const Index& use = a.indices[k];
      if (par.var == use.var) {
        m[par.name] = use.name;
      } else {
        // raise/lower through eta; becomes g/ginv once promoted
        bridges.push_back(Ast::symbol(std::string(heads::kEta),
                                      {{m[par.name], flip(par.var)}, use}));
        bridges.back().loc = a.loc;
      }
    }
    rename(body, m);
    if (bridges.empty()) return body;
    bridges.push_back(std::move(body));
    Ast prod = Ast::product(std::move(bridges));
    prod.loc = a.loc;
    return prod;
  }
  Ast out = a;
  for (auto& c : out.children) c = inline_rec(c, p, stack);
  return out;
}

TensorExpr lower(const Ast& a, const Program& p, Dim dim) {
  switch (a.kind) {
    case Ast::Kind::Number: {
      TensorExpr e = scalar(a.value);
      e.dim = dim;
      return e;
    }
    case Ast::Kind::Symbol: {
      TensorExpr e;
      if (p.has_param(a.name)) {
        e = parameter(a.name);
      } else if (const FieldSpec* f = p.field(a.name)) {
        e = monomial({make_factor(a.name, a.indices, {},
                                  SlotSymmetry::whole(f->symmetry, a.indices.size()))});
      } else if (a.name == heads::kDelta) {
        auto idx = a.indices;
        if (idx[0].var == Variance::Lower && idx[1].var == Variance::Upper)
          std::swap(idx[0], idx[1]);
        e = monomial({make_factor(a.name, idx)});
      } else if (is_builtin_head(a.name)) {
        e = monomial({make_factor(a.name, a.indices, {},
                                  default_symmetry(a.name, a.indices.size()))});
      } else {
        throw ValidationError("unresolved symbol '" + a.name + "'");
      }
      e.dim = dim;
      return e;
    }
    case Ast::Kind::Deriv:
      return differentiate(lower(a.children[0], p, dim), a.indices[0]);
    case Ast::Kind::Sum: {
      TensorExpr e = zero(dim);
      for (std::size_t k = 0; k < a.children.size(); ++k) {
        auto c = lower(a.children[k], p, dim);
        e += a.signs[k] < 0 ? -c : c;
      }
      validate(e);
      return e;
    }
    case Ast::Kind::Product: {
      TensorExpr e = scalar(1);
      e.dim = dim;
      for (const auto& c : a.children) e = e * lower(c, p, dim);
      validate(e);
      return e;
    }
  }
  return zero(dim);
}

std::vector<VariationRule> lower_rules(const std::vector<RuleStatement>& rs,
                                       const Program& p, Dim dim) {
  std::vector<VariationRule> out;
  for (const auto& r : rs) {
    TensorExpr e = to_tensor(r.body, p, dim);
    out.push_back({r.field, r.indices, canonicalize(e)});
  }
  return out;
}

}  // namespace

Ast inline_macros(const Ast& a, const Program& p) {
  std::vector<std::string> stack;
  return inline_rec(a, p, stack);
}

TensorExpr to_tensor(const Ast& a, const Program& p, Dim dim) {
  TensorExpr e = lower(inline_macros(a, p), p, dim);
  e.dim = dim;
  return expand(e);
}

TensorExpr expand_defs(const Program& p, Dim dim) {
  if (!p.lagrangian) return zero(dim);
  return canonicalize(to_tensor(*p.lagrangian, p, dim));
}

TensorExpr expand_def(const Program& p, const std::string& name, Dim dim) {
  const MacroDef* d = p.def(name);
  if (!d) throw UsageError("no definition named '" + name + "'");
  return canonicalize(to_tensor(d->body, p, dim));
}

std::vector<VariationRule> variation_rules(const Program& p, Dim dim) {
  return lower_rules(p.variations, p, dim);
}

std::vector<VariationRule> gauge_rules(const Program& p, Dim dim) {
  return lower_rules(p.gauges, p, dim);
}

}  // namespace emt::dsl
