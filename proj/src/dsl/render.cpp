#include "emt/dsl.hpp"
#include "emt/json_io.hpp"

#include <map>
#include <sstream>

namespace emt::dsl {

namespace {

std::string index_text(const Index& i) {
  return (i.var == Variance::Upper ? "^" : "") + i.name;
}

std::string index_list_text(const std::vector<Index>& idx) {
  std::string s = "[";
  for (std::size_t k = 0; k < idx.size(); ++k) s += (k ? "," : "") + index_text(idx[k]);
  return s + "]";
}

std::string factor_text(const Factor& f) {
  std::string s;
  for (const auto& d : f.derivs) s += "d[" + index_text(d) + "] ";
  s += f.head;
  if (!f.slots.empty()) s += index_list_text(f.slots);
  return s;
}

}  // namespace

std::string render(const TensorExpr& e, Format format) {
  if (format == Format::Json) return to_json(e).dump(1);
  if (e.is_zero()) return "0";
  std::string out;
  for (std::size_t k = 0; k < e.terms.size(); ++k) {
    const Term& t = e.terms[k];
    const bool neg = t.coeff < 0;
    if (k == 0) {
      if (neg) out += "-";
    } else {
      out += neg ? "\n  - " : "\n  + ";
    }
    Rational mag = abs(t.coeff);
    std::vector<std::string> parts;
    if (mag != 1 || (t.params.empty() && t.factors.empty())) parts.push_back(to_string(mag));
    for (const auto& p : t.params) parts.push_back(p);
    for (const auto& f : t.factors) parts.push_back(factor_text(f));
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? " * " : "") + parts[i];
  }
  return out;
}

std::string render(const Ast& a) {
  switch (a.kind) {
    case Ast::Kind::Number: {
      auto s = to_string(a.value);
      return a.value < 0 ? "(" + s + ")" : s;
    }
    case Ast::Kind::Symbol:
      return a.indices.empty() ? a.name : a.name + index_list_text(a.indices);
    case Ast::Kind::Deriv: {
      const auto& c = a.children[0];
      auto inner = render(c);
      if (c.kind == Ast::Kind::Sum || c.kind == Ast::Kind::Product) inner = "(" + inner + ")";
      return "d[" + index_text(a.indices[0]) + "] " + inner;
    }
    case Ast::Kind::Sum: {
      std::string s;
      for (std::size_t k = 0; k < a.children.size(); ++k) {
        if (k == 0) s += a.signs[k] < 0 ? "-" : "";
        else s += a.signs[k] < 0 ? " - " : " + ";
        auto c = render(a.children[k]);
        if (a.children[k].kind == Ast::Kind::Sum) c = "(" + c + ")";
        s += c;
      }
      return s;
    }
    case Ast::Kind::Product: {
      std::string s;
      for (std::size_t k = 0; k < a.children.size(); ++k) {
        auto c = render(a.children[k]);
        if (a.children[k].kind == Ast::Kind::Sum) c = "(" + c + ")";
        s += (k ? " * " : "") + c;
      }
      return s;
    }
  }
  return "";
}

std::string render_declarations(const TensorExpr& e) {
  std::map<std::string, Factor> seen;
  std::set<std::string> params;
  for (const auto& t : e.terms) {
    for (const auto& p : t.params)
      if (p != kDimParam) params.insert(p);
    for (const auto& f : t.factors)
      if (!is_builtin_head(f.head)) seen.emplace(f.head, f);
  }
  std::ostringstream out;
  for (const auto& [name, f] : seen) {
    out << "field " << name << " {rank:" << f.slots.size();
    if (f.sym.kind != SymmetryKind::None)
      out << ", symmetry:"
          << (f.sym.kind == SymmetryKind::Symmetric ? "symmetric" : "antisymmetric");
    out << "}\n";
  }
  if (!params.empty()) {
    out << "param ";
    bool first = true;
    for (const auto& p : params) {
      out << (first ? "" : ", ") << p;
      first = false;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace emt::dsl
