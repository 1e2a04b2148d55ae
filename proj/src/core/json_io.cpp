#include "emt/json_io.hpp"

#include <fstream>
#include <sstream>

namespace emt {

using nlohmann::json;

namespace {

json index_json(const Index& i) {
  return {{"n", i.name}, {"v", i.var == Variance::Lower ? "lo" : "up"}};
}

Index index_from(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("v"))
    throw ValidationError("index must be {\"n\":..., \"v\":\"lo\"|\"up\"}");
  const auto v = j.at("v").get<std::string>();
  if (v != "lo" && v != "up")
    throw ValidationError("index variance must be 'lo' or 'up', got '" + v + "'");
  return {j.at("n").get<std::string>(), v == "lo" ? Variance::Lower : Variance::Upper};
}

std::vector<Index> indices_from(const json& j, const char* key) {
  std::vector<Index> out;
  if (!j.contains(key)) return out;
  for (const auto& x : j.at(key)) out.push_back(index_from(x));
  return out;
}

const char* sym_name(SymmetryKind k) {
  switch (k) {
    case SymmetryKind::Symmetric: return "symmetric";
    case SymmetryKind::Antisymmetric: return "antisymmetric";
    default: return "none";
  }
}

}  // namespace

json to_json(const TensorExpr& e) {
  json terms = json::array();
  for (const auto& t : e.terms) {
    json factors = json::array();
    for (const auto& f : t.factors) {
      json jf{{"head", f.head}};
      jf["derivs"] = json::array();
      for (const auto& i : f.derivs) jf["derivs"].push_back(index_json(i));
      jf["slots"] = json::array();
      for (const auto& i : f.slots) jf["slots"].push_back(index_json(i));
      if (f.sym != default_symmetry(f.head, f.slots.size())) {
        jf["sym"] = {{"kind", sym_name(f.sym.kind)},
                     {"begin", f.sym.begin},
                     {"end", f.sym.end}};
      }
      factors.push_back(std::move(jf));
    }
    terms.push_back({{"coeff", to_string(t.coeff)},
                     {"params", t.params},
                     {"factors", std::move(factors)}});
  }
  json dim = e.dim ? json(*e.dim) : json(std::string(kDimParam));
  return {{"dim", dim}, {"terms", std::move(terms)}};
}

TensorExpr expr_from_json(const json& j) {
  try {
    TensorExpr e;
    if (j.contains("dim")) {
      const auto& d = j.at("dim");
      if (d.is_string()) {
        if (d.get<std::string>() != kDimParam)
          throw ValidationError("dim must be \"D\" or a positive integer");
      } else {
        int v = d.get<int>();
        if (v <= 0) throw ValidationError("dim must be positive");
        e.dim = v;
      }
    }
    for (const auto& jt : j.at("terms")) {
      Term t;
      t.coeff = parse_rational(jt.at("coeff").get<std::string>());
      if (jt.contains("params"))
        t.params = jt.at("params").get<std::vector<std::string>>();
      std::sort(t.params.begin(), t.params.end());
      for (const auto& jf : jt.at("factors")) {
        Factor f;
        f.head = jf.at("head").get<std::string>();
        f.derivs = indices_from(jf, "derivs");
        f.slots = indices_from(jf, "slots");
        if (jf.contains("sym")) {
          const auto& s = jf.at("sym");
          const auto kind = s.at("kind").get<std::string>();
          f.sym.kind = kind == "symmetric"       ? SymmetryKind::Symmetric
                       : kind == "antisymmetric" ? SymmetryKind::Antisymmetric
                       : kind == "none"
                           ? SymmetryKind::None
                           : throw ValidationError("unknown symmetry '" + kind + "'");
          f.sym.begin = s.value("begin", 0);
          f.sym.end = s.value("end", static_cast<int>(f.slots.size()));
          if (f.sym.kind == SymmetryKind::None) f.sym = {};
        } else {
          f.sym = default_symmetry(f.head, f.slots.size());
        }
        t.factors.push_back(std::move(f));
      }
      if (t.coeff != 0) e.terms.push_back(std::move(t));
    }
    validate(e);
    return e;
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed expression JSON: ") + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ValidationError(ex.what());
  }
}

TensorExpr read_expr_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw ValidationError(path + ": " + ex.what());
  }
  return expr_from_json(j);
}

void write_expr_file(const std::string& path, const TensorExpr& e) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << to_json(e).dump(1) << '\n';
}

}  // namespace emt
