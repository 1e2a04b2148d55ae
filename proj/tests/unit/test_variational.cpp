#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emt/canonicalize.hpp"
#include "emt/dsl.hpp"
#include "emt/variational.hpp"
#include "emt/verify.hpp"

using namespace emt;
using namespace emt::variational;

namespace {

std::string corpus(const char* f) { return std::string(EMT_CORPUS_DIR) + "/" + f; }

TensorExpr expr(const char* text, const dsl::Program& p, Dim dim = std::nullopt) {
  return dsl::to_tensor(dsl::parse_expression(text, p), p, dim);
}

struct Model {
  dsl::Program p;
  TensorExpr L;
};

Model load(const char* f, Dim dim = std::nullopt) {
  Model m{dsl::parse_file(corpus(f)), {}};
  m.L = dsl::expand_defs(m.p, dim);
  return m;
}

const SlotSymmetry kSym2 = SlotSymmetry::whole(SymmetryKind::Symmetric, 2);

}  // namespace

TEST_CASE("jet derivative of the maxwell lagrangian") {
  auto em = load("em.lag");
  auto d = jet_derivative(em.L, {"A", {lo("gamma")}, {lo("nu")}});
  CHECK(equal(d, expr("-(d[^gamma] A[^nu] - d[^nu] A[^gamma])", em.p)));
  CHECK(jet_derivative(em.L, {"A", {}, {lo("nu")}}).is_zero());
  CHECK(jet_derivative(em.L, {"phi", {lo("gamma")}, {}}).is_zero());
}

TEST_CASE("second-order jet variable gives a product of symmetrizers") {
  auto g = monomial({make_factor("g", {lo("b"), lo("c")}, {lo("a"), lo("m")}, kSym2)});
  auto d = jet_derivative(g, {"g", {lo("xi"), lo("omega")}, {lo("gamma"), lo("rho")}});
  auto sym = [](const char* u1, const char* u2, const char* l1, const char* l2) {
    return monomial({delta_factor(up(u1), lo(l1)), delta_factor(up(u2), lo(l2))}, Rational(1, 2)) +
           monomial({delta_factor(up(u1), lo(l2)), delta_factor(up(u2), lo(l1))}, Rational(1, 2));
  };
  CHECK(equal(d, sym("xi", "omega", "a", "m") * sym("gamma", "rho", "b", "c")));
  CHECK_THROWS_AS(jet_derivative(g, {"g", {lo("a"), lo("b"), lo("c")}, {lo("e"), lo("f")}}),
                  UsageError);
}

TEST_CASE("euler-lagrange expressions") {
  auto em = load("em.lag");
  // the bracket as printed: +d_gamma F^{gamma nu}
  CHECK(equal(euler_lagrange(em.L, "A", 1),
              expr("d[gamma] d[^gamma] A[^nu] - d[gamma] d[^nu] A[^gamma]", em.p)));
  auto kg = load("kg.lag");
  CHECK(equal(euler_lagrange(kg.L, "phi", 0), expr("-d[mu] d[^mu] phi", kg.p)));

  auto gb = load("gauss_bonnet.lag");
  CHECK(euler_lagrange(expr("Rs", gb.p), "h", 2).is_zero());
  // linear over coefficients
  auto L2 = expr("3 * A * Rs * Rs", gb.p) + 2 * gb.L;
  CHECK(equal(euler_lagrange(L2, "h", 2),
              expr("3 * A", gb.p) * euler_lagrange(expr("Rs * Rs", gb.p), "h", 2) +
                  2 * euler_lagrange(gb.L, "h", 2)));

  auto third = monomial({make_factor("phi", {}, {lo("a"), lo("b"), lo("c")}),
                         make_factor("phi", {}, {up("a"), up("b"), up("c")})});
  CHECK_THROWS_AS(euler_lagrange(third, "phi", 0), UsageError);
}

TEST_CASE("total derivative") {
  auto h = monomial({make_factor("h", {lo("a"), lo("b")}, {}, kSym2)});
  CHECK(equal(total_derivative(h, lo("m")),
              monomial({make_factor("h", {lo("a"), lo("b")}, {lo("m")}, kSym2)})));
  CHECK_THROWS_AS(total_derivative(h, lo("a")), UsageError);
  auto tr = monomial({make_factor("h", {lo("a"), up("a")}, {}, kSym2)});
  CHECK_THROWS_AS(total_derivative(tr, lo("a")), UsageError);

  auto em = load("em.lag");
  auto ff = expr("F[^gamma,^nu] F[^rho,nu]", em.p);
  auto lhs = total_derivative(ff, lo("gamma"));
  auto rhs = expr("d[gamma] F[^gamma,^nu] * F[^rho,nu] + F[^gamma,^nu] * d[gamma] F[^rho,nu]", em.p);
  CHECK(equal(lhs, rhs));
}

TEST_CASE("maxwell noether tensor through the gauge-completed variation") {
  auto em = load("em.lag");
  auto bh = dsl::parse_file(corpus("em_bessel_hagen.lag"));
  auto rules = dsl::variation_rules(bh);
  auto T = noether_emt(em.L, rules);
  auto ref = dsl::expand_def(dsl::parse_file(std::string(EMT_FIXTURE_DIR) + "/src/eq5_em_emt.lag"), "T");
  CHECK(equal(T, ref));
  CHECK(noether_identity_residual(em.L, rules).is_zero());

  // canonical translation gives the non-symmetric canonical tensor
  auto canon = noether_emt(em.L, rules_for(em.p));
  CHECK(equal(canon, expr("F[^gamma,^nu] d[^rho] A[nu] - 1/4 * eta[^gamma,^rho] F[a,b] F[^a,^b]", em.p)));
  CHECK_FALSE(equal(canon, T));
  CHECK(equal(noether_current(3 * em.L, rules), 3 * noether_current(em.L, rules)));
}

TEST_CASE("klein-gordon noether tensor") {
  auto kg = load("kg.lag");
  auto T = noether_emt(kg.L, rules_for(kg.p));
  CHECK(equal(T, expr("-d[^gamma] phi d[^rho] phi + 1/2 * eta[^gamma,^rho] d[a] phi d[^a] phi", kg.p)));
  auto scaled = noether_emt(Rational(-5, 3) * kg.L, rules_for(kg.p));
  CHECK(equal(scaled, Rational(-5, 3) * T));
  auto pot = expr("phi * phi * phi", kg.p);
  CHECK(equal(noether_emt(pot, rules_for(kg.p)),
              monomial({eta_factor(up("gamma"), up("rho"))}) * pot));
  CHECK(noether_emt(zero(), rules_for(kg.p)).is_zero());
}

TEST_CASE("noether identity holds for every corpus lagrangian") {
  for (const char* f : {"kg.lag", "em.lag", "fierz_pauli.lag", "gauss_bonnet.lag"}) {
    auto m = load(f);
    CAPTURE(f);
    CHECK(noether_identity_residual(m.L, rules_for(m.p)).is_zero());
  }
  auto gb = load("gauss_bonnet.lag");
  auto fixed = substitute_params(gb.L, {{"A", Rational(1, 4)}, {"B", -1}, {"C", Rational(1, 4)}});
  CHECK(noether_identity_residual(fixed, rules_for(gb.p)).is_zero());
}

TEST_CASE("uncovered fields are rejected") {
  auto em = load("em.lag");
  CHECK_THROWS_AS(noether_current(em.L, {}), UsageError);
}

namespace {

// L(h + t u) - L(h - t u) at t = 1, halved: the part linear in u.
Rational linear_part(const TensorExpr& L, verify::FieldConfig cfg, const std::string& field,
                     const std::vector<std::pair<int, verify::Polynomial>>& u,
                     const verify::Point& x) {
  auto plus = cfg, minus = cfg;
  for (const auto& [k, poly] : u) {
    auto& cp = plus.fields.at(field).components[k];
    auto& cm = minus.fields.at(field).components[k];
    for (auto m : poly) {
      cp.push_back(m);
      m.coeff = -m.coeff;
      cm.push_back(m);
    }
  }
  return (verify::evaluate(L, plus, x) - verify::evaluate(L, minus, x)) / 2;
}

// (x_a - p_a)(x_b - p_b) as a polynomial
verify::Polynomial centered(int a, int b, const verify::Point& p) {
  auto mono = [](std::array<std::uint8_t, 4> e, std::int64_t c) { return verify::Monomial{e, c}; };
  std::array<std::uint8_t, 4> ea{}, eb{}, eab{}, none{};
  ea[a] = 1;
  eb[b] = 1;
  eab[a] += 1;
  eab[b] += 1;
  return {mono(eab, 1), mono(ea, -p[b]), mono(eb, -p[a]), mono(none, p[a] * p[b])};
}

}  // namespace

TEST_CASE("jet derivative matches the numeric directional derivative") {
  auto gb = load("gauss_bonnet.lag", 4);
  auto J = jet_derivative(gb.L, {"h", {lo("xi"), lo("omega")}, {lo("gamma"), lo("rho")}});
  std::vector<dsl::FieldSpec> fs{{"h", 2, SymmetryKind::Symmetric}};
  int checked = 0;
  for (std::uint64_t s = 0; s < 4; ++s) {
    auto cfg = verify::sample_config(s, 3, fs, {"A", "B", "C"});
    auto x = verify::sample_point(s);
    for (auto [a, b, c, e] : {std::array{0, 1, 2, 3}, std::array{1, 1, 0, 0}, std::array{2, 3, 3, 1}}) {
      auto q = centered(a, b, x);
      std::vector<std::pair<int, verify::Polynomial>> u{{c + 4 * e, q}};
      if (c != e) u.push_back({e + 4 * c, q});
      Rational numeric = linear_part(gb.L, cfg, "h", u, x);
      // Σ J^{gamma omega rho xi} ∂_xi ∂_omega u_{gamma rho}
      Rational symbolic = 0;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          int dd = (i == a && j == b) + (i == b && j == a);
          if (!dd) continue;
          for (auto [k, l] : {std::pair{c, e}, std::pair{e, c}}) {
            symbolic += dd * verify::evaluate(J, cfg, x, {k, j, l, i});
            if (c == e) break;
          }
        }
      CHECK(numeric == symbolic);
      ++checked;
    }
  }
  CHECK(checked == 12);
}
