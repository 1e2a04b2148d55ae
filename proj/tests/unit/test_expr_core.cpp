#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emt/canonicalize.hpp"
#include "emt/json_io.hpp"

using namespace emt;

namespace {

Factor h(Index a, Index b, std::vector<Index> d = {}) {
  return make_factor("h", {std::move(a), std::move(b)}, std::move(d),
                     SlotSymmetry::whole(SymmetryKind::Symmetric, 2));
}

Factor F(Index a, Index b, std::vector<Index> d = {}) {
  return make_factor("F", {std::move(a), std::move(b)}, std::move(d),
                     SlotSymmetry::whole(SymmetryKind::Antisymmetric, 2));
}

Factor phi(std::vector<Index> d) { return make_factor("phi", {}, std::move(d)); }

}  // namespace

TEST_CASE("commuting derivatives and relabeled dummies cancel") {
  auto a = monomial({h(lo("alpha"), lo("beta"), {lo("mu"), lo("nu")}),
                     h(up("alpha"), up("beta"), {up("nu"), up("mu")})});
  auto b = monomial({h(lo("c"), lo("d"), {lo("a"), lo("b")}),
                     h(up("c"), up("d"), {up("a"), up("b")})});
  CHECK(canonicalize(a - b).is_zero());
  CHECK(canonicalize(a + b).terms.size() == 1);
  CHECK(canonicalize(a + b).terms[0].coeff == 2);
}

TEST_CASE("eta traces give the dimension") {
  auto e = monomial({eta_factor(lo("mu"), lo("nu")), eta_factor(up("mu"), up("nu"))});
  auto c = canonicalize(e);
  REQUIRE(c.terms.size() == 1);
  CHECK(c.terms[0].factors.empty());
  CHECK(c.terms[0].params == std::vector<std::string>{"D"});
  e.dim = 4;
  c = canonicalize(e);
  REQUIRE(c.terms.size() == 1);
  CHECK(c.terms[0].params.empty());
  CHECK(c.terms[0].coeff == 4);
}

TEST_CASE("eta raises and lowers in flat terms") {
  auto raised = monomial({eta_factor(up("a"), up("b")), phi({lo("b")}), phi({lo("a")})});
  auto direct = monomial({phi({lo("c")}), phi({up("c")})});
  CHECK(equal(raised, direct));
  auto free_raise = monomial({eta_factor(up("m"), up("n")), phi({lo("n")})});
  auto c = canonicalize(free_raise);
  REQUIRE(c.terms.size() == 1);
  CHECK(c.terms[0].factors[0].derivs[0] == up("m"));
}

TEST_CASE("delta contraction") {
  auto e = monomial({delta_factor(up("a"), lo("b")), phi({lo("a")}), phi({up("b")})});
  CHECK(equal(e, monomial({phi({lo("x")}), phi({up("x")})})));
  auto tr = canonicalize(monomial({delta_factor(up("a"), lo("a"))}));
  CHECK(tr.terms[0].params == std::vector<std::string>{"D"});
}

TEST_CASE("sign discipline") {
  auto fab = monomial({F(lo("a"), lo("b")), h(up("a"), up("c")), phi({lo("c"), up("b")})});
  auto fba = monomial({F(lo("b"), lo("a")), h(up("a"), up("c")), phi({lo("c"), up("b")})});
  CHECK(canonicalize(fab + fba).is_zero());
  auto hab = monomial({h(lo("a"), lo("b")), F(up("a"), up("c")), phi({lo("c"), up("b")})});
  auto hba = monomial({h(lo("b"), lo("a")), F(up("a"), up("c")), phi({lo("c"), up("b")})});
  CHECK(canonicalize(hab - hba).is_zero());
  // antisymmetric against symmetric vanishes
  CHECK(canonicalize(monomial({F(lo("a"), lo("b")), h(up("a"), up("b"))})).is_zero());
  CHECK(canonicalize(monomial({F(lo("a"), lo("b"), {up("a"), up("b")})})).is_zero());
}

TEST_CASE("free index variance is kept") {
  auto up_free = monomial({phi({up("m")})});
  auto lo_free = monomial({phi({lo("m")})});
  CHECK_THROWS_AS(equal(up_free, lo_free), UsageError);
}

TEST_CASE("curved terms contract only g with ginv") {
  auto g = [](Index a, Index b) {
    return make_factor("g", {a, b}, {}, SlotSymmetry::whole(SymmetryKind::Symmetric, 2));
  };
  auto gi = [](Index a, Index b) {
    return make_factor("ginv", {a, b}, {}, SlotSymmetry::whole(SymmetryKind::Symmetric, 2));
  };
  auto e = monomial({g(lo("a"), lo("b")), gi(up("b"), up("c")), phi({lo("c")}),
                     phi({up("a")})});
  auto c = canonicalize(e);
  REQUIRE(c.terms.size() == 1);
  CHECK(c.terms[0].factors.size() == 2);
  auto kept = canonicalize(monomial({gi(up("a"), up("b")), phi({lo("a")}), phi({lo("b")})}));
  CHECK(kept.terms[0].factors.size() == 3);
  auto tr = canonicalize(monomial({g(lo("a"), lo("b")), gi(up("a"), up("b"))}));
  CHECK(tr.terms[0].params == std::vector<std::string>{"D"});
}

TEST_CASE("validation rejects bad wiring") {
  CHECK_THROWS_AS(validate(Term{1, {}, {phi({lo("a"), lo("a")})}}), ValidationError);
  TensorExpr mixed = monomial({phi({lo("a")})}) + monomial({phi({lo("b")})});
  CHECK_THROWS_AS(validate(mixed), ValidationError);
}

TEST_CASE("substitute distributes derivatives onto the rule") {
  auto e = monomial({phi({lo("mu")})});
  auto c = scalar(3);
  CHECK(canonicalize(substitute(e, "phi", c, {})).is_zero());
  auto same = substitute(e, "psi", c, {});
  CHECK(equal(same, e));
  // h -> h + d xi + d xi on d_a h_bc
  std::vector<Index> ph{lo("p"), lo("q")};
  auto xi = [](Index s, Index d) { return make_factor("xi", {s}, {d}); };
  auto rule = monomial({h(lo("p"), lo("q"))}) + monomial({xi(lo("q"), lo("p"))}) +
              monomial({xi(lo("p"), lo("q"))});
  auto dh = monomial({h(lo("b"), lo("c"), {lo("a")})});
  auto s = canonicalize(substitute(dh, "h", rule, ph));
  CHECK(s.terms.size() == 3);
  CHECK_THROWS_AS(substitute(dh, "h", rule, std::vector<Index>{lo("p")}), UsageError);
}

TEST_CASE("json round trip") {
  auto e = canonicalize(monomial({F(lo("a"), lo("b"), {lo("c")}), h(up("a"), up("b"), {up("c")})}, Rational(-3, 7)) +
                        scalar(2) * parameter("A"));
  auto back = expr_from_json(nlohmann::json::parse(to_json(e).dump()));
  CHECK(canonicalize(back).terms == e.terms);
}

TEST_CASE("absorbing eta into a delta yields an eta") {
  auto e = monomial({delta_factor(up("x"), lo("a")), eta_factor(up("a"), up("m"))});
  auto c = canonicalize(e);
  REQUIRE(c.terms.size() == 1);
  REQUIRE(c.terms[0].factors.size() == 1);
  CHECK(c.terms[0].factors[0].head == "eta");
  auto f = monomial({eta_factor(lo("a"), lo("m")), eta_factor(up("a"), up("b"))});
  auto cf = canonicalize(f);
  REQUIRE(cf.terms.size() == 1);
  CHECK(cf.terms[0].factors[0].head == "delta");
  CHECK(cf.terms[0].factors[0].slots[0] == up("b"));
}

TEST_CASE("free kronecker factors have one stored form") {
  Factor lower_first = make_factor("delta", {lo("m"), up("n")});
  auto a = canonicalize(monomial({lower_first, phi({})}));
  auto b = canonicalize(monomial({delta_factor(up("n"), lo("m")), phi({})}));
  CHECK(a.terms == b.terms);
  // a mixed eta is a delta, a same-variance delta an eta
  auto c = canonicalize(monomial({make_factor("eta", {up("n"), lo("m")}), phi({})}));
  CHECK(c.terms == b.terms);
  auto d = canonicalize(monomial({make_factor("delta", {up("m"), up("n")}), phi({})}));
  auto e = canonicalize(monomial({eta_factor(up("n"), up("m")), phi({})}));
  CHECK(d.terms == e.terms);
}
