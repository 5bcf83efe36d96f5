#include <catch2/catch_amalgamated.hpp>

#include "starjet/ideal.hpp"
#include "starjet/rng.hpp"
#include "support.hpp"

using namespace starjet;
using ts::P;

TEST_CASE("groebner basis of a single variable") {
  auto v = ts::leaf_vars({"x", "y"});
  auto basis = truncated_buchberger({P(v, "x")}, 5);
  REQUIRE(basis.size() == 1);
  CHECK(basis[0] == P(v, "x"));

  IdealSpec ideal({P(v, "x")});
  CHECK(normal_form(P(v, "x^2 + y"), ideal, 5) == P(v, "y"));
}

TEST_CASE("reduction substitutes along relations") {
  auto v = ts::leaf_vars({"x", "y"});
  IdealSpec ideal({P(v, "x^2 - y")});
  CHECK(normal_form(P(v, "x^4"), ideal, 4) == P(v, "y^2"));
}

TEST_CASE("powers of a point ideal truncate jets") {
  auto v = ts::leaf_vars({"x", "y"});
  SECTION("single variable cube") {
    IdealSpec cube = ideal_power({P(v, "x")}, 2);
    CHECK(normal_form(P(v, "x^3"), cube, 4).is_zero());
    CHECK(normal_form(P(v, "x^2 + x^3"), cube, 4) == P(v, "x^2"));
  }
  SECTION("squared nonreduced generator") {
    auto w = ts::foliated_vars({"q"}, {"s", "t"});
    IdealSpec sq = ideal_power({P(w, "s^2+t^2")}, 1);
    CHECK(normal_form(P(w, "(s^2+t^2)^2"), sq, 4).is_zero());
    CHECK_FALSE(normal_form(P(w, "s^2+t^2"), sq, 4).is_zero());
  }
}

TEST_CASE("expanded generators of ideal powers") {
  auto v = ts::leaf_vars({"x", "y"});
  SECTION("pairs from two generators") {
    auto gens = ideal_power({P(v, "x"), P(v, "y")}, 1).expanded_generators();
    REQUIRE(gens.size() == 3);
    CHECK(gens[0] == P(v, "y^2"));
    CHECK(gens[1] == P(v, "x*y"));
    CHECK(gens[2] == P(v, "x^2"));
  }
  SECTION("power zero keeps the generator") {
    auto gens = ideal_power({P(v, "x^2 - y")}, 0).expanded_generators();
    REQUIRE(gens.size() == 1);
    CHECK(gens[0] == P(v, "x^2 - y"));
  }
  SECTION("third power of the plane point") {
    auto gens = ideal_power({P(v, "x"), P(v, "y")}, 2).expanded_generators();
    REQUIRE(gens.size() == 4);
    for (const auto& g : gens) CHECK(g.degree() == 3);
  }
}

TEST_CASE("reduction is a ring map modulo the ideal") {
  auto v = ts::leaf_vars({"x", "y"});
  IdealSpec ideal({P(v, "x^2 - y"), P(v, "y^3")});
  int bound = 7;
  Rng rng(17);
  auto rand_poly = [&](int deg) {
    Polynomial out = Polynomial::zero(v);
    for (int t = 0; t < 5; ++t) {
      std::vector<int> e = {static_cast<int>(rng.range(0, deg)), 0};
      e[1] = static_cast<int>(rng.range(0, deg - e[0]));
      out = out + Polynomial::monomial(v, e, Scalar(rng.range(-3, 3)));
    }
    return out;
  };
  for (int trial = 0; trial < 15; ++trial) {
    Polynomial f = rand_poly(3);
    Polynomial g = rand_poly(3);
    auto nf = [&](const Polynomial& p) { return normal_form(p, ideal, bound); };
    CHECK(nf(f + g) == nf(nf(f) + nf(g)));
    CHECK(nf(f * g) == nf(nf(f) * nf(g)));
    CHECK(nf(f - nf(f)).is_zero());
    // ideal members reduce to zero
    CHECK(nf(f * P(v, "x^2 - y")).is_zero());
  }
}

TEST_CASE("reduction stops at the degree bound") {
  auto v = ts::leaf_vars({"x", "y"});
  IdealSpec ideal({P(v, "x^2 - y")});
  CHECK_THROWS_AS(normal_form(P(v, "x^6"), ideal, 4), Error);
  try {
    normal_form(P(v, "x^6"), ideal, 4);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Truncation);
  }
}

TEST_CASE("basis construction rejects bad input") {
  auto v = ts::leaf_vars({"x", "y"});
  CHECK_THROWS_AS(truncated_buchberger({Polynomial::zero(v)}, 3), Error);
  CHECK_THROWS_AS(truncated_buchberger({P(v, "x^2")}, 1), Error);
  CHECK(truncated_buchberger({}, 3).empty());
  CHECK_THROWS_AS(IdealSpec({P(v, "x").with_precision(2)}), Error);
}

TEST_CASE("classic intersection needs an s-polynomial") {
  auto v = ts::leaf_vars({"x", "y"});
  // <xy - x, y^2 - x> completes with x^2 - x in degree 2
  IdealSpec ideal({P(v, "x*y - x"), P(v, "y^2 - x")});
  CHECK(normal_form(P(v, "x^2 - x"), ideal, 6).is_zero());
  CHECK_FALSE(normal_form(P(v, "x"), ideal, 6).is_zero());
}
