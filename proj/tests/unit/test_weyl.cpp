#include <catch2/catch_amalgamated.hpp>

#include <memory>

#include "starjet/rng.hpp"
#include "starjet/weyl.hpp"
#include "support.hpp"

using namespace starjet;
using ts::P;

namespace {

struct Fixture {
  std::shared_ptr<const PoissonChart> chart = ts::flat_plane();
  std::shared_ptr<const WeylContext> ctx = std::make_shared<WeylContext>(chart);
  VarTablePtr v = chart->vars();

  // fiber generator y_i (1-based), as a weyl element
  WeylElement y(int i) const {
    WeylElement e = WeylElement::zero(v);
    std::vector<int> exps(2, 0);
    exps[i - 1] = 1;
    e.add(WeylKey{mono_pack(exps), 0, 0}, P(v, "1"));
    return e;
  }
  WeylElement dx(int i) const {
    WeylElement e = WeylElement::zero(v);
    e.add(WeylKey{0, 0, std::uint32_t{1} << (i - 1)}, P(v, "1"));
    return e;
  }
  WeylElement fiber(std::vector<int> exps, const char* coeff = "1", int hbar = 0,
                    std::uint32_t form = 0) const {
    WeylElement e = WeylElement::zero(v);
    e.add(WeylKey{mono_pack(exps), hbar, form}, P(v, coeff));
    return e;
  }
  WeylElement rand_element(Rng& rng, bool with_forms = true) const {
    WeylElement e = WeylElement::zero(v);
    for (int t = 0; t < 5; ++t) {
      std::vector<int> exps = {static_cast<int>(rng.range(0, 2)),
                               static_cast<int>(rng.range(0, 2))};
      int hb = static_cast<int>(rng.range(0, 1));
      std::uint32_t form = with_forms ? static_cast<std::uint32_t>(rng.range(0, 3)) : 0;
      std::vector<int> base = {static_cast<int>(rng.range(0, 2)),
                               static_cast<int>(rng.range(0, 2))};
      e.add(WeylKey{mono_pack(exps), hb, form},
            Polynomial::monomial(v, base, Scalar(rng.range(-2, 2))));
    }
    return e;
  }
};

}  // namespace

TEST_CASE("fiber product picks up the antisymmetric correction") {
  Fixture fx;
  WeylElement prod = moyal(*fx.ctx, fx.y(1), fx.y(2), 20);
  WeylElement expect = fx.fiber({1, 1});
  expect.add(WeylKey{0, 1, 0}, Polynomial::constant(fx.v, Scalar::imag(-1, 2)));
  CHECK(prod == expect);

  // opposite order flips the correction
  WeylElement prod2 = moyal(*fx.ctx, fx.y(2), fx.y(1), 20);
  WeylElement expect2 = fx.fiber({1, 1});
  expect2.add(WeylKey{0, 1, 0}, Polynomial::constant(fx.v, Scalar::imag(1, 2)));
  CHECK(prod2 == expect2);
}

TEST_CASE("one is a unit for the fiber product") {
  Fixture fx;
  Rng rng(9);
  WeylElement one = WeylElement::from_base(P(fx.v, "1"));
  for (int trial = 0; trial < 5; ++trial) {
    WeylElement a = fx.rand_element(rng);
    CHECK(moyal(*fx.ctx, a, one, 30) == a);
    CHECK(moyal(*fx.ctx, one, a, 30) == a);
  }
}

TEST_CASE("fiber generators have central commutator") {
  Fixture fx;
  WeylElement c = graded_commutator(*fx.ctx, fx.y(1), fx.y(2), 20);
  WeylElement expect = WeylElement::zero(fx.v);
  expect.add(WeylKey{0, 1, 0}, Polynomial::constant(fx.v, -Scalar::i()));
  CHECK(c == expect);
}

TEST_CASE("form generators anticommute") {
  Fixture fx;
  WeylElement ab = moyal(*fx.ctx, fx.dx(1), fx.dx(2), 20);
  WeylElement ba = moyal(*fx.ctx, fx.dx(2), fx.dx(1), 20);
  CHECK(ab == -ba);
  CHECK(moyal(*fx.ctx, fx.dx(1), fx.dx(1), 20).is_zero());
}

TEST_CASE("vertical differential and its codifferential") {
  Fixture fx;
  SECTION("differential of a fiber quadratic") {
    WeylElement a = fx.fiber({1, 1});  // y1 y2
    WeylElement d = delta(a);
    WeylElement expect = fx.fiber({0, 1}, "1", 0, 1u << 0);  // dx1 y2
    expect = expect + fx.fiber({1, 0}, "1", 0, 1u << 1);     // dx2 y1
    CHECK(d == expect);
  }
  SECTION("base functions are closed") {
    CHECK(delta(WeylElement::from_base(P(fx.v, "q^2*p"))).is_zero());
  }
  SECTION("codifferential moves forms to fibers") {
    CHECK(delta_star(fx.dx(1)) == fx.y(1));
    CHECK(delta_star(fx.y(1)).is_zero());
    WeylElement two_form = moyal(*fx.ctx, fx.dx(1), fx.dx(2), 20);
    WeylElement expect = fx.fiber({1, 0}, "1", 0, 1u << 1)    // y1 dx2
                         - fx.fiber({0, 1}, "1", 0, 1u << 0); // - y2 dx1
    CHECK(delta_star(two_form) == expect);
  }
  SECTION("normalized inverse") {
    CHECK(delta_inv(fx.dx(1)) == fx.y(1));
    CHECK(delta_inv(fx.fiber({1, 0}, "1", 0, 1u << 1)) == fx.fiber({1, 1}, "1/2"));
  }
  SECTION("both square to zero and the homotopy resolves the identity") {
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
      WeylElement a = fx.rand_element(rng);
      CHECK(delta(delta(a)).is_zero());
      CHECK(delta_star(delta_star(a)).is_zero());
      WeylElement resolved = delta(delta_inv(a)) + delta_inv(delta(a)) + projection_00(a);
      CHECK(resolved == a);
    }
  }
  SECTION("degree count on monomials") {
    Fixture f2;
    for (int p = 0; p <= 2; ++p)
      for (std::uint32_t form = 0; form < 4; ++form) {
        std::vector<int> exps = {p, 0};
        WeylElement mono = f2.fiber(exps, "1", 0, form);
        WeylElement lhs = delta(delta_star(mono)) + delta_star(delta(mono));
        int count = p + std::popcount(form);
        CHECK(lhs == mono.scaled(Scalar(count)));
      }
  }
}

TEST_CASE("symbol forgets the fiber and rejects forms") {
  Fixture fx;
  WeylElement a = WeylElement::from_base(P(fx.v, "q + p^2"));
  a.add(WeylKey{mono_pack({1, 0}), 0, 0}, P(fx.v, "q"));
  a.add(WeylKey{0, 2, 0}, P(fx.v, "p"));
  HbarSeries s = a.symbol();
  CHECK(s.coeff(0) == P(fx.v, "q + p^2"));
  CHECK(s.coeff(2) == P(fx.v, "p"));

  CHECK(WeylElement::from_base(P(fx.v, "1")).symbol().coeff(0) == P(fx.v, "1"));

  WeylElement with_form = fx.dx(1);
  CHECK_THROWS_AS(with_form.symbol(), Error);
}

TEST_CASE("filtration degree of mixed elements") {
  Fixture fx;
  CHECK(fedosov_degree(WeylElement::from_base(P(fx.v, "1"), 1)) == 2);  // hbar alone
  CHECK(fedosov_degree(fx.y(1)) == 1);
  CHECK(fedosov_degree(WeylElement::zero(fx.v)) == std::numeric_limits<int>::max());

  auto big = ts::leaf_vars({"a", "b", "c", "d"});
  PolyMat pi = poly_mat_zero(big, 4, 4);
  pi[0][1] = P(big, "1");
  pi[1][0] = P(big, "-1");
  pi[2][3] = P(big, "1");
  pi[3][2] = P(big, "-1");
  auto chart4 = std::make_shared<PoissonChart>(big, 4, 0, 8, pi, pi);
  WeylElement m = WeylElement::zero(big);
  m.add(WeylKey{mono_pack({1, 1, 0, 0}), 0, 0}, P(big, "1"));  // y1 y2
  m.add(WeylKey{mono_pack({0, 0, 1, 0}), 1, 0}, P(big, "1"));  // hbar y3
  CHECK(fedosov_degree(m) == 2);
}

TEST_CASE("fiber product is associative and filtered") {
  Fixture fx;
  Rng rng(33);
  for (int trial = 0; trial < 6; ++trial) {
    WeylElement a = fx.rand_element(rng);
    WeylElement b = fx.rand_element(rng);
    WeylElement c = fx.rand_element(rng);
    int cap = 40;
    WeylElement left = moyal(*fx.ctx, moyal(*fx.ctx, a, b, cap), c, cap);
    WeylElement right = moyal(*fx.ctx, a, moyal(*fx.ctx, b, c, cap), cap);
    CHECK(left == right);

    if (!a.is_zero() && !b.is_zero()) {
      WeylElement prod = moyal(*fx.ctx, a, b, cap);
      CHECK(fedosov_degree(prod) >= fedosov_degree(a) + fedosov_degree(b));
    }
  }
}

TEST_CASE("commutator linearizes to the fiber bracket") {
  Fixture fx;
  // a = y1^2 y2, b = y1 y2^2; the leading commutator term is
  // -i hbar {a, b} with {a, b} = da/dy1 db/dy2 - da/dy2 db/dy1 = 3 y1^2 y2^2
  WeylElement a = fx.fiber({2, 1});
  WeylElement b = fx.fiber({1, 2});
  WeylElement c = graded_commutator(*fx.ctx, a, b, 40);
  CHECK(c.coeff(WeylKey{mono_pack({2, 2}), 1, 0}) ==
        Polynomial::constant(fx.v, Scalar::imag(-3)));
}

TEST_CASE("truncation tags guard mixed arithmetic") {
  Fixture fx;
  WeylElement a = fx.fiber({2, 0}).with_truncation(4);
  WeylElement b = fx.fiber({0, 2}).with_truncation(6);
  CHECK_THROWS_AS(a + b, Error);
  CHECK_NOTHROW(a + fx.fiber({1, 1}));  // untagged operand adopts the tag
  CHECK((a + fx.fiber({1, 1})).truncation() == 4);

  CHECK_THROWS_AS(moyal(*fx.ctx, fx.y(1), fx.y(2)), Error);  // no order anywhere
  WeylElement tagged = moyal(*fx.ctx, a, a.with_truncation(4));
  CHECK(tagged.truncation() == 4);
  CHECK_THROWS_AS(moyal(*fx.ctx, a, b), Error);

  // hbar shifts move the tag with the filtration weight
  CHECK(a.hbar_shifted(1).truncation() == 6);

  // truncation drops high filtration slices
  WeylElement mixed = fx.fiber({2, 1}) + fx.fiber({1, 0}, "1", 1);  // degrees 3 and 3
  CHECK(mixed.truncated_fedosov(2).is_zero());
  CHECK(mixed.with_truncation(3) == mixed.with_truncation(3));
}

TEST_CASE("dividing by the formal parameter needs divisibility") {
  Fixture fx;
  WeylElement h = WeylElement::from_base(P(fx.v, "q"), 2);
  WeylElement shifted = i_over_hbar(h);
  CHECK(shifted.coeff(WeylKey{0, 1, 0}) == P(fx.v, "q").scaled(Scalar::i()));
  CHECK_THROWS_AS(i_over_hbar(fx.y(1)), Error);
}
