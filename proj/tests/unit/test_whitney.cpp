#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <vector>

#include "starjet/rng.hpp"
#include "starjet/whitney.hpp"
#include "support.hpp"

using namespace starjet;
using ts::P;

namespace {

Polynomial rand_poly(Rng& rng, const VarTablePtr& v, int deg) {
  Polynomial out = Polynomial::zero(v);
  int n = static_cast<int>(v->names.size());
  for (int t = 0; t < 4; ++t) {
    std::vector<int> e(n, 0);
    int budget = deg;
    for (int i = 0; i < n; ++i) {
      e[i] = static_cast<int>(rng.range(0, budget));
      budget -= e[i];
    }
    out = out + Polynomial::monomial(v, e, Scalar(rng.range(-3, 3)));
  }
  return out;
}

// Flat symplectic plane in coordinates (s, t) with {s, t} = 1, the natural
// home for subsets cut out by s^2 + t^2.
std::shared_ptr<const PoissonChart> radial_plane(int bound = 10) {
  VarTablePtr v = ts::leaf_vars({"s", "t"});
  PolyMat pi = poly_mat_zero(v, 2, 2);
  pi[0][1] = P(v, "1");
  pi[1][0] = P(v, "-1");
  PolyMat omega = poly_mat_zero(v, 2, 2);
  omega[0][1] = P(v, "-1");
  omega[1][0] = P(v, "1");
  return std::make_shared<PoissonChart>(v, 2, 0, bound, pi, omega);
}

std::shared_ptr<FedosovState> flat_state(std::shared_ptr<const PoissonChart> chart, int n) {
  LeafConnection conn{zero_christoffels(chart->vars(), chart->leaf_dim())};
  return std::make_shared<FedosovState>(build_fedosov(std::move(chart), conn, n));
}

Polynomial reduce(const Polynomial& p, const IdealSpec& ideal, const PoissonChart& chart) {
  return normal_form(p, ideal, std::max(chart.degree_bound(), p.degree()));
}

}  // namespace

TEST_CASE("the jet map reduces modulo powers of the subset ideal") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  WhitneySubset origin = make_whitney_subset(chart, {P(v, "q"), P(v, "p")}, 2);

  CHECK(jet_map(origin, P(v, "q^3 + q")).rep == P(v, "q"));
  CHECK(jet_map(origin, P(v, "1")).rep == P(v, "1"));
  CHECK(jet_map(origin, P(v, "q^2*p")).rep.is_zero());
  CHECK(jet_map(origin, P(v, "q*p + 7")).rep == P(v, "q*p + 7"));

  auto radial = radial_plane(10);
  const VarTablePtr& w = radial->vars();
  WhitneySubset circle = make_whitney_subset(radial, {P(w, "s^2 + t^2")}, 1);
  CHECK(jet_map(circle, P(w, "(s^2 + t^2)^2 + s")).rep == P(w, "s"));

  // algebra morphism: reducing before or after a product gives the same class
  Rng rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    Polynomial f = rand_poly(rng, v, 3);
    Polynomial g = rand_poly(rng, v, 3);
    Polynomial via_reps = jet_map(origin, f).rep * jet_map(origin, g).rep;
    CHECK(jet_map(origin, f * g).rep == jet_map(origin, via_reps).rep);
  }
}

TEST_CASE("jet classes coincide exactly when representatives differ by the ideal") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  WhitneySubset origin = make_whitney_subset(chart, {P(v, "q"), P(v, "p")}, 2);

  Polynomial f = P(v, "q*p - 2*q + 5");
  CHECK(jet_map(origin, f).rep == jet_map(origin, f + P(v, "q^2*p - 4*p^3")).rep);
  CHECK(jet_map(origin, f).rep != jet_map(origin, f + P(v, "q")).rep);
}

TEST_CASE("subset construction validates its input") {
  auto chart = ts::flat_plane(6);
  const VarTablePtr& v = chart->vars();

  try {
    make_whitney_subset(chart, {Polynomial::zero(v)}, 1);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
  try {
    make_whitney_subset(chart, {P(v, "q")}, -1);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
  try {
    make_whitney_subset(chart, {P(v, "q^7")}, 1);  // exceeds the degree bound
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
  auto other = radial_plane(6);
  try {
    make_whitney_subset(chart, {P(other->vars(), "s")}, 1);
    FAIL("expected a context error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Context);
  }
}

TEST_CASE("the bracket descends to jet classes") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  WhitneySubset origin = make_whitney_subset(chart, {P(v, "q"), P(v, "p")}, 2);

  JetClass cq = jet_map(origin, P(v, "q"));
  JetClass cp = jet_map(origin, P(v, "p"));
  CHECK(whitney_bracket(origin, cq, cp).rep == P(v, "1"));
  JetClass f = jet_map(origin, P(v, "q^2 + q*p"));
  CHECK(whitney_bracket(origin, f, f).rep.is_zero());

  // changing the representative by an ideal element moves the bracket by one
  // ideal power less (one derivative is spent on the perturbation)
  IdealSpec one_less({P(v, "q"), P(v, "p")}, 2);
  Polynomial g = P(v, "q*p + p");
  Polynomial j = P(v, "q^3");
  Polynomial shift = chart->poisson_bracket(g + j, P(v, "p^2")) -
                     chart->poisson_bracket(g, P(v, "p^2"));
  CHECK(reduce(shift, one_less, *chart).is_zero());
}

TEST_CASE("the bracket satisfies the jacobi identity in the quotient") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  WhitneySubset origin = make_whitney_subset(chart, {P(v, "q"), P(v, "p")}, 2);
  // composing two brackets spends one derivative on each intermediate
  // reduction, so the cyclic sum is certified one ideal power lower
  IdealSpec one_less({P(v, "q"), P(v, "p")}, 2);

  Rng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    JetClass f = jet_map(origin, rand_poly(rng, v, 3));
    JetClass g = jet_map(origin, rand_poly(rng, v, 3));
    JetClass h = jet_map(origin, rand_poly(rng, v, 3));
    Polynomial cyc = whitney_bracket(origin, whitney_bracket(origin, f, g), h).rep +
                     whitney_bracket(origin, whitney_bracket(origin, g, h), f).rep +
                     whitney_bracket(origin, whitney_bracket(origin, h, f), g).rep;
    CHECK(reduce(cyc, one_less, *chart).is_zero());
  }
}

TEST_CASE("the star product descends to jet classes") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  StarProduct sp(flat_state(chart, 6));
  WhitneySubset origin = make_whitney_subset(chart, {P(v, "q"), P(v, "p")}, 1);

  SECTION("first order survives where the pointwise product dies") {
    GradedJetClass c = whitney_star(origin, sp, jet_map(origin, P(v, "q")),
                                    jet_map(origin, P(v, "p")), 1);
    REQUIRE(c.c.size() == 2);
    CHECK(c.c[0].is_zero());  // qp lies in the square of the origin ideal
    CHECK(c.c[1] == Polynomial::constant(v, Scalar::imag(-1, 2)));
  }
  SECTION("the unit class is neutral") {
    JetClass g = jet_map(origin, P(v, "q + 3"));
    GradedJetClass c = whitney_star(origin, sp, jet_map(origin, P(v, "1")), g, 2);
    REQUIRE(c.c.size() == 3);
    CHECK(c.c[0] == g.rep);
    CHECK(c.c[1].is_zero());
    CHECK(c.c[2].is_zero());
  }
  SECTION("the zero class is absorbing") {
    JetClass z = jet_map(origin, P(v, "q^2"));
    CHECK(z.rep.is_zero());
    GradedJetClass c = whitney_star(origin, sp, z, jet_map(origin, P(v, "p")), 2);
    for (const auto& ck : c.c) CHECK(ck.is_zero());
  }
  SECTION("subset and product must share a chart") {
    auto other = radial_plane(10);
    WhitneySubset foreign = make_whitney_subset(other, {P(other->vars(), "s")}, 1);
    try {
      whitney_star(foreign, sp, JetClass{P(other->vars(), "s")},
                   JetClass{P(other->vars(), "t")}, 1);
      FAIL("expected a context error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Context);
    }
  }
}

TEST_CASE("an empty generator list leaves the star product unreduced") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  StarProduct sp(flat_state(chart, 10));
  WhitneySubset whole = make_whitney_subset(chart, {}, 1);

  Rng rng(23);
  Polynomial f = rand_poly(rng, v, 2);
  Polynomial g = rand_poly(rng, v, 2);
  std::vector<Polynomial> plain = sp.star(f, g, 2);
  GradedJetClass c = whitney_star(whole, sp, jet_map(whole, f), jet_map(whole, g), 2);
  REQUIRE(c.c.size() == plain.size());
  for (std::size_t k = 0; k < plain.size(); ++k) CHECK(c.c[k] == plain[k]);
}

TEST_CASE("the quotient star matches the bracket at first order") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  StarProduct sp(flat_state(chart, 6));
  WhitneySubset origin = make_whitney_subset(chart, {P(v, "q"), P(v, "p")}, 2);

  Rng rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    JetClass f = jet_map(origin, rand_poly(rng, v, 2));
    JetClass g = jet_map(origin, rand_poly(rng, v, 2));
    GradedJetClass fg = whitney_star(origin, sp, f, g, 1);
    GradedJetClass gf = whitney_star(origin, sp, g, f, 1);
    Polynomial residual =
        fg.c[1] - gf.c[1] + whitney_bracket(origin, f, g).rep.scaled(Scalar::i());
    CHECK(reduce(residual, origin.ideal, *chart).is_zero());
  }
}

TEST_CASE("the quotient star is associative with the documented order loss") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  StarProduct sp(flat_state(chart, 10));
  std::vector<Polynomial> gens = {P(v, "q"), P(v, "p")};
  WhitneySubset origin = make_whitney_subset(chart, gens, 2);
  const int max_order = 2;

  Rng rng(43);
  for (int trial = 0; trial < 2; ++trial) {
    JetClass f = jet_map(origin, rand_poly(rng, v, 3));
    JetClass g = jet_map(origin, rand_poly(rng, v, 3));
    JetClass h = jet_map(origin, rand_poly(rng, v, 3));
    GradedJetClass fg = whitney_star(origin, sp, f, g, max_order);
    GradedJetClass gh = whitney_star(origin, sp, g, h, max_order);
    for (int k = 0; k <= max_order; ++k) {
      Polynomial left = Polynomial::zero(v);
      Polynomial right = Polynomial::zero(v);
      for (int u = 0; u <= k; ++u) {
        left = left + sp.coefficients(fg.c[k - u], h.rep, max_order).c[u];
        right = right + sp.coefficients(f.rep, gh.c[k - u], max_order).c[u];
      }
      // reducing the inner factor discards an ideal element; the outer
      // coefficient spends up to k derivatives on it
      IdealSpec loss(gens, std::max(1, origin.order + 1 - k));
      CHECK(reduce(left - right, loss, *chart).is_zero());
    }
  }
}

TEST_CASE("representative independence holds with the documented order loss") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  StarProduct sp(flat_state(chart, 6));

  SECTION("a cube of a coordinate at the origin") {
    WhitneySubset origin = make_whitney_subset(chart, {P(v, "q"), P(v, "p")}, 2);
    RepresentativeReport rep = representative_independence(
        origin, sp, P(v, "q + p^2"), P(v, "q^3"), P(v, "q*p"), 2);
    CHECK(rep.pass);
    CHECK(rep.star_terms.size() == 3);
    CHECK_FALSE(rep.section_terms.empty());
  }
  SECTION("a squared radius generator") {
    auto radial = radial_plane(10);
    const VarTablePtr& w = radial->vars();
    StarProduct rsp(flat_state(radial, 6));
    WhitneySubset circle = make_whitney_subset(radial, {P(w, "s^2 + t^2")}, 1);
    RepresentativeReport rep = representative_independence(
        circle, rsp, P(w, "s"), P(w, "(s^2 + t^2)^2"), P(w, "t"), 1);
    CHECK(rep.pass);
  }
  SECTION("a perturbation outside the ideal is rejected") {
    WhitneySubset origin = make_whitney_subset(chart, {P(v, "q"), P(v, "p")}, 1);
    try {
      representative_independence(origin, sp, P(v, "q"), P(v, "q"), P(v, "p"), 1);
      FAIL("expected a precondition error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Precondition);
      CHECK(std::string(e.what()).find("ideal") != std::string::npos);
    }
  }
}
