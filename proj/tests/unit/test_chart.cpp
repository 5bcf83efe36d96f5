#include <catch2/catch_amalgamated.hpp>

#include "starjet/chart.hpp"
#include "starjet/rng.hpp"
#include "support.hpp"

using namespace starjet;
using ts::P;

TEST_CASE("constant symplectic plane validates") {
  auto chart = ts::flat_plane();
  auto v = validate_chart(*chart);
  CHECK(v.ok());
  CHECK(v.inverse_precision == kPrecExact);
  CHECK(chart->poisson_bracket(P(chart->vars(), "q"), P(chart->vars(), "p")) ==
        P(chart->vars(), "1"));
}

TEST_CASE("transverse-dependent bivector inverts as a series") {
  auto chart = ts::foliated_chart(4);
  const auto& vars = chart->vars();
  CHECK(chart->omega()[0][1] == P(vars, "-1 - t^2").with_precision(4));
  CHECK(chart->omega()[0][1].precision() == 4);
  auto v = validate_chart(*chart);
  CHECK(v.ok());
  CHECK(v.inverse_precision == 4);

  // transverse coordinates are central for the bracket
  CHECK(chart->poisson_bracket(P(vars, "t"), P(vars, "x1")).is_zero());
  CHECK(chart->poisson_bracket(P(vars, "x1"), P(vars, "x2")) == P(vars, "1 - t^2 + t^4"));
}

TEST_CASE("degenerate bivector is flagged") {
  auto v = ts::leaf_vars({"x1", "x2"});
  PolyMat pi = poly_mat_zero(v, 2, 2);
  pi[0][1] = P(v, "x1");
  pi[1][0] = P(v, "-x1");
  PolyMat omega = poly_mat_zero(v, 2, 2);  // shape placeholder; never inverse
  PoissonChart chart(v, 2, 0, 4, pi, omega);
  auto val = chart.validate();
  CHECK_FALSE(val.nondegenerate);
  CHECK_FALSE(val.ok());
  CHECK(val.detail.find("degenerate") != std::string::npos);
}

TEST_CASE("asymmetry and bad inverses are flagged") {
  auto v = ts::leaf_vars({"x1", "x2"});
  PolyMat pi = poly_mat_zero(v, 2, 2);
  pi[0][1] = P(v, "1");
  pi[1][0] = P(v, "1");  // not antisymmetric
  PoissonChart bad(v, 2, 0, 4, pi, pi);
  CHECK_FALSE(bad.validate().antisymmetric);

  PolyMat good = poly_mat_zero(v, 2, 2);
  good[0][1] = P(v, "1");
  good[1][0] = P(v, "-1");
  PolyMat wrong = poly_mat_zero(v, 2, 2);
  wrong[0][1] = P(v, "2");
  wrong[1][0] = P(v, "-2");
  PoissonChart mismatched(v, 2, 0, 4, good, wrong);
  auto val = mismatched.validate();
  CHECK(val.antisymmetric);
  CHECK_FALSE(val.inverse_pair);
}

TEST_CASE("jacobi identity catches non-poisson bivectors") {
  auto v = ts::leaf_vars({"x1", "x2", "x3", "x4"});
  PolyMat pi = poly_mat_zero(v, 4, 4);
  pi[0][1] = P(v, "1");
  pi[1][0] = P(v, "-1");
  pi[2][3] = P(v, "1 + x2");
  pi[3][2] = P(v, "-1 - x2");
  PolyMat omega = detail::poly_mat_series_inverse(pi, 6);
  PoissonChart chart(v, 4, 0, 6, pi, omega);
  auto val = chart.validate();
  CHECK_FALSE(val.jacobi);
  CHECK(val.detail.find("Jacobi") != std::string::npos);
}

TEST_CASE("bracket is a biderivation satisfying jacobi") {
  auto chart = ts::curved_plane(8);
  const auto& v = chart->vars();
  Rng rng(3);
  auto rand_poly = [&](int deg) {
    Polynomial out = Polynomial::zero(v);
    for (int t = 0; t < 4; ++t) {
      int a = static_cast<int>(rng.range(0, deg));
      int b = static_cast<int>(rng.range(0, deg - a));
      out = out + Polynomial::monomial(v, {a, b}, Scalar(rng.range(-3, 3)));
    }
    return out;
  };
  for (int trial = 0; trial < 10; ++trial) {
    Polynomial f = rand_poly(2), g = rand_poly(2), h = rand_poly(2);
    auto br = [&](const Polynomial& a, const Polynomial& b) { return chart->poisson_bracket(a, b); };
    CHECK((br(f, g) + br(g, f)).is_zero());
    CHECK(br(f, g * h) == br(f, g) * h + g * br(f, h));
    Polynomial jac = br(f, br(g, h)) + br(g, br(h, f)) + br(h, br(f, g));
    INFO(jac.str());
    CHECK(jac.is_zero());
  }
}
