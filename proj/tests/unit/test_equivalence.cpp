#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "starjet/equivalence.hpp"
#include "support.hpp"

using namespace starjet;
using ts::P;

namespace {

std::shared_ptr<FedosovState> flat_state(std::shared_ptr<const PoissonChart> chart, int n) {
  LeafConnection conn{zero_christoffels(chart->vars(), chart->leaf_dim())};
  return std::make_shared<FedosovState>(build_fedosov(std::move(chart), conn, n));
}

}  // namespace

TEST_CASE("identical products need no gauge transformation") {
  auto chart = ts::flat_plane(10);
  StarProduct sp(flat_state(chart, 6));

  EquivalenceResult result = equivalence_solve(sp, sp, 2);
  CHECK(result.success);
  CHECK(result.failed_order == 0);
  CHECK(result.held_out_pass);
  REQUIRE(result.operators.size() == 2);
  CHECK(result.operators[0].is_zero());
  CHECK(result.operators[1].is_zero());
  CHECK(result.precision == kPrecExact);
}

TEST_CASE("an implanted gauge transformation is recovered exactly") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  StarProduct sp(flat_state(chart, 6));
  FedosovOracle base(sp);

  // T = 1 + hbar * (d_q d_p + q d_p^2); both terms lower the total degree,
  // vanish on the chart variables, and have polynomial coefficients, so T is
  // already the normalized representative the solver aims for.
  DiffOp delta{v, {{P(v, "1"), {1, 1}}, {P(v, "q"), {0, 2}}}};
  FedosovOracle plain(sp);
  ConjugatedOracle twisted(plain, delta);

  EquivalenceResult result = equivalence_solve(base, twisted, 2);
  CHECK(result.success);
  CHECK(result.held_out_pass);
  REQUIRE(result.operators.size() == 2);
  CHECK(result.operators[1].is_zero());

  const DiffOp& found = result.operators[0];
  CHECK(found.terms.size() == 2);
  for (const auto* text : {"q^2*p^2", "q^3*p", "q*p", "q^2 + p^2", "q^3*p^3"}) {
    Polynomial probe = P(v, text);
    CHECK(found.apply(probe) == delta.apply(probe));
  }
  CHECK(found.apply(P(v, "q^2*p^2")) == P(v, "4*q*p + 2*q^3"));
}

TEST_CASE("a too-small jet order is reported rather than guessed around") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  StarProduct sp(flat_state(chart, 6));
  FedosovOracle base(sp);

  // q^3 d_p^2 raises the total degree, so matching it at hbar^2 needs values
  // of D_1 beyond any fixed jet range; the solver must say so.
  DiffOp delta{v, {{P(v, "q^3"), {0, 2}}}};
  FedosovOracle plain(sp);
  ConjugatedOracle twisted(plain, delta);

  try {
    equivalence_solve(base, twisted, 2);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
    CHECK(std::string(e.what()).find("too small") != std::string::npos);
  }

  try {
    equivalence_solve(base, base, 0);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
  try {
    EquivalenceOptions opt;
    opt.jet_order = 0;
    equivalence_solve(base, base, 1, opt);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }

  VarTablePtr w = ts::leaf_vars({"s", "t"});
  PolyMat pi = poly_mat_zero(w, 2, 2);
  pi[0][1] = P(w, "1");
  pi[1][0] = P(w, "-1");
  PolyMat omega = poly_mat_zero(w, 2, 2);
  omega[0][1] = P(w, "-1");
  omega[1][0] = P(w, "1");
  auto other = std::make_shared<PoissonChart>(w, 2, 0, 8, pi, omega);
  StarProduct sp_other(flat_state(other, 4));
  FedosovOracle foreign(sp_other);
  try {
    equivalence_solve(base, foreign, 1);
    FAIL("expected a context error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Context);
  }
}

TEST_CASE("products from different leaf metrics are gauge equivalent") {
  auto chart = ts::flat_plane(8);
  const VarTablePtr& v = chart->vars();
  StarProduct sp_flat(flat_state(chart, 6));

  SECTION("unit-determinant metric, exact arithmetic throughout") {
    PolyMat eta = poly_mat_zero(v, 2, 2);
    eta[0][0] = P(v, "1 + q^2");
    eta[0][1] = P(v, "q");
    eta[1][0] = P(v, "q");
    eta[1][1] = P(v, "1");
    LeafConnection conn = poisson_connection(LeafMetric{eta}, *chart);
    StarProduct sp_metric(std::make_shared<FedosovState>(build_fedosov(chart, conn, 6)));

    EquivalenceOptions opt;
    opt.coeff_degree = 6;
    EquivalenceResult result = equivalence_solve(sp_flat, sp_metric, 2, opt);
    CHECK(result.success);
    CHECK(result.failed_order == 0);
    CHECK(result.held_out_pass);
    CHECK(result.operators.size() == 2);
  }

  SECTION("diagonal 1 + q^2 metric, certified within the stored degree range") {
    PolyMat eta = poly_mat_zero(v, 2, 2);
    eta[0][0] = P(v, "1 + q^2");
    eta[1][1] = P(v, "1");
    LeafConnection conn = poisson_connection(LeafMetric{eta}, *chart);
    StarProduct sp_metric(std::make_shared<FedosovState>(build_fedosov(chart, conn, 6)));

    EquivalenceOptions opt;
    opt.coeff_degree = 8;
    EquivalenceResult result = equivalence_solve(sp_flat, sp_metric, 2, opt);
    CHECK(result.success);
    CHECK(result.failed_order == 0);
    CHECK(result.held_out_pass);
    CHECK(result.operators.size() == 2);
  }
}
