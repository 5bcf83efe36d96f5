#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "starjet/equivariance.hpp"
#include "starjet/fedosov.hpp"
#include "support.hpp"

using namespace starjet;
using ts::P;

namespace {

// Flat symplectic (q, p) leaf with transverse parameters (s, t): the upstairs
// chart of the rotation-reduction example.
std::shared_ptr<const PoissonChart> upstairs_chart(int bound = 8) {
  VarTablePtr v = ts::foliated_vars({"q", "p"}, {"s", "t"});
  PolyMat pi = poly_mat_zero(v, 2, 2);
  pi[0][1] = P(v, "1");
  pi[1][0] = P(v, "-1");
  PolyMat omega = poly_mat_zero(v, 2, 2);
  omega[0][1] = P(v, "-1");
  omega[1][0] = P(v, "1");
  return std::make_shared<PoissonChart>(v, 2, 2, bound, pi, omega);
}

// Downstairs chart where the rotation invariant s^2 + t^2 collapses to the
// single transverse coordinate u.
std::shared_ptr<const PoissonChart> downstairs_chart(int bound = 8) {
  VarTablePtr v = ts::foliated_vars({"q", "p"}, {"u"});
  PolyMat pi = poly_mat_zero(v, 2, 2);
  pi[0][1] = P(v, "1");
  pi[1][0] = P(v, "-1");
  PolyMat omega = poly_mat_zero(v, 2, 2);
  omega[0][1] = P(v, "-1");
  omega[1][0] = P(v, "1");
  return std::make_shared<PoissonChart>(v, 2, 1, bound, pi, omega);
}

std::shared_ptr<FedosovState> flat_state(std::shared_ptr<const PoissonChart> chart, int n) {
  LeafConnection conn{zero_christoffels(chart->vars(), chart->leaf_dim())};
  return std::make_shared<FedosovState>(build_fedosov(std::move(chart), conn, n));
}

Matrix mat2(long a, long b, long c, long d) {
  Matrix m(2, 2);
  m.at(0, 0) = Scalar(a);
  m.at(0, 1) = Scalar(b);
  m.at(1, 0) = Scalar(c);
  m.at(1, 1) = Scalar(d);
  return m;
}

// The quarter-turn rotation group of the (q, p) plane.
GroupAction quarter_turns() {
  GroupAction action;
  Matrix r = mat2(0, -1, 1, 0);
  action.elements = {Matrix::identity(2), r, r * r, r * r * r};
  return action;
}

// s d_t - t d_s as a linear field on the upstairs chart: row a holds the
// coefficients of the d_{x_a} component in the chart variables.
Matrix transverse_rotation_field() {
  Matrix v(4, 4);
  v.at(2, 3) = Scalar(-1);
  v.at(3, 2) = Scalar(1);
  return v;
}

PolyMap endomap(const std::shared_ptr<const PoissonChart>& chart,
                std::vector<Polynomial> components) {
  return make_poly_map(chart, chart, std::move(components));
}

}  // namespace

TEST_CASE("polynomial maps validate their shape and pull back by composition") {
  auto m = upstairs_chart();
  auto n = downstairs_chart();
  const VarTablePtr& vm = m->vars();
  const VarTablePtr& vn = n->vars();

  try {
    make_poly_map(m, n, {P(vm, "q"), P(vm, "p")});
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
  try {
    make_poly_map(m, n, {P(vn, "q"), P(vn, "p"), P(vn, "u")});
    FAIL("expected a context error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Context);
  }
  try {
    // the transverse target u may not depend on the leaf source variable q
    make_poly_map(m, n, {P(vm, "q"), P(vm, "p"), P(vm, "q")});
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
    CHECK(std::string(e.what()).find("depends on leaf source") != std::string::npos);
  }
  PolyMap loose = make_poly_map(m, n, {P(vm, "q"), P(vm, "p"), P(vm, "q")}, false);
  CHECK(pullback(loose, P(vn, "u")) == P(vm, "q"));

  PolyMap proj = make_poly_map(m, n, {P(vm, "q"), P(vm, "p"), P(vm, "s^2 + t^2")});
  CHECK(pullback(proj, P(vn, "u^2*q")) == P(vm, "(s^2 + t^2)^2*q"));
  CHECK(pullback(proj, P(vn, "1")) == P(vm, "1"));
  try {
    pullback(proj, P(vm, "q"));
    FAIL("expected a context error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Context);
  }
}

TEST_CASE("leafwise jacobians certify symplectic maps") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();

  auto all_zero = [](const PolyMat& mat) {
    for (const auto& row : mat)
      for (const auto& e : row)
        if (!e.is_zero()) return false;
    return true;
  };

  CHECK(all_zero(symplectic_residuals(endomap(chart, {P(v, "q"), P(v, "p")}))));
  CHECK(all_zero(symplectic_residuals(endomap(chart, {P(v, "q"), P(v, "p + q")}))));
  CHECK(all_zero(symplectic_residuals(endomap(chart, {P(v, "q + 1"), P(v, "p")}))));

  PolyMat bad = symplectic_residuals(endomap(chart, {P(v, "2*q"), P(v, "p")}));
  CHECK(!all_zero(bad));
  CHECK(!bad[0][1].is_zero());
}

TEST_CASE("pullback along flat symplectomorphisms intertwines the star products") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  StarProduct sp(flat_state(chart, 6));
  std::vector<std::pair<Polynomial, Polynomial>> battery = {
      {P(v, "q"), P(v, "p")},
      {P(v, "q^2"), P(v, "p^2")},
      {P(v, "q + p"), P(v, "q*p")},
  };
  IdealSpec whole_chart;

  for (const auto* text : {"q; p", "q; p + q", "q + 1; p"}) {
    std::string s(text);
    auto semi = s.find(';');
    PolyMap map = endomap(chart, {P(v, s.substr(0, semi)), P(v, s.substr(semi + 1))});
    CheckReport rep = pullback_morphism_check(map, sp, sp, whole_chart, 2, battery);
    CHECK(rep.pass);
    CHECK(rep.precision == kPrecExact);
    CHECK(rep.entries.size() == battery.size() * 3);
  }

  try {
    PolyMap map = endomap(chart, {P(v, "2*q"), P(v, "p")});
    pullback_morphism_check(map, sp, sp, whole_chart, 2, battery);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
    CHECK(std::string(e.what()).find("not leafwise symplectic") != std::string::npos);
  }

  auto other = upstairs_chart();
  StarProduct sp_other(flat_state(other, 4));
  try {
    PolyMap map = endomap(chart, {P(v, "q"), P(v, "p")});
    pullback_morphism_check(map, sp_other, sp, whole_chart, 1, battery);
    FAIL("expected a context error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Context);
  }
}

TEST_CASE("group actions are validated against every declared hypothesis") {
  auto chart = ts::flat_plane(10);
  const VarTablePtr& v = chart->vars();
  LeafConnection conn{zero_christoffels(v, 2)};
  WhitneySubset origin = make_whitney_subset(chart, {P(v, "q"), P(v, "p")}, 1);

  CheckReport good = validate_group_action(quarter_turns(), *chart, &conn, &origin);
  CHECK(good.pass);

  auto has_failure = [](const CheckReport& rep, const char* label_piece) {
    for (const auto& e : rep.entries)
      if (!e.pass && e.label.find(label_piece) != std::string::npos) return true;
    return false;
  };

  GroupAction open_set;
  open_set.elements = {Matrix::identity(2), mat2(0, -1, 1, 0)};
  CheckReport not_closed = validate_group_action(open_set, *chart, nullptr, nullptr);
  CHECK(!not_closed.pass);
  CHECK(has_failure(not_closed, "closure under composition"));

  GroupAction scaling;
  scaling.elements = {mat2(2, 0, 0, 1)};
  CheckReport stretched = validate_group_action(scaling, *chart, nullptr, nullptr);
  CHECK(!stretched.pass);
  CHECK(has_failure(stretched, "preserves bivector"));

  GroupAction degenerate;
  degenerate.elements = {Matrix(2, 2)};
  CheckReport flattened = validate_group_action(degenerate, *chart, nullptr, nullptr);
  CHECK(!flattened.pass);
  CHECK(has_failure(flattened, "invertible"));

  try {
    validate_group_action(GroupAction{}, *chart, nullptr, nullptr);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }

  GroupAction pinned = quarter_turns();
  pinned.invariant_generators = {P(v, "q")};  // a quarter turn moves q
  CheckReport moved = validate_group_action(pinned, *chart, nullptr, nullptr);
  CHECK(!moved.pass);
  CHECK(has_failure(moved, "fixes declared invariant"));

  auto up = upstairs_chart();
  const VarTablePtr& vu = up->vars();
  LeafConnection up_conn{zero_christoffels(vu, 2)};
  WhitneySubset tube = make_whitney_subset(up, {P(vu, "s^2 + t^2")}, 1);
  GroupAction spin;
  spin.generator = transverse_rotation_field();
  spin.invariant_generators = {P(vu, "q"), P(vu, "p"), P(vu, "s^2 + t^2")};
  CheckReport infinitesimal = validate_group_action(spin, *up, &up_conn, &tube);
  CHECK(infinitesimal.pass);

  GroupAction euler;
  euler.generator = Matrix::identity(2);  // the dilation field q d_q + p d_p
  CheckReport dilated = validate_group_action(euler, *chart, nullptr, nullptr);
  CHECK(!dilated.pass);
  CHECK(has_failure(dilated, "preserves bivector"));
}

TEST_CASE("the star product is invariant under a finite symplectic action") {
  auto chart = ts::flat_plane(10);
  StarProduct sp(flat_state(chart, 6));

  CheckReport rep = invariance_check(quarter_turns(), sp, nullptr, 2, 3, 5);
  CHECK(rep.pass);
  CHECK(rep.precision == kPrecExact);
  CHECK(!rep.entries.empty());

  GroupAction trivial;
  trivial.elements = {Matrix::identity(2)};
  CHECK(invariance_check(trivial, sp, nullptr, 1, 2, 3).pass);

  GroupAction scaling;
  scaling.elements = {mat2(2, 0, 0, 1)};
  try {
    invariance_check(scaling, sp, nullptr, 1, 2, 3);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
    CHECK(std::string(e.what()).find("invariance hypotheses") != std::string::npos);
  }
}

TEST_CASE("the star product is invariant under an infinitesimal transverse rotation") {
  auto up = upstairs_chart();
  const VarTablePtr& vu = up->vars();
  StarProduct sp(flat_state(up, 6));
  WhitneySubset tube = make_whitney_subset(up, {P(vu, "s^2 + t^2")}, 1);

  GroupAction spin;
  spin.generator = transverse_rotation_field();
  spin.invariant_generators = {P(vu, "q"), P(vu, "p"), P(vu, "s^2 + t^2")};

  CheckReport rep = invariance_check(spin, sp, &tube, 2, 3, 9);
  CHECK(rep.pass);
  CHECK(rep.precision == kPrecExact);
}

TEST_CASE("projection onto the invariant ring identifies the quotient") {
  auto m = upstairs_chart();
  auto n = downstairs_chart();
  const VarTablePtr& vm = m->vars();
  const VarTablePtr& vn = n->vars();

  ReductionSetup setup{m,
                       n,
                       make_whitney_subset(m, {P(vm, "s^2 + t^2")}, 1),
                       make_whitney_subset(n, {P(vn, "u")}, 1),
                       make_poly_map(m, n, {P(vm, "q"), P(vm, "p"), P(vm, "s^2 + t^2")}),
                       transverse_rotation_field()};

  CHECK(validate_reduction(setup).pass);
  CheckReport rep = projection_check(setup, 6, 13);
  CHECK(rep.pass);

  // the downstairs ideal generator lands squarely in the upstairs ideal
  Polynomial moved = pullback(setup.projection, P(vn, "u^2"));
  CHECK(moved == P(vm, "(s^2 + t^2)^2"));
  CHECK(normal_form(moved, setup.subset_x.ideal, m->degree_bound()).is_zero());

  // a nonzero downstairs jet stays nonzero upstairs
  Polynomial lifted = pullback(setup.projection, P(vn, "u"));
  CHECK(normal_form(lifted, setup.subset_x.ideal, m->degree_bound()) == P(vm, "s^2 + t^2"));

  ReductionSetup leaky = setup;
  leaky.projection = make_poly_map(m, n, {P(vm, "q"), P(vm, "p"), P(vm, "s")});
  CheckReport broken = validate_reduction(leaky);
  CHECK(!broken.pass);
  bool witnessed = false;
  for (const auto& e : broken.entries)
    if (!e.pass && e.label.find("maps into the upstairs ideal") != std::string::npos)
      witnessed = true;
  CHECK(witnessed);

  ReductionSetup foreign = setup;
  foreign.projection =
      make_poly_map(upstairs_chart(), n, {P(vm, "q"), P(vm, "p"), P(vm, "s^2 + t^2")});
  try {
    validate_reduction(foreign);
    FAIL("expected a context error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Context);
  }
}

TEST_CASE("reduction commutes with quantization on the sample battery") {
  auto m = upstairs_chart();
  auto n = downstairs_chart();
  const VarTablePtr& vm = m->vars();
  const VarTablePtr& vn = n->vars();

  ReductionSetup setup{m,
                       n,
                       make_whitney_subset(m, {P(vm, "s^2 + t^2")}, 1),
                       make_whitney_subset(n, {P(vn, "u")}, 1),
                       make_poly_map(m, n, {P(vm, "q"), P(vm, "p"), P(vm, "s^2 + t^2")}),
                       transverse_rotation_field()};
  StarProduct sp_m(flat_state(m, 6));
  StarProduct sp_n(flat_state(n, 6));

  std::vector<std::pair<Polynomial, Polynomial>> battery = {
      {P(vn, "q"), P(vn, "p")},
      {P(vn, "u"), P(vn, "u")},
      {P(vn, "q*u"), P(vn, "p")},
  };
  CheckReport rep = reduction_compare(setup, sp_m, sp_n, 2, battery);
  CHECK(rep.pass);
  CHECK(rep.precision == kPrecExact);

  // both sides of the first pair produce q*p - (i/2) hbar {q, p}
  StarCoefficients down = sp_n.coefficients(P(vn, "q"), P(vn, "p"), 1);
  CHECK(down.c[0] == P(vn, "q*p"));
  CHECK(down.c[1] == Polynomial::constant(vn, Scalar::imag(-1, 2)));
  StarCoefficients lifted = sp_m.coefficients(P(vm, "q"), P(vm, "p"), 1);
  CHECK(lifted.c[0] == P(vm, "q*p"));
  CHECK(lifted.c[1] == Polynomial::constant(vm, Scalar::imag(-1, 2)));

  // transverse functions are central on both sides: no hbar corrections
  StarCoefficients uu = sp_n.coefficients(P(vn, "u"), P(vn, "u"), 2);
  CHECK(uu.c[0] == P(vn, "u^2"));
  CHECK(uu.c[1].is_zero());
  CHECK(uu.c[2].is_zero());
  StarCoefficients ww =
      sp_m.coefficients(P(vm, "s^2 + t^2"), P(vm, "s^2 + t^2"), 2);
  CHECK(ww.c[0] == P(vm, "(s^2 + t^2)^2"));
  CHECK(ww.c[1].is_zero());
  CHECK(ww.c[2].is_zero());
}
