#pragma once

#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "starjet/connection.hpp"

namespace starjet {

// The leaf two-form as a central fiberwise element: sum_{k<l} omega_kl dx^k ^ dx^l.
inline WeylElement central_two_form(const PoissonChart& chart) {
  int r = chart.leaf_dim();
  WeylElement out = WeylElement::zero(chart.vars());
  for (int k = 0; k < r; ++k)
    for (int l = k + 1; l < r; ++l) out.add(WeylKey{0, 0, (1u << k) | (1u << l)}, chart.omega()[k][l]);
  return out;
}

// Coordinate exterior derivative on fiberwise elements: sum_b dx^b ^ d_{x^b}.
inline WeylElement exterior_derivative(const PoissonChart& chart, const WeylElement& a) {
  int r = chart.leaf_dim();
  WeylElement out = WeylElement::zero(a.vars());
  int ap = a.precision();
  out.fold_precision(ap == kPrecExact ? kPrecExact : ap - 1);
  for (const auto& [k, c] : a.terms()) {
    for (int b = 0; b < r; ++b) {
      if (k.form & (1u << b)) continue;
      int sgn = std::popcount(k.form & ((1u << b) - 1)) & 1 ? -1 : 1;
      Polynomial dc = c.diff(b);
      if (dc.is_zero() && dc.exact()) continue;
      out.add(WeylKey{k.fiber, k.hbar, k.form | (1u << b)}, sgn < 0 ? -dc : dc);
    }
  }
  return out;
}

// Flat-structure data for one chart: the connection, the solved correction
// one-form r (truncated past filtration weight `truncation`), and the chosen
// central curvature offset.  The total connection
//   D = -delta + nabla + (i/hbar)[r, .]
// squares to the central two-form curvature_target() modulo the truncation.
struct FedosovState {
  std::shared_ptr<const PoissonChart> chart;
  LeafConnection connection;
  std::shared_ptr<const WeylContext> context;
  WeylElement r;                 // correction one-form, tagged with `truncation`
  int truncation = 0;            // filtration order N
  WeylElement curvature_offset;  // central closed two-form Omega', may be zero
  WeylElement lifted_curvature;  // curvature of `connection` in the fiber algebra

  WeylElement curvature_target() const { return curvature_offset - central_two_form(*chart); }
};

namespace detail {

inline void validate_curvature_offset(const PoissonChart& chart, const WeylElement& offset) {
  for (const auto& [k, c] : offset.terms()) {
    if (c.is_zero()) continue;
    if (k.fiber != 0 || form_degree(k) != 2)
      throw Error::precondition("curvature offset must be a central two-form");
    if (k.hbar < 1)
      throw Error::precondition(
          "curvature offset must sit at hbar order >= 1; an hbar^0 offset would deform "
          "the leaf two-form itself");
  }
  WeylElement d = exterior_derivative(chart, offset);
  if (!d.is_zero())
    throw Error::precondition("curvature offset two-form is not closed: d(offset) = " + d.str());
}

}  // namespace detail

// Solves the recursion for the correction one-form r with
//   delta r = R + nabla r + (i/hbar) r o r - Omega',
// normalized by delta*(r) = 0, climbing one filtration slice per step
// (weights 3 .. N, i.e. N-2 productive steps).  Post-conditions checked:
// delta*(r) = 0, r starts at weight 3, and the defining equation holds
// modulo weight > N-1; a nonzero residual there raises an
// internal-consistency error.
//
// The connection must keep the two-form parallel and be torsion-free.
// Torsion turns the delta/nabla anticommutator into a nonzero weight-one
// operator, a total-curvature contribution the weight >= 3 correction can
// never cancel -- and one the recursion's own residual check cannot see,
// since it solves an equation in which that operator never appears.  Such
// connections are therefore rejected up front.
inline FedosovState build_fedosov(std::shared_ptr<const PoissonChart> chart,
                                  const LeafConnection& conn, int truncation,
                                  const WeylElement& curvature_offset = WeylElement()) {
  if (!chart) throw Error::precondition("null chart");
  if (truncation < 2) throw Error::precondition("truncation order must be >= 2");
  ConnectionReport conn_report = check_poisson_connection(conn, *chart);
  if (!conn_report.omega_parallel)
    throw Error::precondition("connection does not keep the two-form parallel: " +
                              conn_report.detail);
  if (!conn_report.torsion_free)
    throw Error::precondition(
        conn_report.detail +
        "; the flatness recursion needs a torsion-free connection (torsion adds a "
        "weight-one delta/nabla anticommutator term that the weight >= 3 correction "
        "cannot cancel)");
  WeylElement offset =
      curvature_offset.vars() ? curvature_offset : WeylElement::zero(chart->vars());
  detail::validate_curvature_offset(*chart, offset);

  const int n = truncation;
  auto ctx = std::make_shared<WeylContext>(chart);
  WeylElement rhat = lift_curvature(conn, *chart);

  // acc accumulates R - Omega' + nabla r + (i/hbar) r o r for the r built so
  // far; slice d of acc is final once r holds every slice <= d.
  WeylElement acc = (rhat - offset).truncated_fedosov(n - 1);
  WeylElement r = WeylElement::zero(chart->vars());
  for (int d = 2; d <= n - 1; ++d) {
    WeylElement slice = delta_inv(acc.fedosov_slice(d));
    if (slice.is_zero()) continue;
    WeylElement prev = r;
    r = r + slice;
    WeylElement upd = nabla(conn, *chart, slice);
    if (!prev.is_zero()) upd = upd + i_over_hbar_commutator(*ctx, slice, prev, n - 1);
    upd = upd + i_over_hbar(moyal(*ctx, slice, slice, n + 1)).truncated_fedosov(n - 1);
    acc = acc + upd.truncated_fedosov(n - 1);
  }

  if (!delta_star(r).is_zero())
    throw Error::internal("correction one-form violates its normalization");
  if (!r.is_zero() && r.min_fedosov_degree() < 3)
    throw Error::internal("correction one-form has a component below weight 3");
  WeylElement residual = (delta(r) - acc).truncated_fedosov(n - 1);
  if (!residual.is_zero())
    throw Error::internal(
        "flatness recursion did not converge (connection is not admissible): residual " +
        residual.str());

  FedosovState state;
  state.chart = std::move(chart);
  state.connection = conn;
  state.context = std::move(ctx);
  state.r = r.with_truncation(n);
  state.truncation = n;
  state.curvature_offset = offset;
  state.lifted_curvature = std::move(rhat);
  return state;
}

// The total connection D a = -delta a + nabla a + (i/hbar)[r, a], reliable
// through filtration weight N-1 for inputs complete through weight N.
inline WeylElement flat_connection_apply(const FedosovState& state, const WeylElement& a) {
  WeylElement out = -delta(a) + nabla(state.connection, *state.chart, a) +
                    i_over_hbar_commutator(*state.context, state.r, a, state.truncation - 1);
  return out.truncated_fedosov(state.truncation - 1);
}

// Lifts a base polynomial to the D-flat section with symbol f, climbing one
// filtration slice per step (N steps).  The symbol of the result is exactly
// f; flatness holds modulo weight > N-1.
inline WeylElement quantize(const FedosovState& state, const Polynomial& f) {
  const PoissonChart& chart = *state.chart;
  if (!same_table(f.vars(), chart.vars()))
    throw Error::context("polynomial uses a foreign variable table");
  if (f.degree() > chart.degree_bound())
    throw Error::precondition("polynomial degree " + std::to_string(f.degree()) +
                              " exceeds the chart degree bound " +
                              std::to_string(chart.degree_bound()));
  const int n = state.truncation;
  WeylElement a = WeylElement::from_base(f);
  // m accumulates nabla a + (i/hbar)[r, a]; slice d is final once a holds
  // every slice <= d.
  WeylElement m = nabla(state.connection, chart, a) +
                  i_over_hbar_commutator(*state.context, state.r, a, n - 1);
  for (int d = 0; d <= n - 1; ++d) {
    WeylElement slice = delta_inv(m.fedosov_slice(d));
    if (slice.is_zero()) continue;
    a = a + slice;
    if (d < n - 1)
      m = m + (nabla(state.connection, chart, slice) +
               i_over_hbar_commutator(*state.context, state.r, slice, n - 1))
                  .truncated_fedosov(n - 1);
  }
  return a.with_truncation(n);
}

// Star-product coefficients c_0..c_K of f and g, plus the lowest certified
// base degree across them.
struct StarCoefficients {
  std::vector<Polynomial> c;
  int precision = kPrecExact;
};

// Star product attached to a flat structure, with memoized section lifts and
// coefficient batches.
//
// Two admission rules apply.  coefficients() uses the filtration-exact rule
// N >= 2K: the hbar^k component of the symbol, k <= K, only receives
// contributions from section slices of weight <= 2K, and those slices never
// depend on higher ones.  star() additionally enforces the conservative
// degree-counting rule N >= 2K + deg f + deg g and reports the required
// truncation when it fails.
class StarProduct {
public:
  explicit StarProduct(std::shared_ptr<const FedosovState> state) : state_(std::move(state)) {
    if (!state_) throw Error::precondition("null flat structure");
  }

  const FedosovState& state() const { return *state_; }

  const WeylElement& quantized(const Polynomial& f) {
    std::string key = f.str();
    auto it = qcache_.find(key);
    if (it == qcache_.end()) it = qcache_.emplace(std::move(key), quantize(*state_, f)).first;
    return it->second;
  }

  StarCoefficients coefficients(const Polynomial& f, const Polynomial& g, int max_order) {
    if (max_order < 0) throw Error::precondition("star order must be >= 0");
    if (state_->truncation < 2 * max_order)
      throw Error::truncation("truncation order " + std::to_string(state_->truncation) +
                              " cannot certify star coefficients up to hbar^" +
                              std::to_string(max_order) + "; need at least " +
                              std::to_string(2 * max_order));
    auto key = std::make_tuple(f.str(), g.str(), max_order);
    auto it = ccache_.find(key);
    if (it != ccache_.end()) return it->second;

    const WeylElement& qf = quantized(f);
    const WeylElement& qg = quantized(g);
    StarCoefficients out;
    int prec = kPrecExact;
    HbarSeries sym = moyal_symbol(*state_->context, qf, qg, max_order, &prec);
    out.precision = prec;
    out.c.reserve(max_order + 1);
    for (int k = 0; k <= max_order; ++k) out.c.push_back(sym.coeff(k));
    return ccache_.emplace(std::move(key), std::move(out)).first->second;
  }

  std::vector<Polynomial> star(const Polynomial& f, const Polynomial& g, int max_order) {
    if (max_order < 0) throw Error::precondition("star order must be >= 0");
    int needed = 2 * max_order + std::max(f.degree(), 0) + std::max(g.degree(), 0);
    if (state_->truncation < needed)
      throw Error::truncation("truncation order " + std::to_string(state_->truncation) +
                              " is insufficient for star order " + std::to_string(max_order) +
                              " at these degrees; need at least " + std::to_string(needed));
    return coefficients(f, g, max_order).c;
  }

private:
  std::shared_ptr<const FedosovState> state_;
  std::map<std::string, WeylElement> qcache_;
  std::map<std::tuple<std::string, std::string, int>, StarCoefficients> ccache_;
};

// First-order commutator check: c_1(f,g) - c_1(g,f) must equal -i {f, g}.
struct CommutatorReport {
  bool pass = false;
  Polynomial residual;
  int precision = kPrecExact;
  std::string detail;
};

inline CommutatorReport star_commutator_check(StarProduct& sp, const Polynomial& f,
                                              const Polynomial& g) {
  StarCoefficients fg = sp.coefficients(f, g, 1);
  StarCoefficients gf = sp.coefficients(g, f, 1);
  Polynomial bracket = sp.state().chart->poisson_bracket(f, g);
  CommutatorReport rep;
  rep.residual = fg.c[1] - gf.c[1] + bracket.scaled(Scalar::i());
  rep.precision = std::min({fg.precision, gf.precision, rep.residual.precision()});
  rep.pass = rep.residual.is_zero();
  if (!rep.pass) rep.detail = "commutator residual " + rep.residual.str();
  return rep;
}

}  // namespace starjet
