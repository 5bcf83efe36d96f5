#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "starjet/fedosov.hpp"
#include "starjet/ideal.hpp"

namespace starjet {

// A closed subset of the chart cut out by polynomial equations, together
// with the flatness order m: functions are considered modulo <gens>^(m+1),
// the finite-order model of being flat to order m along the subset.
struct WhitneySubset {
  std::shared_ptr<const PoissonChart> chart;
  std::vector<Polynomial> generators;
  int order = 0;  // m
  IdealSpec ideal;  // <generators>^(m+1)
};

inline WhitneySubset make_whitney_subset(std::shared_ptr<const PoissonChart> chart,
                                         std::vector<Polynomial> generators, int order) {
  if (!chart) throw Error::precondition("null chart");
  if (order < 0) throw Error::precondition("subset order must be >= 0");
  for (const auto& g : generators) {
    if (!same_table(g.vars(), chart->vars()))
      throw Error::context("subset generator uses a foreign variable table");
    if (g.is_zero()) throw Error::precondition("subset generator is zero");
    if (g.degree() > chart->degree_bound())
      throw Error::precondition("subset generator degree exceeds the chart degree bound");
  }
  WhitneySubset s;
  s.chart = std::move(chart);
  s.ideal = ideal_power(generators, order);
  s.generators = std::move(generators);
  s.order = order;
  return s;
}

// Class of a function in the quotient by the subset ideal; the stored
// representative is the canonical normal form.
struct JetClass {
  Polynomial rep;
};

// hbar-graded class: one canonical representative per hbar order.
struct GradedJetClass {
  std::vector<Polynomial> c;
  int precision = kPrecExact;
};

namespace detail {

inline int jet_degree_bound(const WhitneySubset& s, const Polynomial& p) {
  return std::max(s.chart->degree_bound(), p.degree());
}

}  // namespace detail

inline JetClass jet_map(const WhitneySubset& s, const Polynomial& f) {
  return JetClass{normal_form(f, s.ideal, detail::jet_degree_bound(s, f))};
}

// The Poisson bracket descended to jet classes.
inline JetClass whitney_bracket(const WhitneySubset& s, const JetClass& f, const JetClass& g) {
  Polynomial b = s.chart->poisson_bracket(f.rep, g.rep);
  return JetClass{normal_form(b, s.ideal, detail::jet_degree_bound(s, b))};
}

// Star product descended to jet classes: the coefficients c_0..c_K of the
// representatives, each reduced to normal form modulo the subset ideal.
// Representative dependence beyond the documented order loss (order m drops
// to m - k at hbar^k) is measured by representative_independence below.
inline GradedJetClass whitney_star(const WhitneySubset& s, StarProduct& sp, const JetClass& f,
                                   const JetClass& g, int max_order) {
  if (s.chart.get() != sp.state().chart.get())
    throw Error::context("subset and star product use different charts");
  std::vector<Polynomial> c = sp.star(f.rep, g.rep, max_order);
  GradedJetClass out;
  out.c.reserve(c.size());
  for (auto& ck : c) {
    out.precision = std::min(out.precision, ck.precision());
    out.c.push_back(normal_form(ck, s.ideal, detail::jet_degree_bound(s, ck)));
  }
  return out;
}

// One congruence obligation: a residual that must lie in <gens>^power.
struct OrderLossEntry {
  int weight = 0;      // hbar order (star terms) or filtration weight (section terms)
  int power = 0;       // ideal power the congruence holds modulo; 0 = no content
  bool pass = true;
  std::string residual;  // nonzero normal form, when failing
};

struct RepresentativeReport {
  bool pass = true;
  std::vector<OrderLossEntry> star_terms;
  std::vector<OrderLossEntry> section_terms;
  int precision = kPrecExact;
  std::string detail;
};

// Measures how the star coefficients depend on the representative: for j in
// the subset ideal (pre-checked), compares c_k(f+j, g) with c_k(f, g)
// modulo <gens>^{m+1-k} — each hbar order spends up to k derivatives on j,
// losing one ideal power per order — and checks that the section lift of j
// stays ideal-flat: its coefficient at fiber degree |alpha| and hbar^k must
// lie in <gens>^{m+1-(|alpha|+k)}.
inline RepresentativeReport representative_independence(const WhitneySubset& s, StarProduct& sp,
                                                        const Polynomial& f, const Polynomial& j,
                                                        const Polynomial& g, int max_order) {
  if (s.chart.get() != sp.state().chart.get())
    throw Error::context("subset and star product use different charts");
  Polynomial jn = normal_form(j, s.ideal, detail::jet_degree_bound(s, j));
  if (!jn.is_zero())
    throw Error::precondition("perturbation is not in the subset ideal; normal form " + jn.str());

  RepresentativeReport rep;
  std::map<int, IdealSpec> targets;
  auto target = [&](int power) -> const IdealSpec& {
    auto it = targets.find(power);
    if (it == targets.end()) it = targets.emplace(power, IdealSpec(s.generators, power)).first;
    return it->second;
  };

  StarCoefficients base = sp.coefficients(f, g, max_order);
  StarCoefficients pert = sp.coefficients(f + j, g, max_order);
  rep.precision = std::min(base.precision, pert.precision);
  for (int k = 0; k <= max_order; ++k) {
    OrderLossEntry e;
    e.weight = k;
    e.power = std::max(0, s.order + 1 - k);
    if (e.power > 0) {
      Polynomial d = pert.c[k] - base.c[k];
      Polynomial res = normal_form(d, target(e.power), detail::jet_degree_bound(s, d));
      e.pass = res.is_zero();
      if (!e.pass) e.residual = res.str();
    }
    rep.pass = rep.pass && e.pass;
    rep.star_terms.push_back(std::move(e));
  }

  const WeylElement& qj = sp.quantized(j);
  for (const auto& [key, coeffp] : qj.terms()) {
    if (key.form != 0 || coeffp.is_zero()) continue;
    OrderLossEntry e;
    e.weight = mono_deg(key.fiber) + key.hbar;  // derivative count spent on j
    e.power = std::max(0, s.order + 1 - e.weight);
    if (e.power > 0) {
      Polynomial res = normal_form(coeffp, target(e.power), detail::jet_degree_bound(s, coeffp));
      e.pass = res.is_zero();
      if (!e.pass) e.residual = res.str();
    }
    rep.pass = rep.pass && e.pass;
    rep.section_terms.push_back(std::move(e));
  }
  if (!rep.pass) rep.detail = "representative dependence beyond the expected order loss";
  return rep;
}

}  // namespace starjet
