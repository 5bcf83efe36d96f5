#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "starjet/linalg.hpp"
#include "starjet/rng.hpp"
#include "starjet/whitney.hpp"

namespace starjet {

// ---------------------------------------------------------------------------
// Seeded battery helpers
// ---------------------------------------------------------------------------

// Deterministic pseudo-random polynomial: every monomial of total degree
// <= max_degree gets a small integer coefficient (about half of them zero).
inline Polynomial random_polynomial(Rng& rng, const VarTablePtr& vars, int max_degree) {
  int n = static_cast<int>(vars->size());
  Polynomial out = Polynomial::zero(vars);
  std::vector<int> exps(n, 0);
  auto rec = [&](auto&& self, int var, int remaining) -> void {
    if (var == n) {
      long c = rng.range(-3, 3);
      if (c != 0) out = out + Polynomial::monomial(vars, exps, Scalar(c));
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      exps[var] = e;
      self(self, var + 1, remaining - e);
    }
    exps[var] = 0;
  };
  rec(rec, 0, max_degree);
  return out;
}

// ---------------------------------------------------------------------------
// Polynomial maps between charts
// ---------------------------------------------------------------------------

// Map source -> target given by one source-variable polynomial per target
// coordinate; pulls target functions back to the source chart.
struct PolyMap {
  std::shared_ptr<const PoissonChart> source;
  std::shared_ptr<const PoissonChart> target;
  std::vector<Polynomial> components;
};

inline PolyMap make_poly_map(std::shared_ptr<const PoissonChart> source,
                             std::shared_ptr<const PoissonChart> target,
                             std::vector<Polynomial> components, bool require_foliated = true) {
  if (!source || !target) throw Error::precondition("null chart");
  if (static_cast<int>(components.size()) != target->dim())
    throw Error::precondition("map needs one component per target coordinate");
  for (const auto& c : components)
    if (!same_table(c.vars(), source->vars()))
      throw Error::context("map components must use the source chart's variables");
  if (require_foliated) {
    for (int a = target->leaf_dim(); a < target->dim(); ++a)
      for (int b = 0; b < source->leaf_dim(); ++b)
        if (!components[a].diff(b).is_zero())
          throw Error::precondition(
              "transverse target coordinate " + target->vars()->names[a] +
              " depends on leaf source variable " + source->vars()->names[b]);
  }
  return PolyMap{std::move(source), std::move(target), std::move(components)};
}

inline Polynomial pullback(const PolyMap& map, const Polynomial& f) {
  if (!same_table(f.vars(), map.target->vars()))
    throw Error::context("pullback argument must use the target chart's variables");
  return f.compose(map.components);
}

// J[a][b] = d(component_a)/d(source leaf var b), leaf block only.
inline PolyMat leafwise_jacobian(const PolyMap& map) {
  int rt = map.target->leaf_dim();
  int rs = map.source->leaf_dim();
  PolyMat j(rt, std::vector<Polynomial>(rs, Polynomial::zero(map.source->vars())));
  for (int a = 0; a < rt; ++a)
    for (int b = 0; b < rs; ++b) j[a][b] = map.components[a].diff(b);
  return j;
}

// Residuals of J^T (omega_target o map) J - omega_source; all zero iff the
// map is a leafwise symplectomorphism modulo the degree bound.
inline PolyMat symplectic_residuals(const PolyMap& map) {
  int rt = map.target->leaf_dim();
  int rs = map.source->leaf_dim();
  if (rt != rs)
    throw Error::precondition("leafwise symplectic comparison needs equal leaf dimensions");
  PolyMat j = leafwise_jacobian(map);
  const PolyMat& wt = map.target->omega();
  const PolyMat& ws = map.source->omega();
  PolyMat out(rs, std::vector<Polynomial>(rs, Polynomial::zero(map.source->vars())));
  for (int a = 0; a < rs; ++a)
    for (int b = 0; b < rs; ++b) {
      Polynomial s = -ws[a][b];
      for (int c = 0; c < rt; ++c)
        for (int d = 0; d < rt; ++d) {
          if (wt[c][d].is_zero() && wt[c][d].exact()) continue;
          s = s + j[c][a] * j[d][b] * pullback(map, wt[c][d]);
        }
      out[a][b] = s;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct CheckEntry {
  std::string label;
  bool pass = true;
  std::string residual;  // canonical string of the nonzero witness
};

struct CheckReport {
  bool pass = true;
  std::vector<CheckEntry> entries;
  int precision = kPrecExact;
  std::string detail;

  void add(std::string label, const Polynomial& residual) {
    CheckEntry e;
    e.label = std::move(label);
    e.pass = residual.is_zero();
    if (!e.pass) e.residual = residual.str();
    precision = std::min(precision, residual.precision());
    pass = pass && e.pass;
    entries.push_back(std::move(e));
  }
  void add_ok(std::string label) { entries.push_back({std::move(label), true, ""}); }
  void add_fail(std::string label, std::string witness) {
    pass = false;
    entries.push_back({std::move(label), false, std::move(witness)});
  }
};

namespace detail {

inline Polynomial reduce_mod(const Polynomial& p, const IdealSpec& ideal, int bound) {
  if (ideal.trivial()) return p;
  return normal_form(p, ideal, std::max(bound, p.degree()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pullback functoriality
// ---------------------------------------------------------------------------

// Checks pullback(F (star_target) G) = pullback(F) (star_source) pullback(G)
// coefficient-wise to hbar^max_order on a battery of target-side pairs,
// modulo the source subset ideal.  Precondition: the map is a leafwise
// symplectomorphism (witness reported otherwise).
inline CheckReport pullback_morphism_check(
    const PolyMap& map, StarProduct& sp_source, StarProduct& sp_target,
    const IdealSpec& source_ideal, int max_order,
    const std::vector<std::pair<Polynomial, Polynomial>>& battery) {
  if (sp_source.state().chart.get() != map.source.get() ||
      sp_target.state().chart.get() != map.target.get())
    throw Error::context("star products do not match the map's charts");
  PolyMat sym = symplectic_residuals(map);
  for (std::size_t a = 0; a < sym.size(); ++a)
    for (std::size_t b = 0; b < sym.size(); ++b)
      if (!sym[a][b].is_zero())
        throw Error::precondition("map is not leafwise symplectic: residual at (" +
                                  std::to_string(a + 1) + "," + std::to_string(b + 1) + ") is " +
                                  sym[a][b].str());

  CheckReport rep;
  int bound = map.source->degree_bound();
  for (std::size_t p = 0; p < battery.size(); ++p) {
    const auto& [f, g] = battery[p];
    StarCoefficients up = sp_target.coefficients(f, g, max_order);
    StarCoefficients down =
        sp_source.coefficients(pullback(map, f), pullback(map, g), max_order);
    rep.precision = std::min({rep.precision, up.precision, down.precision});
    for (int k = 0; k <= max_order; ++k) {
      Polynomial res = pullback(map, up.c[k]) - down.c[k];
      rep.add("pair " + std::to_string(p + 1) + " hbar^" + std::to_string(k),
              detail::reduce_mod(res, source_ideal, bound));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Group actions
// ---------------------------------------------------------------------------

// Either a finite list of invertible linear chart maps (closed under
// composition) or one linear vector field generating a one-parameter action.
// `invariant_generators` optionally declares polynomials whose algebra is
// pointwise invariant, used to build invariant test batteries for the
// infinitesimal case.
struct GroupAction {
  std::vector<Matrix> elements;
  std::optional<Matrix> generator;
  std::vector<Polynomial> invariant_generators;
};

namespace detail {

inline std::vector<Polynomial> linear_images(const VarTablePtr& vars, const Matrix& a) {
  int n = static_cast<int>(vars->size());
  if (a.rows() != n || a.cols() != n)
    throw Error::precondition("action matrix shape does not match the chart dimension");
  std::vector<Polynomial> images;
  images.reserve(n);
  for (int i = 0; i < n; ++i) {
    Polynomial p = Polynomial::zero(vars);
    for (int j = 0; j < n; ++j) {
      if (a.at(i, j).is_zero()) continue;
      p = p + Polynomial::variable(vars, j).scaled(a.at(i, j));
    }
    images.push_back(std::move(p));
  }
  return images;
}

inline Polynomial compose_linear(const Polynomial& f, const std::vector<Polynomial>& images) {
  return f.compose(images);
}

// X(f) = sum_a (sum_b V[a][b] x_b) d_a f for the linear field given by V.
inline Polynomial derive_linear(const Polynomial& f, const Matrix& v) {
  const VarTablePtr& vars = f.vars();
  int n = static_cast<int>(vars->size());
  if (v.rows() != n || v.cols() != n)
    throw Error::precondition("generator matrix shape does not match the chart dimension");
  Polynomial out = Polynomial::zero(vars, f.precision() == kPrecExact ? kPrecExact
                                                                      : f.precision() - 1);
  for (int a = 0; a < n; ++a) {
    Polynomial da = f.diff(a);
    if (da.is_zero() && da.exact()) continue;
    for (int b = 0; b < n; ++b) {
      if (v.at(a, b).is_zero()) continue;
      out = out + (da * Polynomial::variable(vars, b)).scaled(v.at(a, b));
    }
  }
  return out;
}

}  // namespace detail

// Validates the action hypotheses: foliated block structure, closure of the
// finite element set, invertibility, preservation of the bivector, the
// two-form, the connection, the subset ideal, and the declared invariants.
inline CheckReport validate_group_action(const GroupAction& action, const PoissonChart& chart,
                                         const LeafConnection* conn, const WhitneySubset* subset) {
  CheckReport rep;
  const VarTablePtr& vars = chart.vars();
  int n = chart.dim();
  int r = chart.leaf_dim();
  if (action.elements.empty() && !action.generator)
    throw Error::precondition("action has neither finite elements nor a generator");

  for (const auto& g : action.invariant_generators)
    if (!same_table(g.vars(), vars))
      throw Error::context("invariant generator uses a foreign variable table");

  auto check_structure = [&](const std::string& who, const Matrix& a, bool infinitesimal) {
    // foliated: transverse rows have no leaf columns
    for (int i = r; i < n; ++i)
      for (int j = 0; j < r; ++j)
        if (!a.at(i, j).is_zero())
          rep.add_fail(who + " foliated block structure",
                       "transverse row " + std::to_string(i + 1) + " has leaf entry at column " +
                           std::to_string(j + 1));
    std::vector<Polynomial> images;
    if (!infinitesimal) images = detail::linear_images(vars, a);

    // bivector: Pi^{ij} transforms back to itself
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Polynomial res = Polynomial::zero(vars);
        if (!infinitesimal) {
          for (int u = 0; u < r; ++u)
            for (int v = 0; v < r; ++v) {
              if (chart.pi()[u][v].is_zero() && chart.pi()[u][v].exact()) continue;
              if (a.at(i, u).is_zero() || a.at(j, v).is_zero()) continue;
              res = res + chart.pi()[u][v].scaled(a.at(i, u) * a.at(j, v));
            }
          if (i < r && j < r)
            res = res - detail::compose_linear(chart.pi()[i][j], images);
        } else if (i < r && j < r) {
          res = detail::derive_linear(chart.pi()[i][j], a);
          for (int u = 0; u < r; ++u)
            res = res - chart.pi()[u][j].scaled(a.at(i, u)) - chart.pi()[i][u].scaled(a.at(j, u));
        }
        if (!res.is_zero())
          rep.add(who + " preserves bivector (" + std::to_string(i + 1) + "," +
                      std::to_string(j + 1) + ")",
                  res);
      }

    // two-form on the leaf block
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        Polynomial res;
        if (!infinitesimal) {
          res = -chart.omega()[i][j];
          for (int u = 0; u < r; ++u)
            for (int v = 0; v < r; ++v) {
              if (chart.omega()[u][v].is_zero() && chart.omega()[u][v].exact()) continue;
              if (a.at(u, i).is_zero() || a.at(v, j).is_zero()) continue;
              res = res + detail::compose_linear(chart.omega()[u][v], images)
                              .scaled(a.at(u, i) * a.at(v, j));
            }
        } else {
          res = detail::derive_linear(chart.omega()[i][j], a);
          for (int u = 0; u < r; ++u)
            res = res + chart.omega()[u][j].scaled(a.at(u, i)) +
                  chart.omega()[i][u].scaled(a.at(u, j));
        }
        if (!res.is_zero())
          rep.add(who + " preserves two-form (" + std::to_string(i + 1) + "," +
                      std::to_string(j + 1) + ")",
                  res);
      }

    // connection
    if (conn) {
      const Christoffels& gamma = conn->christoffels;
      if (!infinitesimal) {
        // Gamma'^m_{bc}(x) = (A^{-1})^m_i Gamma^i_{jk}(Ax) A^j_b A^k_c must
        // equal Gamma^m_{bc}(x)
        Matrix ainv = inverse(a);
        for (int m = 0; m < r; ++m)
          for (int b = 0; b < r; ++b)
            for (int c = 0; c < r; ++c) {
              Polynomial res = -gamma[m][b][c];
              for (int i = 0; i < r; ++i) {
                if (ainv.at(m, i).is_zero()) continue;
                for (int jj = 0; jj < r; ++jj)
                  for (int kk = 0; kk < r; ++kk) {
                    if (gamma[i][jj][kk].is_zero() && gamma[i][jj][kk].exact()) continue;
                    if (a.at(jj, b).is_zero() || a.at(kk, c).is_zero()) continue;
                    res = res + detail::compose_linear(gamma[i][jj][kk], images)
                                    .scaled(ainv.at(m, i) * a.at(jj, b) * a.at(kk, c));
                  }
              }
              if (!res.is_zero())
                rep.add(who + " preserves connection (" + std::to_string(m + 1) + "," +
                            std::to_string(b + 1) + "," + std::to_string(c + 1) + ")",
                        res);
            }
      } else {
        // (L_X Gamma)^m_{bc} = X(Gamma^m_{bc}) - V_{ma} Gamma^a_{bc}
        //                    + V_{ab} Gamma^m_{ac} + V_{ac} Gamma^m_{ba}
        for (int m = 0; m < r; ++m)
          for (int b = 0; b < r; ++b)
            for (int c = 0; c < r; ++c) {
              Polynomial res = detail::derive_linear(gamma[m][b][c], a);
              for (int u = 0; u < r; ++u)
                res = res - gamma[u][b][c].scaled(a.at(m, u)) +
                      gamma[m][u][c].scaled(a.at(u, b)) + gamma[m][b][u].scaled(a.at(u, c));
              if (!res.is_zero())
                rep.add(who + " preserves connection (" + std::to_string(m + 1) + "," +
                            std::to_string(b + 1) + "," + std::to_string(c + 1) + ")",
                        res);
            }
      }
    }

    // subset ideal
    if (subset) {
      int bound = chart.degree_bound();
      IdealSpec base(subset->generators, 1);
      for (std::size_t gi = 0; gi < subset->generators.size(); ++gi) {
        Polynomial moved = infinitesimal
                               ? detail::derive_linear(subset->generators[gi], a)
                               : detail::compose_linear(subset->generators[gi], images);
        rep.add(who + " preserves ideal generator " + std::to_string(gi + 1),
                detail::reduce_mod(moved, base, bound));
      }
    }

    // declared invariants
    for (std::size_t gi = 0; gi < action.invariant_generators.size(); ++gi) {
      const Polynomial& inv_g = action.invariant_generators[gi];
      Polynomial res = infinitesimal ? detail::derive_linear(inv_g, a)
                                     : detail::compose_linear(inv_g, images) - inv_g;
      if (!res.is_zero())
        rep.add(who + " fixes declared invariant " + std::to_string(gi + 1), res);
    }
  };

  for (std::size_t e = 0; e < action.elements.size(); ++e) {
    const Matrix& a = action.elements[e];
    std::string who = "element " + std::to_string(e + 1);
    if (rank(a) != n) {
      rep.add_fail(who + " invertible", "matrix is singular");
      continue;
    }
    check_structure(who, a, false);
  }
  // closure of the finite set
  for (std::size_t e1 = 0; e1 < action.elements.size(); ++e1)
    for (std::size_t e2 = 0; e2 < action.elements.size(); ++e2) {
      Matrix prod = action.elements[e1] * action.elements[e2];
      bool found = false;
      for (const auto& m : action.elements)
        if (m == prod) {
          found = true;
          break;
        }
      if (!found)
        rep.add_fail("closure under composition", "product of elements " + std::to_string(e1 + 1) +
                                                      " and " + std::to_string(e2 + 1) +
                                                      " is outside the declared set");
    }
  if (action.generator) check_structure("generator", *action.generator, true);
  return rep;
}

// Builds `count` invariant polynomials: by group averaging for a finite
// action, by seeding the declared invariant generators for an infinitesimal
// one.
inline std::vector<Polynomial> invariant_battery(const GroupAction& action,
                                                 const PoissonChart& chart, int count,
                                                 int max_degree, Rng& rng) {
  const VarTablePtr& vars = chart.vars();
  std::vector<Polynomial> out;
  if (!action.elements.empty()) {
    std::vector<std::vector<Polynomial>> images;
    images.reserve(action.elements.size());
    for (const auto& m : action.elements) images.push_back(detail::linear_images(vars, m));
    Scalar avg(make_rational(1, static_cast<long>(action.elements.size())));
    while (static_cast<int>(out.size()) < count) {
      Polynomial f = random_polynomial(rng, vars, max_degree);
      Polynomial sum = Polynomial::zero(vars);
      for (const auto& im : images) sum = sum + detail::compose_linear(f, im);
      Polynomial r = sum.scaled(avg);
      if (!r.is_zero()) out.push_back(std::move(r));
    }
    return out;
  }
  if (action.invariant_generators.empty())
    throw Error::precondition(
        "infinitesimal battery needs declared invariant generators");
  // random polynomial in the invariant generators (composition)
  std::vector<std::string> names;
  std::vector<VarKind> kinds;
  for (std::size_t i = 0; i < action.invariant_generators.size(); ++i) {
    names.push_back("w" + std::to_string(i + 1));
    kinds.push_back(VarKind::Leaf);
  }
  VarTablePtr inv_vars = make_vars(names, kinds);
  while (static_cast<int>(out.size()) < count) {
    Polynomial f = random_polynomial(rng, inv_vars, std::max(1, max_degree / 2));
    Polynomial r = f.compose(action.invariant_generators);
    if (!r.is_zero() && r.degree() <= chart.degree_bound()) out.push_back(std::move(r));
  }
  return out;
}

// Star-product invariance under the validated action on seeded pairs of
// invariant polynomials: for finite elements g, compares g.(F star G) with
// (g.F) star (g.G); for the infinitesimal generator X, checks the derivation
// property X(c_k(F,G)) = c_k(XF,G) + c_k(F,XG).  Residuals are reduced
// modulo the subset ideal when a subset is given.
inline CheckReport invariance_check(const GroupAction& action, StarProduct& sp,
                                    const WhitneySubset* subset, int max_order,
                                    int num_pairs = 10, std::uint64_t seed = 0) {
  const PoissonChart& chart = *sp.state().chart;
  CheckReport validation =
      validate_group_action(action, chart, &sp.state().connection, subset);
  if (!validation.pass) {
    std::string broken;
    for (const auto& e : validation.entries)
      if (!e.pass) {
        broken = e.label + (e.residual.empty() ? "" : (": " + e.residual));
        break;
      }
    throw Error::precondition("action does not satisfy the invariance hypotheses: " + broken);
  }

  Rng rng(seed);
  int max_degree = std::min(3, chart.degree_bound());
  std::vector<Polynomial> battery =
      invariant_battery(action, chart, 2 * num_pairs, max_degree, rng);
  IdealSpec trivial_ideal;
  const IdealSpec& ideal = subset ? subset->ideal : trivial_ideal;
  int bound = chart.degree_bound();

  CheckReport rep;
  for (int p = 0; p < num_pairs; ++p) {
    const Polynomial& f = battery[2 * p];
    const Polynomial& g = battery[2 * p + 1];
    StarCoefficients c = sp.coefficients(f, g, max_order);
    rep.precision = std::min(rep.precision, c.precision);
    for (std::size_t e = 0; e < action.elements.size(); ++e) {
      std::vector<Polynomial> images = detail::linear_images(chart.vars(), action.elements[e]);
      StarCoefficients moved = sp.coefficients(detail::compose_linear(f, images),
                                               detail::compose_linear(g, images), max_order);
      rep.precision = std::min(rep.precision, moved.precision);
      for (int k = 0; k <= max_order; ++k) {
        Polynomial res = detail::compose_linear(c.c[k], images) - moved.c[k];
        rep.add("pair " + std::to_string(p + 1) + " element " + std::to_string(e + 1) + " hbar^" +
                    std::to_string(k),
                detail::reduce_mod(res, ideal, bound));
      }
    }
    if (action.generator) {
      const Matrix& v = *action.generator;
      StarCoefficients cxf = sp.coefficients(detail::derive_linear(f, v), g, max_order);
      StarCoefficients cxg = sp.coefficients(f, detail::derive_linear(g, v), max_order);
      rep.precision = std::min({rep.precision, cxf.precision, cxg.precision});
      for (int k = 0; k <= max_order; ++k) {
        Polynomial res = detail::derive_linear(c.c[k], v) - cxf.c[k] - cxg.c[k];
        rep.add("pair " + std::to_string(p + 1) + " generator hbar^" + std::to_string(k),
                detail::reduce_mod(res, ideal, bound));
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Reduction
// ---------------------------------------------------------------------------

// Upstairs chart M with subset X, downstairs chart N with subset Y, and the
// projection M -> N whose components generate the invariant ring.  The
// optional generator matrix declares the infinitesimal action used for the
// invariance pre-check of upstairs star results.
struct ReductionSetup {
  std::shared_ptr<const PoissonChart> chart_m;
  std::shared_ptr<const PoissonChart> chart_n;
  WhitneySubset subset_x;  // upstairs
  WhitneySubset subset_y;  // downstairs
  PolyMap projection;      // source M, target N
  std::optional<Matrix> generator;
};

// Validates the structural hypotheses: the projection is a Poisson map and
// pulls the downstairs ideal into the upstairs ideal power-for-power.
inline CheckReport validate_reduction(const ReductionSetup& setup) {
  CheckReport rep;
  const PoissonChart& m = *setup.chart_m;
  const PoissonChart& n = *setup.chart_n;
  const PolyMap& proj = setup.projection;
  if (proj.source.get() != &m || proj.target.get() != &n)
    throw Error::context("projection charts do not match the reduction setup");

  // Poisson map: {pi_a, pi_b}_M = pullback of {u_a, u_b}_N
  for (int a = 0; a < n.dim(); ++a)
    for (int b = a + 1; b < n.dim(); ++b) {
      Polynomial lhs = m.poisson_bracket(proj.components[a], proj.components[b]);
      Polynomial rhs = (a < n.leaf_dim() && b < n.leaf_dim())
                           ? pullback(proj, n.pi()[a][b])
                           : Polynomial::zero(m.vars());
      rep.add("Poisson map at coordinates (" + n.vars()->names[a] + "," + n.vars()->names[b] + ")",
              lhs - rhs);
    }

  // ideal mapping: pullbacks of downstairs ideal generators stay in the
  // upstairs ideal at matching power
  int power = std::min(setup.subset_x.order, setup.subset_y.order) + 1;
  IdealSpec up(setup.subset_x.generators, power);
  std::vector<Polynomial> down_gens = IdealSpec(setup.subset_y.generators, power).expanded_generators();
  for (std::size_t i = 0; i < down_gens.size(); ++i) {
    Polynomial moved = pullback(proj, down_gens[i]);
    rep.add("ideal generator " + std::to_string(i + 1) + " maps into the upstairs ideal",
            detail::reduce_mod(moved, up, m.degree_bound()));
  }
  return rep;
}

// Checks the quotient identification on samples: (i) pullback is an algebra
// morphism modulo the upstairs ideal, (ii) downstairs ideal elements pull
// back into the upstairs ideal, (iii) pullback is injective on nonzero
// downstairs jets.
inline CheckReport projection_check(const ReductionSetup& setup, int num_samples = 10,
                                    std::uint64_t seed = 0) {
  CheckReport rep = validate_reduction(setup);
  const PoissonChart& m = *setup.chart_m;
  const PoissonChart& n = *setup.chart_n;
  const PolyMap& proj = setup.projection;
  Rng rng(seed);
  int down_deg = std::min(3, n.degree_bound());
  for (int s = 0; s < num_samples; ++s) {
    Polynomial f = random_polynomial(rng, n.vars(), down_deg);
    Polynomial g = random_polynomial(rng, n.vars(), down_deg);
    Polynomial res = pullback(proj, f * g) - pullback(proj, f) * pullback(proj, g);
    rep.add("sample " + std::to_string(s + 1) + " morphism",
            detail::reduce_mod(res, setup.subset_x.ideal, m.degree_bound()));

    // ideal element downstairs: random combination over the expanded generators
    Polynomial j = Polynomial::zero(n.vars());
    for (const auto& gen : setup.subset_y.ideal.expanded_generators())
      j = j + gen * random_polynomial(rng, n.vars(), 1);
    if (pullback(proj, j).degree() <= m.degree_bound()) {
      rep.add("sample " + std::to_string(s + 1) + " ideal transport",
              detail::reduce_mod(pullback(proj, j), setup.subset_x.ideal, m.degree_bound()));
    }

    Polynomial fn = normal_form(f, setup.subset_y.ideal, n.degree_bound());
    if (!fn.is_zero()) {
      Polynomial up = detail::reduce_mod(pullback(proj, fn), setup.subset_x.ideal, m.degree_bound());
      if (up.is_zero())
        rep.add_fail("sample " + std::to_string(s + 1) + " injectivity",
                     "nonzero jet " + fn.str() + " pulls back to 0");
      else
        rep.add_ok("sample " + std::to_string(s + 1) + " injectivity");
    }
  }
  return rep;
}

// Compares quantization downstairs with quantization upstairs through the
// projection: residuals of pullback(c_k_N(F,G)) - c_k_M(pullback F,
// pullback G) modulo the upstairs ideal, for downstairs pairs (F,G).  When
// the setup declares an infinitesimal generator, upstairs results are
// pre-checked to be invariant.
inline CheckReport reduction_compare(const ReductionSetup& setup, StarProduct& sp_m,
                                     StarProduct& sp_n, int max_order,
                                     const std::vector<std::pair<Polynomial, Polynomial>>& battery) {
  CheckReport rep = validate_reduction(setup);
  if (!rep.pass) return rep;
  const PoissonChart& m = *setup.chart_m;
  if (sp_m.state().chart.get() != setup.chart_m.get() ||
      sp_n.state().chart.get() != setup.chart_n.get())
    throw Error::context("star products do not match the reduction charts");

  for (std::size_t p = 0; p < battery.size(); ++p) {
    const auto& [f, g] = battery[p];
    StarCoefficients down = sp_n.coefficients(f, g, max_order);
    StarCoefficients up =
        sp_m.coefficients(pullback(setup.projection, f), pullback(setup.projection, g), max_order);
    rep.precision = std::min({rep.precision, down.precision, up.precision});
    for (int k = 0; k <= max_order; ++k) {
      if (setup.generator) {
        Polynomial inv = detail::derive_linear(up.c[k], *setup.generator);
        rep.add("pair " + std::to_string(p + 1) + " upstairs invariance hbar^" + std::to_string(k),
                detail::reduce_mod(inv, setup.subset_x.ideal, m.degree_bound()));
      }
      Polynomial res = pullback(setup.projection, down.c[k]) - up.c[k];
      rep.add("pair " + std::to_string(p + 1) + " hbar^" + std::to_string(k),
              detail::reduce_mod(res, setup.subset_x.ideal, m.degree_bound()));
    }
  }
  return rep;
}

}  // namespace starjet
