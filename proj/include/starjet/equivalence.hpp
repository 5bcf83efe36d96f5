#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "starjet/equivariance.hpp"
#include "starjet/fedosov.hpp"

namespace starjet {

// ---------------------------------------------------------------------------
// Differential operators with polynomial coefficients
// ---------------------------------------------------------------------------

struct DiffOpTerm {
  Polynomial coeff;
  std::vector<int> orders;  // derivative multi-index, one entry per chart variable
};

struct DiffOp {
  VarTablePtr vars;
  std::vector<DiffOpTerm> terms;

  bool is_zero() const { return terms.empty(); }

  Polynomial apply(const Polynomial& f) const {
    if (!same_table(f.vars(), vars))
      throw Error::context("operator applied to a polynomial over foreign variables");
    Polynomial out = Polynomial::zero(vars, f.precision());
    for (const auto& t : terms) {
      Polynomial d = f;
      for (std::size_t v = 0; v < t.orders.size() && !d.is_zero(); ++v)
        for (int rep = 0; rep < t.orders[v]; ++rep) d = d.diff(static_cast<int>(v));
      if (!d.is_zero() || !d.exact()) out = out + t.coeff * d;
    }
    return out;
  }

  std::string str() const {
    if (terms.empty()) return "0";
    std::string s;
    for (const auto& t : terms) {
      if (!s.empty()) s += " + ";
      s += "(" + t.coeff.str() + ")";
      for (std::size_t v = 0; v < t.orders.size(); ++v) {
        if (t.orders[v] == 0) continue;
        s += " d_" + vars->names[v];
        if (t.orders[v] > 1) s += "^" + std::to_string(t.orders[v]);
      }
    }
    return s;
  }
};

// ---------------------------------------------------------------------------
// Star-coefficient oracles
// ---------------------------------------------------------------------------

// Anything that can produce the hbar^k coefficient of an associative product.
class StarOracle {
public:
  virtual ~StarOracle() = default;
  virtual Polynomial coefficient(int k, const Polynomial& f, const Polynomial& g) = 0;
  virtual const VarTablePtr& vars() const = 0;
};

class FedosovOracle final : public StarOracle {
public:
  explicit FedosovOracle(StarProduct& sp) : sp_(sp) {}
  Polynomial coefficient(int k, const Polynomial& f, const Polynomial& g) override {
    return sp_.coefficients(f, g, k).c[k];
  }
  const VarTablePtr& vars() const override { return sp_.state().chart->vars(); }

private:
  StarProduct& sp_;
};

// The product conjugated by T = 1 + hbar*delta:
//   c'_k(f,g) = sum over l+w+i+j = k with i,j <= 1 of
//               (-1)^l delta^l [ c_w(delta^i f, delta^j g) ].
// Used to manufacture a gauge-equivalent product with a known equivalence.
class ConjugatedOracle final : public StarOracle {
public:
  ConjugatedOracle(StarOracle& base, DiffOp delta) : base_(base), delta_(std::move(delta)) {
    if (!same_table(delta_.vars, base_.vars()))
      throw Error::context("conjugating operator uses foreign variables");
  }

  Polynomial coefficient(int k, const Polynomial& f, const Polynomial& g) override {
    Polynomial out = Polynomial::zero(vars());
    for (int i = 0; i <= 1; ++i)
      for (int j = 0; j <= 1; ++j) {
        Polynomial fi = (i == 0) ? f : delta_.apply(f);
        Polynomial gj = (j == 0) ? g : delta_.apply(g);
        for (int w = 0; w + i + j <= k; ++w) {
          int l = k - w - i - j;
          Polynomial term = base_.coefficient(w, fi, gj);
          for (int rep = 0; rep < l; ++rep) term = delta_.apply(term);
          if (l % 2 == 1) term = -term;
          out = out + term;
        }
      }
    return out;
  }
  const VarTablePtr& vars() const override { return base_.vars(); }

private:
  StarOracle& base_;
  DiffOp delta_;
};

// ---------------------------------------------------------------------------
// Order-by-order equivalence solver
// ---------------------------------------------------------------------------

struct EquivalenceOptions {
  int jet_order = 4;       // solve the values of D_k on monomials up to this degree
  int coeff_degree = -1;   // extracted coefficient degree bound (-1: jet_order)
  int derivative_cap = -1; // extracted derivative order bound per order k (-1: 2k)
  int held_out_pairs = 2;  // random pairs for the final validation
  std::uint64_t seed = 0;
};

struct EquivalenceResult {
  bool success = true;
  std::vector<DiffOp> operators;  // D_1..D_K on success (partial on failure)
  int failed_order = 0;           // first obstructed order, 0 if none
  std::string witness;            // monomial pair and residual for an obstruction
  std::string detail;
  int precision = kPrecExact;
  bool held_out_pass = true;
};

namespace detail {

// All exponent vectors of total degree <= bound, ascending in the monomial
// order used by the coefficient ring.
inline std::vector<std::uint64_t> monomial_keys(int nvars, int bound) {
  std::vector<std::uint64_t> keys;
  std::vector<int> exps(nvars, 0);
  auto rec = [&](auto&& self, int var, int remaining) -> void {
    if (var == nvars) {
      keys.push_back(mono_pack(exps));
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      exps[var] = e;
      self(self, var + 1, remaining - e);
    }
    exps[var] = 0;
  };
  rec(rec, 0, bound);
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace detail

// Solves G(f (star_B) g) = G(f) (star_A) G(g) for G = 1 + hbar D_1 + ... +
// hbar^K D_K, order by order.  At each order the defect
//   E_k(f,g) = sum_{u<k} D_u(c_B[k-u](f,g))
//            - sum_{u+v+w=k, (u,v) not (k,0) or (0,k)} c_A[w](D_u f, D_v g)
// turns the unknown into the multiplicative cocycle equation
//   D_k(fg) = D_k(f) g + f D_k(g) - E_k(f,g).
// Any two solutions differ by a derivation, so the gauge D_k(x_v) = 0 on the
// chart variables picks a unique normalized representative; values on all
// monomials follow by peeling one variable at a time, with D_k(1) = E_k(1,1)
// forced.  The equation is then re-checked on every monomial pair inside the
// jet bound: a nonzero residual there is an order-k obstruction, not a solver
// failure.  Finally the value table is condensed into a constant-coefficient-
// free differential operator by a triangular solve, and the whole gauge
// transformation is validated on held-out random pairs.
inline EquivalenceResult equivalence_solve(StarOracle& oracle_a, StarOracle& oracle_b,
                                           int max_order, const EquivalenceOptions& opt = {}) {
  if (max_order < 1) throw Error::precondition("equivalence order must be >= 1");
  if (opt.jet_order < 1) throw Error::precondition("equivalence jet order must be >= 1");
  if (!same_table(oracle_a.vars(), oracle_b.vars()))
    throw Error::context("the two products live over different variables");
  const VarTablePtr& vars = oracle_a.vars();
  int nvars = static_cast<int>(vars->size());
  int coeff_bound = opt.coeff_degree >= 0 ? opt.coeff_degree : opt.jet_order;

  std::vector<std::uint64_t> keys = detail::monomial_keys(nvars, opt.jet_order);
  // value tables: dvals[k-1][monomial key] = D_k applied to that monomial
  std::vector<std::map<std::uint64_t, Polynomial>> dvals;

  EquivalenceResult result;

  auto apply_d = [&](int u, const Polynomial& p) -> Polynomial {
    if (u == 0) return p;
    const auto& table = dvals[u - 1];
    Polynomial out = Polynomial::zero(vars, p.precision());
    for (const auto& [key, c] : p.terms()) {
      auto it = table.find(key);
      if (it == table.end())
        throw Error::precondition("equivalence jet order " + std::to_string(opt.jet_order) +
                                  " is too small: needed a value on a degree " +
                                  std::to_string(mono_deg(key)) + " monomial");
      out = out + it->second.scaled(c);
    }
    return out;
  };

  auto defect = [&](int k, const Polynomial& f, const Polynomial& g) -> Polynomial {
    Polynomial e = Polynomial::zero(vars);
    for (int u = 0; u < k; ++u) e = e + apply_d(u, oracle_b.coefficient(k - u, f, g));
    for (int u = 0; u <= k; ++u)
      for (int v = 0; u + v <= k; ++v) {
        int w = k - u - v;
        if ((u == k && v == 0 && w == 0) || (u == 0 && v == k && w == 0)) continue;
        e = e - oracle_a.coefficient(w, apply_d(u, f), apply_d(v, g));
      }
    return e;
  };

  auto residual = [&](int k, const Polynomial& f, const Polynomial& g) -> Polynomial {
    Polynomial lhs = Polynomial::zero(vars);
    for (int u = 0; u <= k; ++u) lhs = lhs + apply_d(u, oracle_b.coefficient(k - u, f, g));
    Polynomial rhs = Polynomial::zero(vars);
    for (int u = 0; u <= k; ++u)
      for (int v = 0; u + v <= k; ++v)
        rhs = rhs + oracle_a.coefficient(k - u - v, apply_d(u, f), apply_d(v, g));
    return lhs - rhs;
  };

  for (int k = 1; k <= max_order; ++k) {
    std::map<std::uint64_t, Polynomial> table;
    for (std::uint64_t key : keys) {
      std::vector<int> exps = mono_unpack(key, nvars);
      if (mono_deg(key) == 0) {
        Polynomial one = Polynomial::constant(vars, Scalar(1));
        table.emplace(key, defect(k, one, one));
        continue;
      }
      int last = 0;
      for (int v = 0; v < nvars; ++v)
        if (exps[v] > 0) last = v;
      std::vector<int> rest = exps;
      rest[last] -= 1;
      std::uint64_t rest_key = mono_pack(rest);
      Polynomial head = Polynomial::monomial(vars, rest, Scalar(1));
      Polynomial xv = Polynomial::variable(vars, last);
      Polynomial value = table.at(rest_key) * xv - defect(k, head, xv);
      table.emplace(key, std::move(value));
    }
    dvals.push_back(std::move(table));

    // obstruction scan: the cocycle equation on every pair inside the bound
    for (std::uint64_t ka : keys) {
      for (std::uint64_t kb : keys) {
        if (mono_deg(ka) + mono_deg(kb) > opt.jet_order) continue;
        Polynomial f = Polynomial::monomial(vars, mono_unpack(ka, nvars), Scalar(1));
        Polynomial g = Polynomial::monomial(vars, mono_unpack(kb, nvars), Scalar(1));
        Polynomial res = residual(k, f, g);
        result.precision = std::min(result.precision, res.precision());
        if (!res.is_zero()) {
          result.success = false;
          result.failed_order = k;
          result.witness = "pair (" + f.str() + ", " + g.str() + ") residual " + res.str();
          result.detail = "no gauge transformation matches the products at hbar^" +
                          std::to_string(k) + ": " + result.witness;
          return result;
        }
      }
    }

    // condense the value table into a differential operator
    int cap = opt.derivative_cap >= 0 ? opt.derivative_cap : 2 * k;
    DiffOp op;
    op.vars = vars;
    std::map<std::uint64_t, Polynomial> coeffs;  // derivative index -> coefficient
    for (std::uint64_t key : keys) {
      std::vector<int> gamma = mono_unpack(key, nvars);
      Polynomial mono = Polynomial::monomial(vars, gamma, Scalar(1));
      Polynomial rem = dvals[k - 1].at(key);
      for (const auto& [bkey, acoeff] : coeffs) {
        Polynomial d = mono;
        std::vector<int> beta = mono_unpack(bkey, nvars);
        for (int v = 0; v < nvars && !d.is_zero(); ++v)
          for (int rep = 0; rep < beta[v]; ++rep) d = d.diff(v);
        if (!d.is_zero()) rem = rem - acoeff * d;
      }
      // d^gamma x^gamma = gamma!
      Scalar fact(1);
      for (int v = 0; v < nvars; ++v)
        for (int rep = 2; rep <= gamma[v]; ++rep) fact = fact * Scalar(rep);
      Polynomial a = rem.scaled(Scalar(1) / fact);
      if (a.is_zero()) continue;
      if (mono_deg(key) > cap) {
        result.success = false;
        result.failed_order = k;
        result.detail = "solved operator at hbar^" + std::to_string(k) +
                        " needs derivative order " + std::to_string(mono_deg(key)) +
                        " beyond the bound " + std::to_string(cap);
        return result;
      }
      if (a.degree() > coeff_bound) {
        result.success = false;
        result.failed_order = k;
        result.detail = "solved operator at hbar^" + std::to_string(k) +
                        " has a coefficient of degree " + std::to_string(a.degree()) +
                        " beyond the bound " + std::to_string(coeff_bound);
        return result;
      }
      coeffs.emplace(key, a);
    }
    for (const auto& [bkey, acoeff] : coeffs)
      op.terms.push_back({acoeff, mono_unpack(bkey, nvars)});
    result.operators.push_back(std::move(op));
  }

  // held-out validation on random non-monomial pairs
  Rng rng(opt.seed);
  for (int p = 0; p < opt.held_out_pairs; ++p) {
    Polynomial f = random_polynomial(rng, vars, std::max(1, opt.jet_order / 2));
    Polynomial g = random_polynomial(rng, vars, opt.jet_order - std::max(1, opt.jet_order / 2));
    for (int k = 1; k <= max_order; ++k) {
      Polynomial res = residual(k, f, g);
      result.precision = std::min(result.precision, res.precision());
      if (!res.is_zero()) {
        result.held_out_pass = false;
        result.success = false;
        result.failed_order = k;
        result.witness = "held-out pair (" + f.str() + ", " + g.str() + ") residual " + res.str();
        result.detail = "held-out validation failed at hbar^" + std::to_string(k);
        return result;
      }
    }
  }
  return result;
}

inline EquivalenceResult equivalence_solve(StarProduct& a, StarProduct& b, int max_order,
                                           const EquivalenceOptions& opt = {}) {
  FedosovOracle oa(a), ob(b);
  return equivalence_solve(oa, ob, max_order, opt);
}

}  // namespace starjet
