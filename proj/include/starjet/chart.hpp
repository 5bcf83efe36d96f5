#pragma once

#include <string>
#include <utility>
#include <vector>

#include "starjet/linalg.hpp"
#include "starjet/polynomial.hpp"

namespace starjet {

using PolyMat = std::vector<std::vector<Polynomial>>;

namespace detail {

inline PolyMat poly_mat_zero(const VarTablePtr& vars, int rows, int cols) {
  return PolyMat(rows, std::vector<Polynomial>(cols, Polynomial::zero(vars)));
}

inline PolyMat poly_mat_identity(const VarTablePtr& vars, int n) {
  PolyMat m = poly_mat_zero(vars, n, n);
  for (int i = 0; i < n; ++i) m[i][i] = Polynomial::constant(vars, Scalar(1));
  return m;
}

inline PolyMat poly_mat_mul(const PolyMat& a, const PolyMat& b) {
  int rows = static_cast<int>(a.size());
  int inner = static_cast<int>(b.size());
  int cols = static_cast<int>(b[0].size());
  PolyMat out = poly_mat_zero(a[0][0].vars(), rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < inner; ++k) {
      if (a[i][k].is_zero()) continue;
      for (int j = 0; j < cols; ++j) out[i][j] = out[i][j] + a[i][k] * b[k][j];
    }
  return out;
}

// Inverse of a polynomial matrix modulo degree > bound via a Neumann series
// around the (exactly inverted) constant part.
inline PolyMat poly_mat_series_inverse(const PolyMat& m, int bound) {
  int n = static_cast<int>(m.size());
  const VarTablePtr& vars = m[0][0].vars();
  Matrix m0(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m0.at(i, j) = m[i][j].constant_term();
  Matrix a0;
  try {
    a0 = inverse(m0);
  } catch (const Error&) {
    throw Error::precondition("matrix is not invertible at the origin");
  }
  PolyMat a = poly_mat_zero(vars, n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i][j] = Polynomial::constant(vars, a0.at(i, j));
  // N = I - A*M has entries of positive valuation, so the series ends at bound.
  PolyMat nmat = poly_mat_mul(a, m);
  bool constant_input = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Polynomial entry = -nmat[i][j];
      if (i == j) entry = entry + Polynomial::constant(vars, Scalar(1));
      if (!entry.is_zero() || !entry.exact()) constant_input = false;
      nmat[i][j] = entry.with_precision(bound);
    }
  if (constant_input) return a;  // exact inverse, no truncation needed
  PolyMat acc = poly_mat_identity(vars, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) acc[i][j] = acc[i][j].with_precision(bound);
  PolyMat power = acc;
  for (int k = 1; k <= bound; ++k) {
    power = poly_mat_mul(power, nmat);
    bool all_zero = true;
    for (int i = 0; i < n && all_zero; ++i)
      for (int j = 0; j < n; ++j)
        if (!power[i][j].is_zero()) {
          all_zero = false;
          break;
        }
    if (all_zero) break;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc[i][j] = acc[i][j] + power[i][j];
  }
  return poly_mat_mul(acc, a);
}

}  // namespace detail

// Matrix constructors used when assembling chart and metric data.
using detail::poly_mat_identity;
using detail::poly_mat_zero;

// A polynomial Poisson structure in foliated normal form: the first
// `leaf_dim` coordinates span the symplectic leaf directions, the remaining
// `trans_dim` coordinates are transverse parameters that the bivector does
// not move.  `pi` and `omega` are the leaf-block bivector and its inverse
// two-form; omega entries may carry finite precision when obtained by series
// inversion modulo degree > `degree_bound`.
class PoissonChart {
public:
  PoissonChart(VarTablePtr base_vars, int leaf_dim, int trans_dim, int degree_bound, PolyMat pi,
               PolyMat omega)
      : vars_(std::move(base_vars)),
        leaf_dim_(leaf_dim),
        trans_dim_(trans_dim),
        degree_bound_(degree_bound),
        pi_(std::move(pi)),
        omega_(std::move(omega)) {
    if (leaf_dim_ <= 0 || leaf_dim_ % 2 != 0)
      throw Error::precondition("leaf dimension must be a positive even number");
    if (trans_dim_ < 0) throw Error::precondition("transverse dimension must be >= 0");
    if (static_cast<int>(vars_->size()) != leaf_dim_ + trans_dim_)
      throw Error::precondition("variable table size does not match chart dimensions");
    if (degree_bound_ < 0) throw Error::precondition("degree bound must be >= 0");
    check_shape(pi_, "bivector");
    check_shape(omega_, "two-form");
  }

  const VarTablePtr& vars() const { return vars_; }
  int leaf_dim() const { return leaf_dim_; }
  int trans_dim() const { return trans_dim_; }
  int dim() const { return leaf_dim_ + trans_dim_; }
  int degree_bound() const { return degree_bound_; }
  const PolyMat& pi() const { return pi_; }
  const PolyMat& omega() const { return omega_; }

  // {f, g} = sum_{i,l < leaf_dim} pi[i][l] d_i f d_l g
  Polynomial poisson_bracket(const Polynomial& f, const Polynomial& g) const {
    Polynomial out = Polynomial::zero(vars_, std::min(f.precision(), g.precision()));
    for (int i = 0; i < leaf_dim_; ++i) {
      Polynomial df = f.diff(i);
      if (df.is_zero() && df.exact()) continue;
      for (int l = 0; l < leaf_dim_; ++l) {
        if (pi_[i][l].is_zero() && pi_[i][l].exact()) continue;
        out = out + pi_[i][l] * df * g.diff(l);
      }
    }
    return out;
  }

  struct Validation {
    bool antisymmetric = true;
    bool inverse_pair = true;   // pi * omega == identity within precision
    bool jacobi = true;         // leafwise Jacobi identity, exact
    bool nondegenerate = true;  // leaf block invertible at the origin
    int inverse_precision = kPrecExact;
    std::string detail;
    bool ok() const { return antisymmetric && inverse_pair && jacobi && nondegenerate; }
  };

  Validation validate() const {
    Validation v;
    for (int i = 0; i < leaf_dim_; ++i)
      for (int j = 0; j < leaf_dim_; ++j) {
        if (!(pi_[i][j] + pi_[j][i]).is_zero()) {
          v.antisymmetric = false;
          v.detail = "bivector is not antisymmetric at entry (" + std::to_string(i + 1) + "," +
                     std::to_string(j + 1) + ")";
        }
        if (!(omega_[i][j] + omega_[j][i]).is_zero()) {
          v.antisymmetric = false;
          v.detail = "two-form is not antisymmetric at entry (" + std::to_string(i + 1) + "," +
                     std::to_string(j + 1) + ")";
        }
      }
    PolyMat prod = detail::poly_mat_mul(pi_, omega_);
    for (int i = 0; i < leaf_dim_; ++i)
      for (int j = 0; j < leaf_dim_; ++j) {
        Polynomial e = prod[i][j];
        if (i == j) e = e - Polynomial::constant(vars_, Scalar(1));
        v.inverse_precision = std::min(v.inverse_precision, e.precision());
        if (!e.is_zero()) {
          v.inverse_pair = false;
          v.detail = "bivector and two-form are not inverse at entry (" + std::to_string(i + 1) +
                     "," + std::to_string(j + 1) + ")";
        }
      }
    for (int i = 0; i < leaf_dim_ && v.jacobi; ++i)
      for (int j = i + 1; j < leaf_dim_ && v.jacobi; ++j)
        for (int k = j + 1; k < leaf_dim_ && v.jacobi; ++k) {
          Polynomial s = Polynomial::zero(vars_);
          for (int l = 0; l < leaf_dim_; ++l)
            s = s + pi_[i][l] * pi_[j][k].diff(l) + pi_[j][l] * pi_[k][i].diff(l) +
                pi_[k][l] * pi_[i][j].diff(l);
          if (!s.is_zero()) {
            v.jacobi = false;
            v.detail = "Jacobi identity fails at indices (" + std::to_string(i + 1) + "," +
                       std::to_string(j + 1) + "," + std::to_string(k + 1) + ")";
          }
        }
    Matrix pi0(leaf_dim_, leaf_dim_);
    for (int i = 0; i < leaf_dim_; ++i)
      for (int j = 0; j < leaf_dim_; ++j) pi0.at(i, j) = pi_[i][j].constant_term();
    if (rank(pi0) != leaf_dim_) {
      v.nondegenerate = false;
      v.detail = "leaf bivector is degenerate at the origin";
    }
    return v;
  }

private:
  void check_shape(const PolyMat& m, const char* what) const {
    if (static_cast<int>(m.size()) != leaf_dim_)
      throw Error::precondition(std::string(what) + " must be a leaf_dim x leaf_dim matrix");
    for (const auto& row : m) {
      if (static_cast<int>(row.size()) != leaf_dim_)
        throw Error::precondition(std::string(what) + " must be a leaf_dim x leaf_dim matrix");
      for (const auto& e : row)
        if (!same_table(e.vars(), vars_))
          throw Error::context(std::string(what) + " entries use a foreign variable table");
    }
  }

  VarTablePtr vars_;
  int leaf_dim_;
  int trans_dim_;
  int degree_bound_;
  PolyMat pi_;
  PolyMat omega_;
};

inline PoissonChart::Validation validate_chart(const PoissonChart& chart) {
  return chart.validate();
}

// Builds a chart from the bivector alone, inverting it for the two-form
// modulo degree > degree_bound.
inline PoissonChart chart_from_pi(VarTablePtr vars, int leaf_dim, int trans_dim, int degree_bound,
                                  PolyMat pi) {
  PolyMat omega = detail::poly_mat_series_inverse(pi, degree_bound);
  return PoissonChart(std::move(vars), leaf_dim, trans_dim, degree_bound, std::move(pi),
                      std::move(omega));
}

// Builds a chart from the two-form alone, inverting it for the bivector.
inline PoissonChart chart_from_omega(VarTablePtr vars, int leaf_dim, int trans_dim,
                                     int degree_bound, PolyMat omega) {
  PolyMat pi = detail::poly_mat_series_inverse(omega, degree_bound);
  return PoissonChart(std::move(vars), leaf_dim, trans_dim, degree_bound, std::move(pi),
                      std::move(omega));
}

}  // namespace starjet
