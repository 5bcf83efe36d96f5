#pragma once

#include <map>
#include <string>

#include "starjet/polynomial.hpp"

namespace starjet {

// Finite polynomial series in the formal parameter hbar.  Coefficients that
// vanish on a finite certified range are kept as explicit zero entries
// carrying their precision tag (so precision() reports how far each order is
// certified); observers skip them.
class HbarSeries {
public:
  HbarSeries() = default;
  explicit HbarSeries(Polynomial p) {
    vars_ = p.vars();
    set(0, std::move(p));
  }
  static HbarSeries zero(VarTablePtr vars) {
    HbarSeries s;
    s.vars_ = std::move(vars);
    return s;
  }

  const VarTablePtr& vars() const { return vars_; }
  const std::map<int, Polynomial>& coeffs() const { return c_; }
  bool is_zero() const {
    for (const auto& [k, p] : c_)
      if (!p.is_zero()) return false;
    return true;
  }

  Polynomial coeff(int k) const {
    auto it = c_.find(k);
    return it != c_.end() ? it->second : Polynomial::zero(vars_);
  }

  void set(int k, Polynomial p) {
    if (k < 0) throw Error::internal("negative hbar power");
    if (!vars_) vars_ = p.vars();
    if (p.is_zero() && p.exact())
      c_.erase(k);
    else
      c_[k] = std::move(p);
  }

  int max_order() const {
    int m = -1;
    for (const auto& [k, p] : c_)
      if (!p.is_zero()) m = std::max(m, k);
    return m;
  }
  int degree() const {
    int d = -1;
    for (const auto& [k, p] : c_) d = std::max(d, p.degree());
    return d;
  }
  int precision() const {
    int pr = kPrecExact;
    for (const auto& [k, p] : c_) pr = std::min(pr, p.precision());
    return pr;
  }

  HbarSeries operator-() const {
    HbarSeries s = *this;
    for (auto& [k, p] : s.c_) p = -p;
    return s;
  }
  friend HbarSeries operator+(const HbarSeries& a, const HbarSeries& b) {
    HbarSeries s = a;
    if (!s.vars_) s.vars_ = b.vars_;
    for (const auto& [k, p] : b.c_) s.set(k, s.coeff(k) + p);
    return s;
  }
  friend HbarSeries operator-(const HbarSeries& a, const HbarSeries& b) { return a + (-b); }
  friend HbarSeries operator*(const HbarSeries& a, const HbarSeries& b) {
    HbarSeries s = zero(a.vars_ ? a.vars_ : b.vars_);
    for (const auto& [i, p] : a.c_)
      for (const auto& [j, q] : b.c_) s.set(i + j, s.coeff(i + j) + p * q);
    return s;
  }
  HbarSeries scaled(const Scalar& x) const {
    HbarSeries s = zero(vars_);
    for (const auto& [k, p] : c_) s.set(k, p.scaled(x));
    return s;
  }
  HbarSeries shifted(int dk) const {
    HbarSeries s = zero(vars_);
    for (const auto& [k, p] : c_) s.set(k + dk, p);
    return s;
  }
  HbarSeries truncated(int max_k) const {
    HbarSeries s = zero(vars_);
    for (const auto& [k, p] : c_)
      if (k <= max_k) s.set(k, p);
    return s;
  }

  friend bool operator==(const HbarSeries& a, const HbarSeries& b) {
    for (const auto& [k, p] : a.c_)
      if (!p.is_zero() && p != b.coeff(k)) return false;
    for (const auto& [k, p] : b.c_)
      if (!p.is_zero() && p != a.coeff(k)) return false;
    return true;
  }
  friend bool operator!=(const HbarSeries& a, const HbarSeries& b) { return !(a == b); }

  std::string str() const {
    std::string out;
    for (const auto& [k, p] : c_) {
      if (p.is_zero()) continue;
      if (!out.empty()) out += " + ";
      std::string ps = p.num_terms() == 1 && k > 0 ? p.str() : "(" + p.str() + ")";
      if (k == 0)
        out += ps;
      else
        out += ps + "*hbar" + (k > 1 ? "^" + std::to_string(k) : "");
    }
    return out.empty() ? "0" : out;
  }

private:
  VarTablePtr vars_;
  std::map<int, Polynomial> c_;
};

}  // namespace starjet
