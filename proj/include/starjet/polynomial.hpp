#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "starjet/errors.hpp"
#include "starjet/scalar.hpp"

namespace starjet {

// Base-coordinate variable classes.  Fiber (y), form (dx) and the formal
// parameter (hbar) never appear inside a Polynomial; they live in the Weyl
// layer which tracks them structurally.
enum class VarKind { Leaf, Transverse, Fiber, Form, Hbar };

struct VarTable {
  std::vector<std::string> names;
  std::vector<VarKind> kinds;

  int size() const { return static_cast<int>(names.size()); }
  int find(const std::string& n) const {
    for (int i = 0; i < size(); ++i)
      if (names[i] == n) return i;
    return -1;
  }
  bool operator==(const VarTable& o) const { return names == o.names && kinds == o.kinds; }
};

using VarTablePtr = std::shared_ptr<const VarTable>;

inline VarTablePtr make_vars(std::vector<std::string> names, std::vector<VarKind> kinds) {
  auto t = std::make_shared<VarTable>();
  t->names = std::move(names);
  t->kinds = std::move(kinds);
  return t;
}

inline bool same_table(const VarTablePtr& a, const VarTablePtr& b) {
  return a == b || (a && b && *a == *b);
}

// Monomials are packed into one 64-bit key: total degree in the top 16 bits,
// then 8 bits per variable (first variable most significant).  Unsigned
// comparison of keys is exactly graded-lex with x1 > x2 > ... order.
inline constexpr int kMaxVars = 6;
inline constexpr int kMaxExp = 200;

inline std::uint64_t mono_pack(const std::vector<int>& exps) {
  std::uint64_t key = 0;
  int deg = 0;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    if (exps[i] < 0 || exps[i] > kMaxExp) throw Error::truncation("monomial exponent out of range");
    deg += exps[i];
    key |= static_cast<std::uint64_t>(exps[i]) << (8 * (kMaxVars - 1 - i));
  }
  if (deg > kMaxExp * kMaxVars) throw Error::truncation("monomial degree out of range");
  return key | (static_cast<std::uint64_t>(deg) << 48);
}

inline int mono_deg(std::uint64_t key) { return static_cast<int>(key >> 48); }

inline int mono_exp(std::uint64_t key, int var) {
  return static_cast<int>((key >> (8 * (kMaxVars - 1 - var))) & 0xff);
}

inline std::vector<int> mono_unpack(std::uint64_t key, int nvars) {
  std::vector<int> e(nvars);
  for (int i = 0; i < nvars; ++i) e[i] = mono_exp(key, i);
  return e;
}

inline std::uint64_t mono_mul(std::uint64_t a, std::uint64_t b) { return a + b; }

inline bool mono_divides(std::uint64_t a, std::uint64_t b) {
  // does a divide b, i.e. every exponent of a <= that of b
  for (int i = 0; i < kMaxVars; ++i)
    if (mono_exp(a, i) > mono_exp(b, i)) return false;
  return true;
}

inline std::uint64_t mono_quot(std::uint64_t b, std::uint64_t a) { return b - a; }

inline std::uint64_t mono_lcm(std::uint64_t a, std::uint64_t b) {
  std::vector<int> e(kMaxVars);
  for (int i = 0; i < kMaxVars; ++i) e[i] = std::max(mono_exp(a, i), mono_exp(b, i));
  e.resize(kMaxVars);
  return mono_pack(e);
}

inline constexpr int kPrecExact = std::numeric_limits<int>::max();

// Sparse multivariate polynomial with Scalar coefficients over a shared
// variable table.  Terms are kept sorted ascending in graded-lex key order
// with no zero coefficients, so representation is canonical.
//
// `precision` implements truncated power-series semantics: the polynomial is
// guaranteed to agree with its ideal (untruncated) value on all terms of
// total degree <= precision, and stores nothing above that line.  Exact
// polynomials use kPrecExact.  add/mul take the min precision, d/dx lowers
// precision by one.
class Polynomial {
public:
  Polynomial() = default;

  static Polynomial zero(VarTablePtr vars, int prec = kPrecExact) {
    Polynomial p;
    p.vars_ = std::move(vars);
    p.prec_ = prec;
    return p;
  }
  static Polynomial constant(VarTablePtr vars, Scalar c, int prec = kPrecExact) {
    Polynomial p = zero(std::move(vars), prec);
    if (!c.is_zero() && prec >= 0) p.terms_.push_back({0, std::move(c)});
    return p;
  }
  static Polynomial variable(const VarTablePtr& vars, int idx) {
    std::vector<int> e(vars->size(), 0);
    e.at(idx) = 1;
    return monomial(vars, e, Scalar(1));
  }
  static Polynomial monomial(const VarTablePtr& vars, const std::vector<int>& exps, Scalar c,
                             int prec = kPrecExact) {
    Polynomial p = zero(vars, prec);
    std::uint64_t key = mono_pack(exps);
    if (!c.is_zero() && mono_deg(key) <= prec) p.terms_.push_back({key, std::move(c)});
    return p;
  }

  const VarTablePtr& vars() const { return vars_; }
  int precision() const { return prec_; }
  bool exact() const { return prec_ == kPrecExact; }
  bool is_zero() const { return terms_.empty(); }
  int num_terms() const { return static_cast<int>(terms_.size()); }
  const std::vector<std::pair<std::uint64_t, Scalar>>& terms() const { return terms_; }

  int degree() const { return terms_.empty() ? -1 : mono_deg(terms_.back().first); }

  // leading term in graded-lex order
  std::pair<std::uint64_t, Scalar> lead() const {
    if (terms_.empty()) throw Error::internal("lead() of zero polynomial");
    return terms_.back();
  }

  Scalar coeff(std::uint64_t key) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), key,
                               [](const auto& t, std::uint64_t k) { return t.first < k; });
    return (it != terms_.end() && it->first == key) ? it->second : Scalar(0);
  }
  Scalar constant_term() const { return coeff(0); }

  Polynomial with_precision(int prec) const {
    Polynomial p = *this;
    p.prec_ = std::min(prec_, prec);
    p.chop();
    return p;
  }

  // Keep only terms of total degree <= d (does not lower the precision tag
  // below d's implied knowledge; used for reporting slices).
  Polynomial degree_slice_upto(int d) const {
    Polynomial p = zero(vars_, prec_);
    for (const auto& t : terms_)
      if (mono_deg(t.first) <= d) p.terms_.push_back(t);
    return p;
  }

  Polynomial operator-() const {
    Polynomial p = *this;
    for (auto& t : p.terms_) t.second = -t.second;
    return p;
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    a.check_compatible(b);
    Polynomial out = zero(a.vars_ ? a.vars_ : b.vars_, std::min(a.prec_, b.prec_));
    out.terms_.reserve(a.terms_.size() + b.terms_.size());
    std::size_t i = 0, j = 0;
    while (i < a.terms_.size() || j < b.terms_.size()) {
      if (j == b.terms_.size() || (i < a.terms_.size() && a.terms_[i].first < b.terms_[j].first)) {
        out.terms_.push_back(a.terms_[i++]);
      } else if (i == a.terms_.size() || b.terms_[j].first < a.terms_[i].first) {
        out.terms_.push_back(b.terms_[j++]);
      } else {
        Scalar s = a.terms_[i].second + b.terms_[j].second;
        if (!s.is_zero()) out.terms_.push_back({a.terms_[i].first, std::move(s)});
        ++i, ++j;
      }
    }
    out.chop();
    return out;
  }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }

  Polynomial scaled(const Scalar& c) const {
    if (c.is_zero()) return zero(vars_, prec_);
    Polynomial p = *this;
    for (auto& t : p.terms_) t.second *= c;
    return p;
  }

  Polynomial mul_monomial(std::uint64_t key, const Scalar& c) const {
    if (c.is_zero()) return zero(vars_, prec_);
    Polynomial p = zero(vars_, prec_);
    p.terms_.reserve(terms_.size());
    for (const auto& t : terms_) {
      std::uint64_t k = mono_mul(t.first, key);
      if (mono_deg(k) <= p.prec_) p.terms_.push_back({k, t.second * c});
    }
    return p;
  }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_compatible(b);
    Polynomial out = zero(a.vars_ ? a.vars_ : b.vars_, std::min(a.prec_, b.prec_));
    if (a.terms_.empty() || b.terms_.empty()) return out;
    std::vector<std::pair<std::uint64_t, Scalar>> acc;
    acc.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& ta : a.terms_)
      for (const auto& tb : b.terms_) {
        std::uint64_t k = mono_mul(ta.first, tb.first);
        if (mono_deg(k) <= out.prec_) acc.push_back({k, ta.second * tb.second});
      }
    std::sort(acc.begin(), acc.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto& t : acc) {
      if (!out.terms_.empty() && out.terms_.back().first == t.first)
        out.terms_.back().second += t.second;
      else
        out.terms_.push_back(std::move(t));
    }
    out.terms_.erase(std::remove_if(out.terms_.begin(), out.terms_.end(),
                                    [](const auto& t) { return t.second.is_zero(); }),
                     out.terms_.end());
    return out;
  }

  Polynomial diff(int var) const {
    Polynomial p = zero(vars_, prec_ == kPrecExact ? kPrecExact : prec_ - 1);
    for (const auto& t : terms_) {
      int e = mono_exp(t.first, var);
      if (e == 0) continue;
      std::vector<int> ex = mono_unpack(t.first, vars_->size());
      ex[var] -= 1;
      p.terms_.push_back({mono_pack(ex), t.second * Scalar(e)});
    }
    // diff of an ascending-sorted list stays ascending (same relative order)
    return p;
  }

  // Substitution: variable i of this polynomial becomes images[i].  All
  // inputs must be exact (finite-precision composition is not well defined
  // under our truncation semantics).
  Polynomial compose(const std::vector<Polynomial>& images) const {
    if (!exact()) throw Error::truncation("compose requires an exact polynomial");
    if (static_cast<int>(images.size()) != vars_->size())
      throw Error::context("compose: image count does not match variable count");
    VarTablePtr target;
    for (const auto& im : images) {
      if (!im.exact()) throw Error::truncation("compose requires exact substitution images");
      if (!target)
        target = im.vars();
      else if (!same_table(target, im.vars()))
        throw Error::context("compose: substitution images over different variables");
    }
    if (!target) throw Error::context("compose: no substitution images");
    Polynomial out = zero(target);
    // memoized powers of each image
    std::vector<std::vector<Polynomial>> pows(images.size());
    auto power = [&](int v, int e) -> const Polynomial& {
      auto& tab = pows[v];
      if (tab.empty()) tab.push_back(constant(target, Scalar(1)));
      while (static_cast<int>(tab.size()) <= e) tab.push_back(tab.back() * images[v]);
      return tab[e];
    };
    for (const auto& t : terms_) {
      Polynomial term = constant(target, t.second);
      for (int v = 0; v < vars_->size(); ++v) {
        int e = mono_exp(t.first, v);
        if (e > 0) term = term * power(v, e);
      }
      out = out + term;
    }
    return out;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    if (!same_table(a.vars_, b.vars_)) return false;
    return a.terms_ == b.terms_;
  }
  friend bool operator!=(const Polynomial& a, const Polynomial& b) { return !(a == b); }

  // Canonical form: terms in descending graded-lex order, exponents as x^3,
  // coefficient scalars as a/b or compact complex in parentheses.
  std::string str() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      Scalar c = it->second;
      bool negative = (c.re != 0) ? (c.re < 0) : (c.im < 0);
      if (negative) c = -c;
      if (out.empty())
        out += negative ? "-" : "";
      else
        out += negative ? " - " : " + ";
      out += term_str(c, it->first);
    }
    return out;
  }

  void check_compatible(const Polynomial& o) const {
    if (vars_ && o.vars_ && !same_table(vars_, o.vars_))
      throw Error::context("polynomials over different variable tables");
    if (!vars_ && !terms_.empty()) throw Error::internal("polynomial without variable table");
  }

private:
  void chop() {
    if (prec_ == kPrecExact) return;
    terms_.erase(std::remove_if(terms_.begin(), terms_.end(),
                                [&](const auto& t) { return mono_deg(t.first) > prec_; }),
                 terms_.end());
  }

  std::string mono_str(std::uint64_t key) const {
    std::string s;
    for (int v = 0; v < vars_->size(); ++v) {
      int e = mono_exp(key, v);
      if (e == 0) continue;
      if (!s.empty()) s += "*";
      s += vars_->names[v];
      if (e > 1) s += "^" + std::to_string(e);
    }
    return s;
  }

  std::string term_str(const Scalar& c, std::uint64_t key) const {
    std::string m = mono_str(key);
    if (m.empty()) return c.is_real() || c.re == 0 ? c.str() : "(" + c.str() + ")";
    if (c.is_one()) return m;
    if (c.is_real() || c.re == 0) return c.str() + "*" + m;
    return "(" + c.str() + ")*" + m;
  }

  VarTablePtr vars_;
  std::vector<std::pair<std::uint64_t, Scalar>> terms_;
  int prec_ = kPrecExact;
};

// Named aliases for the core ring operations (the operator forms are the
// idiomatic spelling; these read better at call sites doing algebra on
// explicit operation names).
inline Polynomial poly_mul(const Polynomial& a, const Polynomial& b) { return a * b; }
inline Polynomial poly_diff(const Polynomial& a, int var) { return a.diff(var); }
inline Polynomial poly_compose(const Polynomial& f, const std::vector<Polynomial>& images) {
  return f.compose(images);
}

// Multiplicative inverse of p as a power series, truncated to total degree
// `bound`; requires an invertible constant term.
inline Polynomial series_invert(const Polynomial& p, int bound) {
  Scalar c0 = p.constant_term();
  if (c0.is_zero()) throw Error::precondition("series_invert: constant term is zero");
  if (bound < 0) throw Error::precondition("series_invert: negative bound");
  if (p.precision() < bound)
    throw Error::truncation("series_invert: input precision below requested bound");
  Scalar inv0 = c0.inverse();
  if (p.degree() <= 0 && p.exact()) return Polynomial::constant(p.vars(), inv0);
  Polynomial nilp = (Polynomial::constant(p.vars(), c0) - p).scaled(inv0).with_precision(bound);
  // geometric series in the augmentation part
  Polynomial acc = Polynomial::constant(p.vars(), inv0, bound);
  Polynomial pw = Polynomial::constant(p.vars(), Scalar(1), bound);
  for (int k = 1; k <= bound; ++k) {
    pw = pw * nilp;
    if (pw.is_zero()) break;
    acc = acc + pw.scaled(inv0);
  }
  return acc;
}

}  // namespace starjet
