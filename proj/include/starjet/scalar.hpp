#pragma once

#include <gmpxx.h>

#include <string>

#include "starjet/errors.hpp"

namespace starjet {

using Rational = mpq_class;

inline Rational make_rational(long num, long den = 1) {
  if (den == 0) throw Error::precondition("rational with zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

// n or n/d, denominator positive, fully reduced.
inline std::string rational_str(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

// Gaussian rational re + im*i.  The coefficient field everywhere.
struct Scalar {
  Rational re, im;

  Scalar() : re(0), im(0) {}
  Scalar(long n) : re(n), im(0) {}
  Scalar(Rational r) : re(std::move(r)), im(0) {}
  Scalar(Rational r, Rational j) : re(std::move(r)), im(std::move(j)) {}

  static Scalar i() { return Scalar(Rational(0), Rational(1)); }
  static Scalar of(long num, long den) { return Scalar(make_rational(num, den)); }
  static Scalar imag(long num, long den = 1) { return Scalar(Rational(0), make_rational(num, den)); }

  bool is_zero() const { return re == 0 && im == 0; }
  bool is_real() const { return im == 0; }
  bool is_one() const { return im == 0 && re == 1; }

  Scalar operator-() const { return Scalar(-re, -im); }
  Scalar& operator+=(const Scalar& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  Scalar& operator-=(const Scalar& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  Scalar& operator*=(const Scalar& o) {
    Rational a = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = a;
    return *this;
  }
  friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
  friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
  friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }

  Scalar inverse() const {
    Rational n = re * re + im * im;
    if (n == 0) throw Error::precondition("division by zero scalar");
    return Scalar(re / n, -im / n);
  }
  friend Scalar operator/(const Scalar& a, const Scalar& b) { return a * b.inverse(); }

  friend bool operator==(const Scalar& a, const Scalar& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }

  Scalar conj() const { return Scalar(re, -im); }

  // a/b, c/d*i or a/b+c/d*i (compact, deterministic).
  std::string str() const {
    if (im == 0) return rational_str(re);
    std::string imag_part;
    Rational ai = abs(im);
    imag_part = (ai == 1) ? "i" : rational_str(ai) + "*i";
    if (re == 0) return (im < 0 ? "-" : "") + imag_part;
    return rational_str(re) + (im < 0 ? "-" : "+") + imag_part;
  }
};

}  // namespace starjet
