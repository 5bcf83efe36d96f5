#pragma once

#include <initializer_list>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "starjet/chart.hpp"
#include "starjet/expr.hpp"
#include "starjet/hseries.hpp"
#include "starjet/polynomial.hpp"
#include "starjet/weyl.hpp"

namespace starjet {

// Stream adapters so test failures print canonical forms.
inline std::ostream& operator<<(std::ostream& os, const Scalar& s) { return os << s.str(); }
inline std::ostream& operator<<(std::ostream& os, const Polynomial& p) { return os << p.str(); }
inline std::ostream& operator<<(std::ostream& os, const HbarSeries& s) { return os << s.str(); }
inline std::ostream& operator<<(std::ostream& os, const WeylElement& a) { return os << a.str(); }

}  // namespace starjet

namespace ts {

using namespace starjet;

inline VarTablePtr leaf_vars(std::initializer_list<const char*> names) {
  std::vector<std::string> n;
  std::vector<VarKind> k;
  for (const char* s : names) {
    n.emplace_back(s);
    k.push_back(VarKind::Leaf);
  }
  return make_vars(std::move(n), std::move(k));
}

inline VarTablePtr foliated_vars(std::initializer_list<const char*> leaf,
                                 std::initializer_list<const char*> trans) {
  std::vector<std::string> n;
  std::vector<VarKind> k;
  for (const char* s : leaf) {
    n.emplace_back(s);
    k.push_back(VarKind::Leaf);
  }
  for (const char* s : trans) {
    n.emplace_back(s);
    k.push_back(VarKind::Transverse);
  }
  return make_vars(std::move(n), std::move(k));
}

inline Polynomial P(const VarTablePtr& v, const std::string& text) {
  return parse_polynomial(text, v);
}

// Standard symplectic plane: variables q, p with {q, p} = 1.
inline std::shared_ptr<const PoissonChart> flat_plane(int bound = 10) {
  VarTablePtr v = leaf_vars({"q", "p"});
  PolyMat pi = poly_mat_zero(v, 2, 2);
  pi[0][1] = P(v, "1");
  pi[1][0] = P(v, "-1");
  PolyMat omega = poly_mat_zero(v, 2, 2);
  omega[0][1] = P(v, "-1");
  omega[1][0] = P(v, "1");
  return std::make_shared<PoissonChart>(v, 2, 0, bound, pi, omega);
}

// Curved leaf: variables x1, x2 with two-form entry omega_12 = 1 + x1*x2; the
// bivector is its truncated series inverse.
inline std::shared_ptr<const PoissonChart> curved_plane(int bound = 8) {
  VarTablePtr v = leaf_vars({"x1", "x2"});
  PolyMat omega = poly_mat_zero(v, 2, 2);
  omega[0][1] = P(v, "1 + x1*x2");
  omega[1][0] = P(v, "-1 - x1*x2");
  return std::make_shared<PoissonChart>(chart_from_omega(v, 2, 0, bound, omega));
}

// Foliated chart: leaf x1, x2 and transverse t, bivector entry 1 - t^2 + t^4.
inline std::shared_ptr<const PoissonChart> foliated_chart(int bound = 4) {
  VarTablePtr v = foliated_vars({"x1", "x2"}, {"t"});
  PolyMat pi = poly_mat_zero(v, 2, 2);
  pi[0][1] = P(v, "1 - t^2 + t^4");
  pi[1][0] = P(v, "-1 + t^2 - t^4");
  return std::make_shared<PoissonChart>(chart_from_pi(v, 2, 1, bound, pi));
}

}  // namespace ts
