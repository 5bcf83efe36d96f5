#pragma once

#include <bit>
#include <limits>
#include <map>
#include <memory>
#include <tuple>
#include <utility>
#include <vector>

#include "starjet/chart.hpp"
#include "starjet/hseries.hpp"

namespace starjet {

inline int leaf_count(const VarTablePtr& vars) {
  int r = 0;
  for (VarKind k : vars->kinds)
    if (k == VarKind::Leaf) ++r;
  return r;
}

inline std::uint64_t mono_unit(int var) {
  return (std::uint64_t{1} << (8 * (kMaxVars - 1 - var))) | (std::uint64_t{1} << 48);
}

// One structural slot of the fiberwise algebra: a fiber monomial y^alpha
// (packed like base monomials over the leaf slots), a power of hbar and an
// antisymmetrized set of leaf form indices dx^{i1} ^ ... (bitmask, ascending
// canonical order).  Keys sort by (fiber graded-lex, hbar, form).
struct WeylKey {
  std::uint64_t fiber = 0;
  int hbar = 0;
  std::uint32_t form = 0;
  friend auto operator<=>(const WeylKey&, const WeylKey&) = default;
};

// filtration weight: fiber degree + twice the hbar power
inline int fedosov_degree(const WeylKey& k) { return mono_deg(k.fiber) + 2 * k.hbar; }
inline int form_degree(const WeylKey& k) { return std::popcount(k.form); }

// sign of dx^L ^ dx^R for disjoint index sets in canonical ascending order
inline int wedge_sign(std::uint32_t left, std::uint32_t right) {
  int inversions = 0;
  for (std::uint32_t rest = right; rest;) {
    int b = std::countr_zero(rest);
    rest &= rest - 1;
    inversions += std::popcount(left >> (b + 1));
  }
  return (inversions & 1) ? -1 : 1;
}

// Sentinel: the element carries no truncation-order tag.  Untagged elements
// are internal intermediates whose completeness the caller manages with
// explicit filtration caps.
inline constexpr int kTruncNone = std::numeric_limits<int>::max();

// Element of the truncated fiberwise Weyl algebra with polynomial base
// coefficients.  A coefficient that vanishes on a finite certified range is
// kept as an explicit zero entry carrying its precision tag; a later
// contribution at the same key is then chopped to the range on which the
// accumulated sum is actually certified, so stored content never depends on
// accumulation order.  Observers (is_zero, num_terms, degree and hbar
// bounds, equality, printing) ignore these zero entries.  `min_prec_` adds
// an element-wide precision floor for losses that have no key of their own.
// A tagged element represents a class modulo filtration weight >
// truncation(); combining tagged elements with different orders is a usage
// error.
class WeylElement {
public:
  WeylElement() = default;
  static WeylElement zero(VarTablePtr vars, int min_prec = kPrecExact) {
    WeylElement e;
    e.vars_ = std::move(vars);
    e.min_prec_ = min_prec;
    return e;
  }
  static WeylElement from_base(const Polynomial& p, int hbar = 0, std::uint32_t form = 0) {
    WeylElement e = zero(p.vars());
    e.add(WeylKey{0, hbar, form}, p);
    return e;
  }

  const VarTablePtr& vars() const { return vars_; }
  const std::map<WeylKey, Polynomial>& terms() const { return terms_; }
  bool is_zero() const {
    for (const auto& [k, c] : terms_)
      if (!c.is_zero()) return false;
    return true;
  }
  int num_terms() const {
    int n = 0;
    for (const auto& [k, c] : terms_)
      if (!c.is_zero()) ++n;
    return n;
  }

  // truncation-order tag (kTruncNone when untagged)
  int truncation() const { return trunc_; }
  WeylElement with_truncation(int order) const {
    WeylElement e = truncated_fedosov(order);
    e.trunc_ = order;
    return e;
  }

  Polynomial coeff(const WeylKey& k) const {
    auto it = terms_.find(k);
    return it != terms_.end() ? it->second : Polynomial::zero(vars_);
  }

  void set(const WeylKey& k, Polynomial p) {
    if (!vars_) vars_ = p.vars();
    if (p.is_zero() && p.exact())
      terms_.erase(k);
    else
      terms_[k] = std::move(p);
  }
  void add(const WeylKey& k, const Polynomial& p) {
    auto it = terms_.find(k);
    set(k, it != terms_.end() ? it->second + p : p);
  }
  void fold_precision(int prec) { min_prec_ = std::min(min_prec_, prec); }

  // lowest certified base degree across the whole element
  int precision() const {
    int p = min_prec_;
    for (const auto& [k, c] : terms_) p = std::min(p, c.precision());
    return p;
  }

  int max_fedosov_degree() const {
    int d = -1;
    for (const auto& [k, c] : terms_)
      if (!c.is_zero()) d = std::max(d, fedosov_degree(k));
    return d;
  }
  int min_fedosov_degree() const {
    int d = -1;
    for (const auto& [k, c] : terms_)
      if (!c.is_zero()) d = (d < 0) ? fedosov_degree(k) : std::min(d, fedosov_degree(k));
    return d;
  }
  int min_hbar() const {
    int h = -1;
    for (const auto& [k, c] : terms_)
      if (!c.is_zero()) h = (h < 0) ? k.hbar : std::min(h, k.hbar);
    return h;
  }
  int max_form_degree() const {
    int d = 0;
    for (const auto& [k, c] : terms_)
      if (!c.is_zero()) d = std::max(d, form_degree(k));
    return d;
  }

  WeylElement operator-() const {
    WeylElement e = *this;
    for (auto& [k, c] : e.terms_) c = -c;
    return e;
  }
  friend WeylElement operator+(const WeylElement& a, const WeylElement& b) {
    if (a.trunc_ != kTruncNone && b.trunc_ != kTruncNone && a.trunc_ != b.trunc_)
      throw Error::context("combining elements truncated at different orders (" +
                           std::to_string(a.trunc_) + " vs " + std::to_string(b.trunc_) + ")");
    WeylElement e = a;
    if (!e.vars_) e.vars_ = b.vars_;
    e.min_prec_ = std::min(a.min_prec_, b.min_prec_);
    e.trunc_ = std::min(a.trunc_, b.trunc_);
    for (const auto& [k, c] : b.terms_) e.add(k, c);
    return e;
  }
  friend WeylElement operator-(const WeylElement& a, const WeylElement& b) { return a + (-b); }

  WeylElement scaled(const Scalar& s) const {
    WeylElement e = zero(vars_, min_prec_);
    e.trunc_ = trunc_;
    for (const auto& [k, c] : terms_) e.set(k, c.scaled(s));
    return e;
  }
  WeylElement scaled_base(const Polynomial& p) const {
    WeylElement e = zero(vars_, min_prec_);
    e.trunc_ = trunc_;
    for (const auto& [k, c] : terms_) e.set(k, c * p);
    e.fold_precision(p.precision() == kPrecExact ? min_prec_ : p.precision());
    return e;
  }

  WeylElement hbar_shifted(int dk) const {
    WeylElement e = zero(vars_, min_prec_);
    if (trunc_ != kTruncNone) e.trunc_ = trunc_ + 2 * dk;  // weight shifts with hbar
    for (const auto& [k, c] : terms_) {
      if (k.hbar + dk < 0) {
        if (c.is_zero()) {
          // precision marker with no content: its key disappears, keep the claim
          e.fold_precision(c.precision());
          continue;
        }
        throw Error::internal("hbar power would become negative");
      }
      e.set(WeylKey{k.fiber, k.hbar + dk, k.form}, c);
    }
    return e;
  }

  WeylElement truncated_fedosov(int cap) const {
    WeylElement e = zero(vars_, min_prec_);
    if (trunc_ != kTruncNone) e.trunc_ = std::min(trunc_, cap);
    for (const auto& [k, c] : terms_)
      if (fedosov_degree(k) <= cap) e.set(k, c);
    return e;
  }
  WeylElement fedosov_slice(int d) const {
    WeylElement e = zero(vars_, min_prec_);
    e.trunc_ = trunc_;
    for (const auto& [k, c] : terms_)
      if (fedosov_degree(k) == d) e.set(k, c);
    return e;
  }
  WeylElement form_slice(int p) const {
    WeylElement e = zero(vars_, min_prec_);
    e.trunc_ = trunc_;
    for (const auto& [k, c] : terms_)
      if (form_degree(k) == p) e.set(k, c);
    return e;
  }

  // fiber-0, form-0 part as a series in hbar; defined only on plain algebra
  // elements (no differential-form factors)
  HbarSeries symbol() const {
    HbarSeries s = HbarSeries::zero(vars_);
    for (const auto& [k, c] : terms_) {
      if (k.form != 0) {
        if (c.is_zero()) continue;
        throw Error::precondition(
            "symbol of an element with a differential-form part is undefined");
      }
      if (k.fiber == 0) s.set(k.hbar, c);
    }
    return s;
  }

  friend bool operator==(const WeylElement& a, const WeylElement& b) {
    for (const auto& [k, c] : a.terms_)
      if (!c.is_zero() && c != b.coeff(k)) return false;
    for (const auto& [k, c] : b.terms_)
      if (!c.is_zero() && c != a.coeff(k)) return false;
    return true;
  }
  friend bool operator!=(const WeylElement& a, const WeylElement& b) { return !(a == b); }

  // Canonical rendering: terms ascending by key; fiber slot i prints as
  // y<i+1> (paired with the i-th leaf coordinate), form sets as dx[i,j].
  std::string str() const {
    std::string out;
    for (const auto& [k, c] : terms_) {
      if (c.is_zero()) continue;
      std::string piece = render_term(k, c);
      if (out.empty()) {
        out = piece;
      } else if (piece.size() > 1 && piece[0] == '-') {
        out += " - " + piece.substr(1);
      } else {
        out += " + " + piece;
      }
    }
    return out.empty() ? "0" : out;
  }

private:
  std::string render_term(const WeylKey& k, const Polynomial& c) const {
    std::string coeff_s = c.str();
    bool structural = k.fiber != 0 || k.hbar != 0 || k.form != 0;
    if (!structural) return c.num_terms() > 1 ? coeff_s : coeff_s;
    std::string out;
    if (c.num_terms() > 1)
      out = "(" + coeff_s + ")";
    else if (coeff_s != "1")
      out = coeff_s;
    int r = leaf_count(vars_);
    for (int u = 0; u < r; ++u) {
      int e = mono_exp(k.fiber, u);
      if (e == 0) continue;
      if (!out.empty()) out += "*";
      out += "y" + std::to_string(u + 1);
      if (e > 1) out += "^" + std::to_string(e);
    }
    if (k.hbar > 0) {
      if (!out.empty()) out += "*";
      out += "hbar";
      if (k.hbar > 1) out += "^" + std::to_string(k.hbar);
    }
    if (k.form != 0) {
      if (!out.empty()) out += "*";
      out += "dx[";
      bool first = true;
      for (std::uint32_t rest = k.form; rest;) {
        int b = std::countr_zero(rest);
        rest &= rest - 1;
        if (!first) out += ",";
        out += std::to_string(b + 1);
        first = false;
      }
      out += "]";
    }
    return out.empty() ? "1" : out;
  }

  VarTablePtr vars_;
  std::map<WeylKey, Polynomial> terms_;
  int min_prec_ = kPrecExact;
  int trunc_ = kTruncNone;
};

// Filtration weight of an element: the minimum of fiber degree + 2*hbar
// power over its terms; +infinity sentinel for the zero element.
inline int fedosov_degree(const WeylElement& a) {
  return a.is_zero() ? std::numeric_limits<int>::max() : a.min_fedosov_degree();
}

// Leafwise differential forms with hbar-graded polynomial coefficients are
// the fiber-free elements of the same container.
using FormSeries = WeylElement;

inline void validate_form_series(const FormSeries& a) {
  for (const auto& [k, c] : a.terms())
    if (k.fiber != 0 && !c.is_zero())
      throw Error::precondition("form series must not contain fiber variables");
}

// Shared per-chart state for fiberwise products: the list of nonzero leaf
// bivector entries and a cache of their powers.
class WeylContext {
public:
  explicit WeylContext(std::shared_ptr<const PoissonChart> chart) : chart_(std::move(chart)) {
    const PolyMat& pi = chart_->pi();
    int r = chart_->leaf_dim();
    pi_min_prec_ = kPrecExact;
    for (int u = 0; u < r; ++u)
      for (int v = 0; v < r; ++v) {
        pi_min_prec_ = std::min(pi_min_prec_, pi[u][v].precision());
        if (!pi[u][v].is_zero()) entries_.push_back({u, v});
      }
  }

  const PoissonChart& chart() const { return *chart_; }
  std::shared_ptr<const PoissonChart> chart_ptr() const { return chart_; }
  const std::vector<std::pair<int, int>>& pi_entries() const { return entries_; }
  int pi_min_precision() const { return pi_min_prec_; }

  const Polynomial& pi_power(int u, int v, int e) const {
    auto key = std::make_tuple(u, v, e);
    auto it = pow_cache_.find(key);
    if (it != pow_cache_.end()) return it->second;
    Polynomial p = (e == 1) ? chart_->pi()[u][v] : pi_power(u, v, e - 1) * chart_->pi()[u][v];
    return pow_cache_.emplace(key, std::move(p)).first->second;
  }

  // (-i/2)^j
  const Scalar& half_i_power(int j) const {
    while (static_cast<int>(ihalf_.size()) <= j) {
      if (ihalf_.empty())
        ihalf_.push_back(Scalar(1));
      else
        ihalf_.push_back(ihalf_.back() * Scalar(Rational(0), make_rational(-1, 2)));
    }
    return ihalf_[j];
  }

private:
  std::shared_ptr<const PoissonChart> chart_;
  std::vector<std::pair<int, int>> entries_;
  int pi_min_prec_ = kPrecExact;
  mutable std::map<std::tuple<int, int, int>, Polynomial> pow_cache_;
  mutable std::vector<Scalar> ihalf_;
};

namespace detail {

// Enumerates the derivative-pairing matrices of the fiberwise product of two
// structural terms and emits each contribution through `emit`.  The product
// preserves filtration weight, so callers prune whole term pairs, not
// individual matrices.
template <typename Emit>
void moyal_pairings(const WeylContext& ctx, const WeylKey& ka, const Polynomial& pa,
                    const WeylKey& kb, const Polynomial& pb, Emit&& emit) {
  if (ka.form & kb.form) return;  // repeated form index
  int r = ctx.chart().leaf_dim();
  Polynomial fg = pa * pb;
  int sgn = wedge_sign(ka.form, kb.form);
  std::uint32_t form = ka.form | kb.form;
  std::vector<int> avail_a(r), avail_b(r);
  for (int u = 0; u < r; ++u) {
    avail_a[u] = mono_exp(ka.fiber, u);
    avail_b[u] = mono_exp(kb.fiber, u);
  }
  const auto& entries = ctx.pi_entries();
  auto rec = [&](auto&& self, std::size_t idx, const Scalar& coef, const Polynomial& poly,
                 int j) -> void {
    if (idx == entries.size()) {
      std::vector<int> fiber(r);
      for (int u = 0; u < r; ++u) fiber[u] = avail_a[u] + avail_b[u];
      WeylKey nk{mono_pack(fiber), ka.hbar + kb.hbar + j, form};
      Scalar s = coef * ctx.half_i_power(j);
      if (sgn < 0) s = -s;
      emit(nk, poly.scaled(s));
      return;
    }
    auto [u, v] = entries[idx];
    self(self, idx + 1, coef, poly, j);
    int cmax = std::min(avail_a[u], avail_b[v]);
    Scalar f = coef;
    Polynomial chain = poly;
    for (int c = 1; c <= cmax; ++c) {
      f = f * Scalar(make_rational(static_cast<long>(avail_a[u]) * avail_b[v], c));
      --avail_a[u];
      --avail_b[v];
      chain = chain * ctx.pi_power(u, v, 1);
      self(self, idx + 1, f, chain, j + c);
    }
    avail_a[u] += cmax;
    avail_b[v] += cmax;
  };
  rec(rec, 0, Scalar(1), fg, 0);
}

}  // namespace detail

// Fiberwise product truncated past filtration weight `cap`.
inline WeylElement moyal(const WeylContext& ctx, const WeylElement& a, const WeylElement& b,
                         int cap) {
  WeylElement out = WeylElement::zero(a.vars() ? a.vars() : b.vars());
  out.fold_precision(std::min({a.precision(), b.precision(), ctx.pi_min_precision()}));
  for (const auto& [ka, pa] : a.terms()) {
    int da = fedosov_degree(ka);
    for (const auto& [kb, pb] : b.terms()) {
      if (da + fedosov_degree(kb) > cap) continue;
      detail::moyal_pairings(ctx, ka, pa, kb, pb,
                             [&](const WeylKey& k, const Polynomial& p) { out.add(k, p); });
    }
  }
  return out;
}

// Fiberwise product of truncation-tagged elements; the truncation order of
// the operands fixes the cap and must agree.
inline WeylElement moyal(const WeylContext& ctx, const WeylElement& a, const WeylElement& b) {
  if (a.truncation() == kTruncNone && b.truncation() == kTruncNone)
    throw Error::context("product of untagged elements needs an explicit truncation order");
  if (a.truncation() != kTruncNone && b.truncation() != kTruncNone &&
      a.truncation() != b.truncation())
    throw Error::context("multiplying elements truncated at different orders (" +
                         std::to_string(a.truncation()) + " vs " +
                         std::to_string(b.truncation()) + ")");
  int cap = std::min(a.truncation(), b.truncation());
  return moyal(ctx, a, b, cap).with_truncation(cap);
}

// Form-graded commutator u v - (-1)^{|u||v|} v u termwise in form degree.
inline WeylElement graded_commutator(const WeylContext& ctx, const WeylElement& a,
                                     const WeylElement& b, int cap) {
  int r = ctx.chart().leaf_dim();
  WeylElement out = WeylElement::zero(a.vars() ? a.vars() : b.vars());
  for (int p = 0; p <= r; ++p) {
    WeylElement ap = a.form_slice(p);
    for (int q = 0; q <= r; ++q) {
      WeylElement bq = b.form_slice(q);
      if (ap.is_zero() && bq.is_zero()) continue;
      WeylElement fwd = moyal(ctx, ap, bq, cap);
      WeylElement rev = moyal(ctx, bq, ap, cap);
      out = out + fwd - ((p * q) % 2 ? -rev : rev);
    }
  }
  return out;
}

// (i/hbar)[a, b]: the order-0 pairing cancels in the commutator, so the
// division is exact; computed with headroom cap+2 so the result is complete
// through filtration weight `cap`.
inline WeylElement i_over_hbar_commutator(const WeylContext& ctx, const WeylElement& a,
                                          const WeylElement& b, int cap) {
  WeylElement c = graded_commutator(ctx, a, b, cap + 2);
  if (!c.is_zero() && c.min_hbar() < 1)
    throw Error::internal("commutator has an hbar-free part; pairing cancellation failed");
  return c.hbar_shifted(-1).scaled(Scalar::i()).truncated_fedosov(cap);
}

// i * a / hbar for elements with every term of hbar order >= 1.
inline WeylElement i_over_hbar(const WeylElement& a) {
  if (!a.is_zero() && a.min_hbar() < 1)
    throw Error::internal("element is not divisible by hbar");
  return a.hbar_shifted(-1).scaled(Scalar::i());
}

// Symbol of the fiberwise product of two form-free elements, through hbar
// order `max_order`: only pairings that consume both fiber monomials entirely
// can reach fiber degree zero, which prunes most term pairs before the matrix
// enumeration.  `precision_out`, when given, receives the lowest certified
// base degree of the result.
inline HbarSeries moyal_symbol(const WeylContext& ctx, const WeylElement& a, const WeylElement& b,
                               int max_order, int* precision_out = nullptr) {
  HbarSeries out = HbarSeries::zero(a.vars() ? a.vars() : b.vars());
  int prec = std::min({a.precision(), b.precision(), ctx.pi_min_precision()});
  for (const auto& [ka, pa] : a.terms()) {
    if (ka.form != 0) {
      if (pa.is_zero()) continue;
      throw Error::precondition("symbol product of an element with form factors");
    }
    int da = mono_deg(ka.fiber);
    for (const auto& [kb, pb] : b.terms()) {
      if (kb.form != 0) {
        if (pb.is_zero()) continue;
        throw Error::precondition("symbol product of an element with form factors");
      }
      // full mutual contraction needs equal fiber degrees and lands at
      // hbar order (hbar_a + hbar_b + degree)
      if (mono_deg(kb.fiber) != da) continue;
      if (ka.hbar + kb.hbar + da > max_order) continue;
      detail::moyal_pairings(ctx, ka, pa, kb, pb, [&](const WeylKey& k, const Polynomial& p) {
        if (k.fiber != 0 || k.hbar > max_order) return;
        out.set(k.hbar, out.coeff(k.hbar) + p);
      });
    }
  }
  if (precision_out) *precision_out = std::min(prec, out.precision());
  return out;
}

// d applied fiberwise: sum_k dx^k ^ d/dy^k
inline WeylElement delta(const WeylElement& a) {
  int r = leaf_count(a.vars());
  WeylElement out = WeylElement::zero(a.vars(), kPrecExact);
  out.fold_precision(a.precision());
  for (const auto& [k, c] : a.terms()) {
    for (int u = 0; u < r; ++u) {
      int e = mono_exp(k.fiber, u);
      if (e == 0 || (k.form & (1u << u))) continue;
      int s = std::popcount(k.form & ((1u << u) - 1)) & 1 ? -e : e;
      out.add(WeylKey{mono_quot(k.fiber, mono_unit(u)), k.hbar, k.form | (1u << u)},
              c.scaled(Scalar(s)));
    }
  }
  return out;
}

// the adjoint direction: sum_k y^k contraction of dx^k
inline WeylElement delta_star(const WeylElement& a) {
  int r = leaf_count(a.vars());
  WeylElement out = WeylElement::zero(a.vars(), kPrecExact);
  out.fold_precision(a.precision());
  for (const auto& [k, c] : a.terms()) {
    for (int u = 0; u < r; ++u) {
      if (!(k.form & (1u << u))) continue;
      int s = std::popcount(k.form & ((1u << u) - 1)) & 1 ? -1 : 1;
      out.add(WeylKey{mono_mul(k.fiber, mono_unit(u)), k.hbar, k.form & ~(1u << u)},
              c.scaled(Scalar(s)));
    }
  }
  return out;
}

// homotopy inverse: delta_star weighted by 1/(fiber degree + form degree),
// zero on the degree-(0,0) part
inline WeylElement delta_inv(const WeylElement& a) {
  int r = leaf_count(a.vars());
  WeylElement out = WeylElement::zero(a.vars(), kPrecExact);
  out.fold_precision(a.precision());
  for (const auto& [k, c] : a.terms()) {
    int denom = mono_deg(k.fiber) + form_degree(k);
    if (denom == 0) continue;
    for (int u = 0; u < r; ++u) {
      if (!(k.form & (1u << u))) continue;
      int s = std::popcount(k.form & ((1u << u) - 1)) & 1 ? -1 : 1;
      out.add(WeylKey{mono_mul(k.fiber, mono_unit(u)), k.hbar, k.form & ~(1u << u)},
              c.scaled(Scalar(make_rational(s, denom))));
    }
  }
  return out;
}

// degree-(0,0) projection (fiber and form both absent), all hbar orders
inline WeylElement projection_00(const WeylElement& a) {
  WeylElement out = WeylElement::zero(a.vars(), kPrecExact);
  out.fold_precision(a.precision());
  for (const auto& [k, c] : a.terms())
    if (k.fiber == 0 && k.form == 0) out.set(k, c);
  return out;
}

}  // namespace starjet
