#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <tuple>
#include <vector>

#include "starjet/polynomial.hpp"

namespace starjet {

namespace detail {

// Full multivariate division remainder against `basis` (graded-lex).
inline Polynomial divide_remainder(Polynomial work, const std::vector<Polynomial>& basis) {
  Polynomial rem = Polynomial::zero(work.vars(), work.precision());
  while (!work.is_zero()) {
    auto [lt_key, lt_coeff] = work.lead();
    bool reduced = false;
    for (const auto& g : basis) {
      auto [g_key, g_coeff] = g.lead();
      if (!mono_divides(g_key, lt_key)) continue;
      std::uint64_t q = mono_quot(lt_key, g_key);
      work = work - g.mul_monomial(q, lt_coeff / g_coeff);
      reduced = true;
      break;
    }
    if (!reduced) {
      rem = rem + Polynomial::monomial(work.vars(), mono_unpack(lt_key, work.vars()->size()),
                                       lt_coeff, work.precision());
      work = work - Polynomial::monomial(work.vars(), mono_unpack(lt_key, work.vars()->size()),
                                         lt_coeff, work.precision());
    }
  }
  return rem;
}

inline Polynomial make_monic(const Polynomial& p) {
  return p.scaled(p.lead().second.inverse());
}

// Buchberger with ascending-lcm pair selection; pairs whose lcm degree
// exceeds `degree_bound` are discarded, which yields a basis giving unique
// normal forms on the degree range [0, degree_bound] for homogeneous ideals
// (and exactly for principal ones, where no pairs arise).
inline std::vector<Polynomial> truncated_buchberger(const std::vector<Polynomial>& gens,
                                                    int degree_bound) {
  std::vector<Polynomial> basis;
  for (const auto& g : gens) {
    if (g.is_zero()) throw Error::precondition("ideal generator is zero");
    basis.push_back(make_monic(g));
  }
  // (lcm degree, i, j) processed in ascending order
  std::set<std::tuple<int, int, int>> pairs;
  auto push_pairs = [&](int j) {
    for (int i = 0; i < j; ++i) {
      std::uint64_t l = mono_lcm(basis[i].lead().first, basis[j].lead().first);
      if (mono_deg(l) > degree_bound) continue;
      if (l == mono_mul(basis[i].lead().first, basis[j].lead().first)) continue;  // coprime
      pairs.insert({mono_deg(l), i, j});
    }
  };
  for (int j = 0; j < static_cast<int>(basis.size()); ++j) push_pairs(j);
  while (!pairs.empty()) {
    auto [d, i, j] = *pairs.begin();
    pairs.erase(pairs.begin());
    std::uint64_t l = mono_lcm(basis[i].lead().first, basis[j].lead().first);
    Polynomial s = basis[i].mul_monomial(mono_quot(l, basis[i].lead().first), Scalar(1)) -
                   basis[j].mul_monomial(mono_quot(l, basis[j].lead().first), Scalar(1));
    Polynomial rem = divide_remainder(s, basis);
    if (!rem.is_zero()) {
      basis.push_back(make_monic(rem));
      push_pairs(static_cast<int>(basis.size()) - 1);
    }
  }
  // minimalize
  std::vector<Polynomial> minimal;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    bool redundant = false;
    for (std::size_t j = 0; j < basis.size(); ++j) {
      if (i == j) continue;
      if (mono_divides(basis[j].lead().first, basis[i].lead().first) &&
          (basis[j].lead().first != basis[i].lead().first || j < i)) {
        redundant = true;
        break;
      }
    }
    if (!redundant) minimal.push_back(basis[i]);
  }
  // fully reduce tails; sort by leading monomial for a canonical result
  std::vector<Polynomial> reduced;
  for (std::size_t i = 0; i < minimal.size(); ++i) {
    std::vector<Polynomial> others;
    for (std::size_t j = 0; j < minimal.size(); ++j)
      if (j != i) others.push_back(minimal[j]);
    Polynomial r = divide_remainder(minimal[i], others);
    if (!r.is_zero()) reduced.push_back(make_monic(r));
  }
  std::sort(reduced.begin(), reduced.end(),
            [](const Polynomial& a, const Polynomial& b) { return a.lead().first < b.lead().first; });
  return reduced;
}

}  // namespace detail

// Degree-truncated Groebner basis of <gens> (graded-lex order): S-pairs whose
// lcm exceeds `degree_bound` are discarded.  Division by the result is a
// sound membership test for elements of degree <= degree_bound when the
// generators are homogeneous (degree filtration is ideal-compatible), and
// unconditionally for principal ideals.
inline std::vector<Polynomial> truncated_buchberger(const std::vector<Polynomial>& gens,
                                                    int degree_bound) {
  if (gens.empty()) return {};
  int max_deg = 0;
  for (const auto& g : gens) {
    if (g.is_zero()) throw Error::precondition("ideal generator is zero");
    if (!g.exact()) throw Error::truncation("ideal generators must be exact polynomials");
    max_deg = std::max(max_deg, g.degree());
  }
  if (degree_bound < max_deg)
    throw Error::precondition("truncated_buchberger: degree bound " +
                              std::to_string(degree_bound) + " is below generator degree " +
                              std::to_string(max_deg));
  return detail::truncated_buchberger(gens, degree_bound);
}

// An ideal <g_1, ..., g_s>^power with cached truncated Groebner bases.
class IdealSpec {
public:
  IdealSpec() = default;
  explicit IdealSpec(std::vector<Polynomial> gens, int power = 1)
      : gens_(std::move(gens)), power_(power), state_(std::make_shared<State>()) {
    if (power_ < 1) throw Error::precondition("ideal power must be >= 1");
    for (const auto& g : gens_) {
      if (g.is_zero()) throw Error::precondition("ideal generator is zero");
      if (!g.exact()) throw Error::truncation("ideal generators must be exact polynomials");
      if (!vars_)
        vars_ = g.vars();
      else if (!same_table(vars_, g.vars()))
        throw Error::context("ideal generators over different variable tables");
    }
  }

  const std::vector<Polynomial>& generators() const { return gens_; }
  int power() const { return power_; }
  bool trivial() const { return gens_.empty(); }
  const VarTablePtr& vars() const { return vars_; }

  // all products of `power` generators, deduplicated
  std::vector<Polynomial> expanded_generators() const {
    std::vector<Polynomial> out;
    if (gens_.empty()) return out;
    std::vector<int> pick(power_, 0);
    for (;;) {
      Polynomial prod = gens_[pick[0]];
      for (int i = 1; i < power_; ++i) prod = prod * gens_[pick[i]];
      out.push_back(prod);
      int i = power_ - 1;
      while (i >= 0 && pick[i] == static_cast<int>(gens_.size()) - 1) --i;
      if (i < 0) break;
      ++pick[i];
      for (int j = i + 1; j < power_; ++j) pick[j] = pick[i];  // nondecreasing picks
    }
    std::sort(out.begin(), out.end(), [](const Polynomial& a, const Polynomial& b) {
      return a.lead().first < b.lead().first;
    });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  bool homogeneous() const {
    for (const auto& g : gens_) {
      if (g.is_zero()) continue;
      int d = mono_deg(g.terms().front().first);
      for (const auto& t : g.terms())
        if (mono_deg(t.first) != d) return false;
    }
    return true;
  }

  const std::vector<Polynomial>& basis(int degree_bound) const {
    if (trivial()) {
      static const std::vector<Polynomial> empty;
      return empty;
    }
    std::lock_guard<std::mutex> lock(state_->mu);
    auto it = state_->bases.find(degree_bound);
    if (it == state_->bases.end())
      it = state_->bases.emplace(degree_bound,
                                 detail::truncated_buchberger(expanded_generators(), degree_bound))
               .first;
    return it->second;
  }

private:
  struct State {
    std::mutex mu;
    std::map<int, std::vector<Polynomial>> bases;
  };
  std::vector<Polynomial> gens_;
  int power_ = 1;
  VarTablePtr vars_;
  std::shared_ptr<State> state_;
};

// IdealSpec for <gens>^(m+1), the finite-order model of functions flat to
// order m along the common zero set of gens.
inline IdealSpec ideal_power(std::vector<Polynomial> gens, int order_m) {
  if (order_m < 0) throw Error::precondition("subset order must be >= 0");
  return IdealSpec(std::move(gens), order_m + 1);
}

inline Polynomial normal_form(const Polynomial& p, const IdealSpec& ideal, int degree_bound) {
  if (ideal.trivial() || p.is_zero()) return p;
  if (!same_table(p.vars(), ideal.vars()))
    throw Error::context("normal_form: polynomial and ideal over different variable tables");
  if (p.degree() > degree_bound)
    throw Error::truncation("normal_form: degree " + std::to_string(p.degree()) +
                            " exceeds basis bound " + std::to_string(degree_bound));
  if (!p.exact() && !ideal.homogeneous())
    throw Error::truncation(
        "normal_form: finite-precision input needs a homogeneous ideal basis; raise the degree "
        "bound to keep the input exact");
  return detail::divide_remainder(p, ideal.basis(degree_bound));
}

}  // namespace starjet
