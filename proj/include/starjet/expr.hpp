#pragma once

#include <cctype>
#include <string>
#include <string_view>

#include "starjet/hseries.hpp"
#include "starjet/polynomial.hpp"

namespace starjet {

// Recursive-descent parser for polynomial expressions; the grammar accepts
// everything the canonical printers emit plus ordinary parenthesized
// arithmetic:
//
//   expr   := ['-'] term (('+' | '-') term)*
//   term   := factor ('*' factor)*
//   factor := base ('^' INT)?
//   base   := INT ('/' INT)? | 'i' | 'hbar' | IDENT | '(' expr ')'
//
// Errors carry 1-based line/column positions.
class ExprParser {
public:
  ExprParser(std::string_view text, VarTablePtr vars, bool allow_hbar, int line = 1,
             int col_offset = 0)
      : text_(text), vars_(std::move(vars)), allow_hbar_(allow_hbar), line_(line),
        col_offset_(col_offset) {}

  HbarSeries parse_series() {
    HbarSeries s = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input", pos_);
    return s;
  }

  Polynomial parse_polynomial() {
    HbarSeries s = parse_series();
    if (s.max_order() > 0) fail("hbar is not allowed in this position", 0);
    return s.coeff(0);
  }

private:
  HbarSeries parse_expr() {
    skip_ws();
    bool neg = false;
    if (peek() == '-') {
      neg = true;
      ++pos_;
    }
    HbarSeries acc = parse_term();
    if (neg) acc = -acc;
    for (;;) {
      skip_ws();
      char c = peek();
      if (c != '+' && c != '-') break;
      ++pos_;
      HbarSeries t = parse_term();
      acc = (c == '+') ? acc + t : acc - t;
    }
    return acc;
  }

  HbarSeries parse_term() {
    HbarSeries acc = parse_factor();
    for (;;) {
      skip_ws();
      if (peek() != '*') break;
      ++pos_;
      acc = acc * parse_factor();
    }
    return acc;
  }

  HbarSeries parse_factor() {
    HbarSeries base = parse_base();
    skip_ws();
    if (peek() == '^') {
      ++pos_;
      skip_ws();
      std::size_t at = pos_;
      long e = parse_int_long();
      if (e < 0 || e > kMaxExp) fail("exponent out of range", at);
      HbarSeries acc(Polynomial::constant(vars_, Scalar(1)));
      for (long k = 0; k < e; ++k) acc = acc * base;
      return acc;
    }
    return base;
  }

  HbarSeries parse_base() {
    skip_ws();
    std::size_t at = pos_;
    char c = peek();
    if (c == '(') {
      ++pos_;
      HbarSeries inner = parse_expr();
      skip_ws();
      if (peek() != ')') fail("expected ')'", pos_);
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      Rational num(parse_digits(), 10);
      skip_ws();
      if (peek() == '/') {
        ++pos_;
        skip_ws();
        std::size_t dat = pos_;
        if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected denominator", pos_);
        Rational den(parse_digits(), 10);
        if (den == 0) fail("zero denominator", dat);
        num /= den;
      }
      num.canonicalize();
      return HbarSeries(Polynomial::constant(vars_, Scalar(num)));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string name = parse_ident();
      if (name == "i") return HbarSeries(Polynomial::constant(vars_, Scalar::i()));
      if (name == "hbar") {
        if (!allow_hbar_) fail("hbar is not allowed in this position", at);
        return HbarSeries(Polynomial::constant(vars_, Scalar(1))).shifted(1);
      }
      int idx = vars_->find(name);
      if (idx < 0) fail("unknown variable '" + name + "'", at);
      return HbarSeries(Polynomial::variable(vars_, idx));
    }
    if (c == '\0') fail("unexpected end of expression", at);
    fail(std::string("unexpected character '") + c + "'", at);
    return {};  // unreachable
  }

  std::string parse_digits() {
    std::string s;
    while (std::isdigit(static_cast<unsigned char>(peek()))) s += text_[pos_++];
    return s;
  }
  long parse_int_long() {
    if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected integer", pos_);
    return std::stol(parse_digits());
  }
  std::string parse_ident() {
    std::string s;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') s += text_[pos_++];
    return s;
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw Error::schema("parse error at line " + std::to_string(line_) + ", column " +
                        std::to_string(col_offset_ + static_cast<int>(at) + 1) + ": " + msg);
  }

  std::string_view text_;
  VarTablePtr vars_;
  bool allow_hbar_;
  int line_;
  int col_offset_;
  std::size_t pos_ = 0;
};

inline Polynomial parse_polynomial(std::string_view text, const VarTablePtr& vars, int line = 1,
                                   int col_offset = 0) {
  return ExprParser(text, vars, false, line, col_offset).parse_polynomial();
}

inline HbarSeries parse_hbar_series(std::string_view text, const VarTablePtr& vars, int line = 1,
                                    int col_offset = 0) {
  return ExprParser(text, vars, true, line, col_offset).parse_series();
}

}  // namespace starjet
