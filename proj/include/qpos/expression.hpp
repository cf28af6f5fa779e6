#pragma once

// Weight expressions: sums of products of sin/cos of integer combinations of
// the torus coordinates.
//
//   expression := ['+'|'-'] term { ('+'|'-') term }
//   term       := factor { '*' factor }
//   factor     := number | ('sin'|'cos') '(' linear ')'
//   linear     := ['+'|'-'] lterm { ('+'|'-') lterm }
//   lterm      := [integer '*'] coord
//   coord      := ('x'|'y') index            (index 1..n)
//
// Trig arguments are measured in angle units: a coordinate x_a contributes
// 2*pi*x_a / period_a, so every expression is periodic on the torus and
// "cos(x1)" is literally cos(x1) when the period is 2*pi.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qpos/error.hpp"
#include "qpos/fields.hpp"

namespace qpos {

struct TrigFactor {
  bool is_sin = false;
  std::vector<std::pair<int, int>> wave;  // (real axis, integer multiplier)
};

struct ExpressionTerm {
  double coefficient = 1.0;
  std::vector<TrigFactor> factors;
};

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : text_(text) {}

  std::vector<ExpressionTerm> parse() {
    std::vector<ExpressionTerm> terms;
    skip_space();
    if (at_end()) fail("empty expression");
    double sign = read_sign();
    terms.push_back(parse_term(sign));
    while (true) {
      skip_space();
      if (at_end()) break;
      if (peek() != '+' && peek() != '-') fail("expected '+' or '-'");
      sign = read_sign();
      terms.push_back(parse_term(sign));
    }
    return terms;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(Errc::parse_error, why + " at position " + std::to_string(pos_) + " in '" + std::string(text_) + "'");
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  double read_sign() {
    double sign = 1.0;
    skip_space();
    while (!at_end() && (peek() == '+' || peek() == '-')) {
      if (peek() == '-') sign = -sign;
      ++pos_;
      skip_space();
    }
    return sign;
  }

  ExpressionTerm parse_term(double sign) {
    ExpressionTerm term;
    term.coefficient = sign;
    parse_factor(term);
    while (true) {
      skip_space();
      if (at_end() || peek() != '*') break;
      ++pos_;
      parse_factor(term);
    }
    return term;
  }

  void parse_factor(ExpressionTerm& term) {
    skip_space();
    if (at_end()) fail("expected a factor");
    if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
      term.coefficient *= parse_number();
      return;
    }
    const std::string_view rest = text_.substr(pos_);
    TrigFactor factor;
    if (rest.starts_with("sin")) {
      factor.is_sin = true;
    } else if (!rest.starts_with("cos")) {
      fail("expected a number, sin or cos");
    }
    pos_ += 3;
    skip_space();
    if (at_end() || peek() != '(') fail("expected '('");
    ++pos_;
    factor.wave = parse_linear();
    skip_space();
    if (at_end() || peek() != ')') fail("expected ')'");
    ++pos_;
    term.factors.push_back(std::move(factor));
  }

  double parse_number() {
    double value = 0.0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || !std::isfinite(value)) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return value;
  }

  std::vector<std::pair<int, int>> parse_linear() {
    std::vector<std::pair<int, int>> wave;
    int sign = read_sign() < 0 ? -1 : 1;
    while (true) {
      skip_space();
      int multiplier = 1;
      if (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
        multiplier = parse_integer();
        skip_space();
        if (at_end() || peek() != '*') fail("expected '*' after integer multiplier");
        ++pos_;
        skip_space();
      }
      const int axis = parse_coordinate();
      bool merged = false;
      for (auto& [a, m] : wave) {
        if (a == axis) {
          m += sign * multiplier;
          merged = true;
        }
      }
      if (!merged) wave.emplace_back(axis, sign * multiplier);
      skip_space();
      if (at_end() || (peek() != '+' && peek() != '-')) break;
      sign = read_sign() < 0 ? -1 : 1;
    }
    std::erase_if(wave, [](const auto& entry) { return entry.second == 0; });
    return wave;
  }

  int parse_integer() {
    int value = 0;
    const char* begin = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(begin, text_.data() + text_.size(), value);
    if (ec != std::errc()) fail("malformed integer");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return value;
  }

  int parse_coordinate() {
    if (at_end() || (peek() != 'x' && peek() != 'y')) fail("expected coordinate x<j> or y<j>");
    const int offset = peek() == 'x' ? 0 : 1;
    ++pos_;
    if (at_end() || !std::isdigit(static_cast<unsigned char>(peek()))) fail("expected coordinate index");
    const int index = parse_integer();
    if (index < 1) fail("coordinate indices start at 1");
    return 2 * (index - 1) + offset;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

class Expression {
 public:
  Expression() = default;
  explicit Expression(std::vector<ExpressionTerm> terms) : terms_(std::move(terms)) {}

  static Expression parse(std::string_view text) { return Expression(detail::ExpressionParser(text).parse()); }

  const std::vector<ExpressionTerm>& terms() const noexcept { return terms_; }

  // Smallest complex dimension whose coordinates cover every referenced axis.
  int required_complex_dim() const {
    int max_axis = -1;
    for (const auto& term : terms_) {
      for (const auto& factor : term.factors) {
        for (const auto& [axis, m] : factor.wave) max_axis = std::max(max_axis, axis);
      }
    }
    return max_axis < 0 ? 0 : max_axis / 2 + 1;
  }

  // angles[a] = 2*pi*x_a / period_a
  double evaluate(std::span<const double> angles) const {
    double total = 0.0;
    for (const auto& term : terms_) {
      double value = term.coefficient;
      for (const auto& factor : term.factors) {
        double arg = 0.0;
        for (const auto& [axis, m] : factor.wave) arg += m * angles[static_cast<std::size_t>(axis)];
        value *= factor.is_sin ? std::sin(arg) : std::cos(arg);
      }
      total += value;
    }
    return total;
  }

  ScalarField sample(const TorusGeometry& geometry) const {
    if (required_complex_dim() > geometry.complex_dim()) {
      throw Error(Errc::invalid_argument, "expression references coordinates beyond the torus dimension");
    }
    const auto& periods = geometry.periods();
    return ScalarField::sample(geometry, [&](std::span<const double> x) {
      double angles[2 * kMaxComplexDim];
      for (std::size_t a = 0; a < x.size(); ++a) angles[a] = 2.0 * std::numbers::pi * x[a] / periods[a];
      return evaluate(std::span<const double>(angles, x.size()));
    });
  }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (std::size_t t = 0; t < terms_.size(); ++t) {
      const auto& term = terms_[t];
      double c = term.coefficient;
      if (t == 0) {
        if (c < 0) out += "-";
      } else {
        out += c < 0 ? " - " : " + ";
      }
      c = std::abs(c);
      out += detail::format_number(c);
      for (const auto& factor : term.factors) {
        out += factor.is_sin ? "*sin(" : "*cos(";
        for (std::size_t i = 0; i < factor.wave.size(); ++i) {
          auto [axis, m] = factor.wave[i];
          if (i > 0) out += m < 0 ? "-" : "+";
          else if (m < 0) out += "-";
          if (std::abs(m) != 1) out += std::to_string(std::abs(m)) + "*";
          out += TorusGeometry::axis_name(axis);
        }
        if (factor.wave.empty()) out += "0*x1";
        out += ")";
      }
    }
    return out;
  }

 private:
  std::vector<ExpressionTerm> terms_;
};

}  // namespace qpos
