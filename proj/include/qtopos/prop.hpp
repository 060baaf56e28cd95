#pragma once

// Propositional formulas over named projectors.
//
//   expr    := implies
//   implies := or [ "=>" implies ]        right-associative
//   or      := and { "|" and }            left-associative
//   and     := unary { "&" unary }        left-associative
//   unary   := "!" unary | primary
//   primary := ident | "(" expr ")"

#include <cctype>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qtopos/error.hpp"

namespace qtopos {

struct PropExpr {
  enum class Kind { Name, Not, And, Or, Implies };

  Kind kind = Kind::Name;
  std::string name;
  std::vector<PropExpr> args;

  static PropExpr leaf(std::string n) { return {Kind::Name, std::move(n), {}}; }
  static PropExpr negation(PropExpr e) { return {Kind::Not, {}, {std::move(e)}}; }
  static PropExpr binary(Kind k, PropExpr l, PropExpr r) { return {k, {}, {std::move(l), std::move(r)}}; }

  friend bool operator==(const PropExpr& a, const PropExpr& b) {
    return a.kind == b.kind && a.name == b.name && a.args == b.args;
  }
};

namespace detail {

class PropParser {
 public:
  explicit PropParser(std::string_view text) : text_(text) {}

  PropExpr parse() {
    PropExpr e = implies();
    skip_space();
    if (pos_ < text_.size()) error("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::SyntaxError, "column " + std::to_string(pos_ + 1) + ": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view token) {
    skip_space();
    if (text_.substr(pos_, token.size()) != token) return false;
    pos_ += token.size();
    return true;
  }

  PropExpr implies() {
    PropExpr lhs = disjunction();
    if (accept("=>")) return PropExpr::binary(PropExpr::Kind::Implies, std::move(lhs), implies());
    return lhs;
  }

  PropExpr disjunction() {
    PropExpr e = conjunction();
    while (accept("|")) e = PropExpr::binary(PropExpr::Kind::Or, std::move(e), conjunction());
    return e;
  }

  PropExpr conjunction() {
    PropExpr e = unary();
    while (accept("&")) e = PropExpr::binary(PropExpr::Kind::And, std::move(e), unary());
    return e;
  }

  PropExpr unary() {
    if (accept("!")) return PropExpr::negation(unary());
    return primary();
  }

  PropExpr primary() {
    skip_space();
    if (accept("(")) {
      PropExpr e = implies();
      if (!accept(")")) error("expected ')'");
      return e;
    }
    if (pos_ >= text_.size()) error("unexpected end of input");
    const char c = text_[pos_];
    if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '_')) error("expected a projector name");
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    return PropExpr::leaf(std::string(text_.substr(start, pos_ - start)));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline int precedence(PropExpr::Kind k) {
  switch (k) {
    case PropExpr::Kind::Implies: return 1;
    case PropExpr::Kind::Or: return 2;
    case PropExpr::Kind::And: return 3;
    case PropExpr::Kind::Not: return 4;
    case PropExpr::Kind::Name: return 5;
  }
  return 0;
}

inline std::string print(const PropExpr& e, int min_prec) {
  std::string out;
  switch (e.kind) {
    case PropExpr::Kind::Name: out = e.name; break;
    case PropExpr::Kind::Not: out = "!" + print(e.args[0], 4); break;
    case PropExpr::Kind::And: out = print(e.args[0], 3) + " & " + print(e.args[1], 4); break;
    case PropExpr::Kind::Or: out = print(e.args[0], 2) + " | " + print(e.args[1], 3); break;
    case PropExpr::Kind::Implies: out = print(e.args[0], 2) + " => " + print(e.args[1], 1); break;
  }
  return precedence(e.kind) < min_prec ? "(" + out + ")" : out;
}

}  // namespace detail

inline PropExpr parse_prop(std::string_view text) { return detail::PropParser(text).parse(); }

/// Minimal-parenthesis rendering; parse_prop(to_string(e)) == e.
inline std::string to_string(const PropExpr& e) { return detail::print(e, 0); }

inline void collect_names(const PropExpr& e, std::vector<std::string>& out) {
  if (e.kind == PropExpr::Kind::Name) out.push_back(e.name);
  for (const auto& a : e.args) collect_names(a, out);
}

/// Folds a formula into any Heyting algebra given by its operations.
template <typename T>
struct HeytingOps {
  std::function<T(const std::string&)> leaf;
  std::function<T(const T&, const T&)> meet;
  std::function<T(const T&, const T&)> join;
  std::function<T(const T&, const T&)> implies;
  std::function<T(const T&)> negate;
};

template <typename T>
T evaluate_prop(const PropExpr& e, const HeytingOps<T>& ops) {
  switch (e.kind) {
    case PropExpr::Kind::Name: return ops.leaf(e.name);
    case PropExpr::Kind::Not: return ops.negate(evaluate_prop(e.args[0], ops));
    case PropExpr::Kind::And: return ops.meet(evaluate_prop(e.args[0], ops), evaluate_prop(e.args[1], ops));
    case PropExpr::Kind::Or: return ops.join(evaluate_prop(e.args[0], ops), evaluate_prop(e.args[1], ops));
    case PropExpr::Kind::Implies: return ops.implies(evaluate_prop(e.args[0], ops), evaluate_prop(e.args[1], ops));
  }
  fail(ErrorKind::InvalidArgument, "malformed formula");
}

}  // namespace qtopos
