#pragma once

// Recursive-descent parser from infix text to pre-order tokens. Accepts the
// notation to_infix emits plus ^2 / ^3 and unary minus. Every number becomes a
// literal token, so the result has no constant placeholders.

#include "autopl/expr.hpp"

#include <cctype>
#include <stdexcept>
#include <string>
#include <vector>

namespace autopl::expr
{

class InfixParser
{
public:
  InfixParser(std::string text, std::vector<std::string> names) : s_(std::move(text)), names_(std::move(names)) {}

  ExpressionTree parse()
  {
    auto tokens = parse_sum();
    skip();
    if (pos_ != s_.size())
      throw std::invalid_argument("trailing input at " + std::to_string(pos_) + " in '" + s_ + "'");
    return {tokens, {}};
  }

private:
  using Tokens = std::vector<Token>;

  static Tokens binary(Op op, const Tokens& a, const Tokens& b)
  {
    Tokens out{Token::make(op)};
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
  }

  void skip()
  {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }
  bool eat(char c)
  {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Tokens parse_sum()
  {
    Tokens lhs = parse_product();
    for (;;) {
      if (eat('+'))
        lhs = binary(Op::Add, lhs, parse_product());
      else if (eat('-'))
        lhs = binary(Op::Sub, lhs, parse_product());
      else
        return lhs;
    }
  }

  Tokens parse_product()
  {
    Tokens lhs = parse_unary();
    for (;;) {
      if (eat('*'))
        lhs = binary(Op::Mul, lhs, parse_unary());
      else if (eat('/'))
        lhs = binary(Op::Div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  Tokens parse_unary()
  {
    if (eat('-'))
      return binary(Op::Mul, {Token::literal(-1.0)}, parse_unary());
    return parse_power();
  }

  Tokens parse_power()
  {
    Tokens base = parse_primary();
    if (eat('^')) {
      skip();
      const char c = pos_ < s_.size() ? s_[pos_++] : '\0';
      if (c == '2')
        return wrap(Op::Square, base);
      if (c == '3')
        return wrap(Op::Cube, base);
      throw std::invalid_argument("only ^2 and ^3 are supported");
    }
    return base;
  }

  static Tokens wrap(Op op, const Tokens& inner)
  {
    Tokens out{Token::make(op)};
    out.insert(out.end(), inner.begin(), inner.end());
    return out;
  }

  Tokens parse_primary()
  {
    skip();
    if (eat('(')) {
      Tokens inner = parse_sum();
      if (!eat(')'))
        throw std::invalid_argument("missing ')' in '" + s_ + "'");
      return inner;
    }
    if (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      std::size_t used = 0;
      double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      return {Token::literal(v)};
    }
    std::string ident;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ident.push_back(s_[pos_++]);
    if (ident.empty())
      throw std::invalid_argument("unexpected character at " + std::to_string(pos_) + " in '" + s_ + "'");
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == ident)
        return {Token::variable(static_cast<int>(i))};
    auto op = op_from_name(ident);
    if (!op || arity(*op) != 1)
      throw std::invalid_argument("unknown identifier '" + ident + "'");
    if (!eat('('))
      throw std::invalid_argument("expected '(' after " + ident);
    Tokens inner = parse_sum();
    if (!eat(')'))
      throw std::invalid_argument("missing ')' after " + ident);
    return wrap(*op, inner);
  }

  std::string s_;
  std::vector<std::string> names_;
  std::size_t pos_ = 0;
};

inline ExpressionTree parse_infix(const std::string& text, const std::vector<std::string>& names)
{
  return InfixParser(text, names).parse();
}

} // namespace autopl::expr
