#pragma once

#include "autopl/expr.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace autopl::expr
{

struct VocabularyOptions
{
  std::vector<Op> operators = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Log10, Op::Exp, Op::Sin, Op::Cos, Op::Square};
  bool constant_placeholder = true;
  std::vector<double> literals = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
};

// The ordered action space a policy samples from.
class Vocabulary
{
public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<Token> tokens, std::vector<std::string> variable_names = {})
      : tokens_(std::move(tokens)), names_(std::move(variable_names))
  {
  }

  static Vocabulary make(std::size_t n_variables, const VocabularyOptions& opt = {},
                         std::vector<std::string> variable_names = {})
  {
    std::vector<Token> tokens;
    for (Op op : opt.operators) {
      if (arity(op) == 0)
        throw std::invalid_argument("operator list may only contain unary or binary operators");
      tokens.push_back(Token::make(op));
    }
    for (std::size_t i = 0; i < n_variables; ++i)
      tokens.push_back(Token::variable(static_cast<int>(i)));
    if (opt.constant_placeholder)
      tokens.push_back(Token::constant());
    for (double v : opt.literals)
      tokens.push_back(Token::literal(v));
    if (variable_names.empty())
      variable_names = default_names(n_variables);
    return Vocabulary(std::move(tokens), std::move(variable_names));
  }

  std::size_t size() const { return tokens_.size(); }
  const Token& operator[](std::size_t i) const { return tokens_[i]; }
  const std::vector<Token>& tokens() const { return tokens_; }
  const std::vector<std::string>& variable_names() const { return names_; }

  std::optional<std::size_t> index_of(const Token& t) const
  {
    for (std::size_t i = 0; i < tokens_.size(); ++i)
      if (tokens_[i] == t)
        return i;
    return std::nullopt;
  }

  std::size_t require_index(const Token& t) const
  {
    auto i = index_of(t);
    if (!i)
      throw std::invalid_argument(std::string("token '") + op_name(t.op) + "' is not in the vocabulary");
    return *i;
  }

private:
  std::vector<Token> tokens_;
  std::vector<std::string> names_;
};

} // namespace autopl::expr
