#pragma once

#include "autopl/expr.hpp"
#include "autopl/vocabulary.hpp"

#include <climits>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace autopl::expr
{

struct RepeatBound
{
  Token token;
  int min = 0;
  int max = INT_MAX;
};

struct ConstraintSet
{
  std::size_t min_len = 4;
  std::size_t max_len = 40;
  bool no_all_const_children = true;
  bool no_inverse_unary_child = true;
  bool no_nested_trig = true;
  std::vector<RepeatBound> repeat;
  double soft_penalty_weight = 0.5;

  void validate() const
  {
    if (min_len < 1 || min_len > max_len)
      throw std::invalid_argument("constraint lengths need 1 <= min_len <= max_len");
    if (!(soft_penalty_weight >= 0.0 && soft_penalty_weight <= 1.0))
      throw std::invalid_argument("soft penalty weight must lie in [0, 1]");
    for (const auto& r : repeat)
      if (r.min < 0 || r.min > r.max)
        throw std::invalid_argument("repeat bound needs 0 <= min <= max");
  }
};

inline bool are_inverse(Op a, Op b)
{
  return (a == Op::Log10 && b == Op::Exp) || (a == Op::Exp && b == Op::Log10) || (a == Op::Sqrt && b == Op::Square) ||
         (a == Op::Square && b == Op::Sqrt);
}

// Incremental view of a partial pre-order sequence: open operators, the
// parent/sibling of the next position, and repeat counts.
class PrefixState
{
public:
  struct Frame
  {
    Token op;
    int filled = 0;
    std::optional<Token> first_child;
  };

  explicit PrefixState(const ConstraintSet& cs) : cs_(&cs), counts_(cs.repeat.size(), 0) {}

  void push(const Token& t)
  {
    if (complete())
      throw std::logic_error("push onto a complete sequence");
    ++length_;
    open_slots_ += t.arity() - 1;
    for (std::size_t i = 0; i < cs_->repeat.size(); ++i)
      if (cs_->repeat[i].token == t)
        ++counts_[i];
    if (!frames_.empty()) {
      auto& top = frames_.back();
      if (top.filled++ == 0)
        top.first_child = t;
    }
    if (t.arity() > 0) {
      frames_.push_back({t, 0, std::nullopt});
      if (is_trig(t.op))
        ++trig_open_;
    }
    while (!frames_.empty() && frames_.back().filled == frames_.back().op.arity()) {
      if (is_trig(frames_.back().op.op))
        --trig_open_;
      frames_.pop_back();
    }
  }

  std::size_t length() const { return length_; }
  long open_slots() const { return open_slots_; }
  bool complete() const { return open_slots_ == 0; }
  bool under_trig() const { return trig_open_ > 0; }

  std::optional<Token> parent() const
  {
    if (frames_.empty())
      return std::nullopt;
    return frames_.back().op;
  }
  // Already generated sibling of the next position, if any.
  std::optional<Token> sibling() const
  {
    if (frames_.empty() || frames_.back().filled == 0)
      return std::nullopt;
    return frames_.back().first_child;
  }

  bool allows(const Token& t) const
  {
    if (complete())
      return false;
    const ConstraintSet& cs = *cs_;
    const std::size_t next_len = length_ + 1;
    const long next_open = open_slots_ - 1 + t.arity();
    if (next_len + static_cast<std::size_t>(next_open) > cs.max_len)
      return false;
    if (next_open == 0 && next_len < cs.min_len)
      return false;

    if (cs.no_all_const_children && is_constant_leaf(t.op)) {
      if (frames_.empty())
        return false; // whole expression would be a single constant
      const auto& top = frames_.back();
      if (top.op.arity() == 1)
        return false;
      if (top.filled == top.op.arity() - 1) {
        const bool others_const = top.filled == 0 || (top.first_child && is_constant_leaf(top.first_child->op));
        if (others_const)
          return false;
      }
    }
    if (cs.no_inverse_unary_child && !frames_.empty() && are_inverse(frames_.back().op.op, t.op))
      return false;
    if (cs.no_nested_trig && is_trig(t.op) && under_trig())
      return false;
    for (std::size_t i = 0; i < cs.repeat.size(); ++i)
      if (cs.repeat[i].token == t && counts_[i] + 1 > cs.repeat[i].max)
        return false;
    return true;
  }

private:
  const ConstraintSet* cs_;
  std::size_t length_ = 0;
  long open_slots_ = 1;
  int trig_open_ = 0;
  std::vector<Frame> frames_;
  std::vector<int> counts_;
};

struct NextTokenMask
{
  std::vector<char> allowed;

  bool dead_end() const
  {
    for (char a : allowed)
      if (a)
        return false;
    return true;
  }
};

inline NextTokenMask valid_next_tokens(const PrefixState& state, const Vocabulary& vocab)
{
  NextTokenMask m;
  m.allowed.resize(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i)
    m.allowed[i] = state.allows(vocab[i]) ? 1 : 0;
  return m;
}

inline NextTokenMask valid_next_tokens(std::span<const Token> prefix, const Vocabulary& vocab, const ConstraintSet& cs)
{
  PrefixState state(cs);
  for (const auto& t : prefix)
    state.push(t);
  return valid_next_tokens(state, vocab);
}

// Multiplicative reward factor (1 - w)^deficit over all soft repeat minima.
inline double repeat_penalty(std::span<const Token> tokens, const ConstraintSet& cs)
{
  long deficit = 0;
  for (const auto& r : cs.repeat) {
    const auto have = static_cast<long>(count_token(tokens, r.token));
    if (have < r.min)
      deficit += r.min - have;
  }
  return deficit == 0 ? 1.0 : std::pow(1.0 - cs.soft_penalty_weight, static_cast<double>(deficit));
}

} // namespace autopl::expr
