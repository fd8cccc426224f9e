#include "autopl/constraints.hpp"
#include "support/constraint_checker.hpp"

#include <gtest/gtest.h>

#include <random>

namespace
{

using namespace autopl::expr;

Token op(Op o) { return Token::make(o); }
Token x(int i) { return Token::variable(i); }

bool allowed(const NextTokenMask& m, const Vocabulary& v, const Token& t) { return m.allowed[v.require_index(t)] != 0; }

TEST(ValidNextTokens, EmptyPrefixAllowsOperatorsAndVariables)
{
  auto vocab = Vocabulary::make(2);
  ConstraintSet cs;
  auto m = valid_next_tokens(std::vector<Token>{}, vocab, cs);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (is_constant_leaf(vocab[i].op) || vocab[i].op == Op::Var)
      continue; // a lone leaf cannot reach min_len
    EXPECT_TRUE(m.allowed[i]) << op_name(vocab[i].op);
  }
  cs.min_len = 1;
  m = valid_next_tokens(std::vector<Token>{}, vocab, cs);
  EXPECT_TRUE(allowed(m, vocab, x(0)));
  EXPECT_FALSE(allowed(m, vocab, Token::constant()));
}

TEST(ValidNextTokens, NestedTrigMasked)
{
  auto vocab = Vocabulary::make(1);
  ConstraintSet cs;
  auto m = valid_next_tokens(std::vector{op(Op::Sin), op(Op::Add)}, vocab, cs);
  EXPECT_FALSE(allowed(m, vocab, op(Op::Sin)));
  EXPECT_FALSE(allowed(m, vocab, op(Op::Cos)));
  EXPECT_TRUE(allowed(m, vocab, op(Op::Log10)));
  // once the trig subtree closes, trig is available again
  m = valid_next_tokens(std::vector{op(Op::Add), op(Op::Sin), x(0)}, vocab, cs);
  EXPECT_TRUE(allowed(m, vocab, op(Op::Cos)));
}

TEST(ValidNextTokens, InverseUnaryMasked)
{
  auto vocab = Vocabulary::make(1);
  ConstraintSet cs;
  auto m = valid_next_tokens(std::vector{op(Op::Log10)}, vocab, cs);
  EXPECT_FALSE(allowed(m, vocab, op(Op::Exp)));
  EXPECT_TRUE(allowed(m, vocab, op(Op::Log10)));
  m = valid_next_tokens(std::vector{op(Op::Exp)}, vocab, cs);
  EXPECT_FALSE(allowed(m, vocab, op(Op::Log10)));
}

TEST(ValidNextTokens, AllConstantChildrenMasked)
{
  auto vocab = Vocabulary::make(1);
  ConstraintSet cs;
  auto m = valid_next_tokens(std::vector{op(Op::Add), op(Op::Mul), Token::constant()}, vocab, cs);
  EXPECT_FALSE(allowed(m, vocab, Token::constant()));
  EXPECT_FALSE(allowed(m, vocab, Token::literal(3)));
  EXPECT_TRUE(allowed(m, vocab, x(0)));
  // unary child can never be a constant
  m = valid_next_tokens(std::vector{op(Op::Add), x(0), op(Op::Exp)}, vocab, cs);
  EXPECT_FALSE(allowed(m, vocab, Token::literal(2)));
}

TEST(ValidNextTokens, LengthBounds)
{
  auto vocab = Vocabulary::make(1);
  ConstraintSet cs;
  cs.min_len = 4;
  cs.max_len = 5;
  // [+, x0] + leaf would finish at length 3 < 4
  auto m = valid_next_tokens(std::vector{op(Op::Add), x(0)}, vocab, cs);
  EXPECT_FALSE(allowed(m, vocab, x(0)));
  EXPECT_TRUE(allowed(m, vocab, op(Op::Log10)));
  // [+, +, x0] : a binary now needs at least 6 tokens total
  m = valid_next_tokens(std::vector{op(Op::Add), op(Op::Add), x(0)}, vocab, cs);
  EXPECT_FALSE(allowed(m, vocab, op(Op::Mul)));
  EXPECT_TRUE(allowed(m, vocab, x(0)));
}

TEST(ValidNextTokens, RepeatMaxMasked)
{
  auto vocab = Vocabulary::make(2);
  ConstraintSet cs;
  cs.repeat.push_back({x(1), 0, 1});
  auto m = valid_next_tokens(std::vector{op(Op::Add), x(1)}, vocab, cs);
  EXPECT_FALSE(allowed(m, vocab, x(1)));
  EXPECT_TRUE(allowed(m, vocab, op(Op::Log10)));
}

TEST(ValidNextTokens, CompleteSequenceIsDeadEnd)
{
  auto vocab = Vocabulary::make(1);
  ConstraintSet cs;
  cs.min_len = 1;
  EXPECT_TRUE(valid_next_tokens(std::vector{x(0)}, vocab, cs).dead_end());
}

TEST(PrefixState, ParentAndSibling)
{
  ConstraintSet cs;
  PrefixState s(cs);
  EXPECT_FALSE(s.parent());
  s.push(op(Op::Add));
  EXPECT_EQ(s.parent()->op, Op::Add);
  EXPECT_FALSE(s.sibling());
  s.push(op(Op::Sin));
  EXPECT_EQ(s.parent()->op, Op::Sin);
  s.push(x(0));
  EXPECT_EQ(s.parent()->op, Op::Add);
  EXPECT_EQ(s.sibling()->op, Op::Sin);
  s.push(x(1));
  EXPECT_TRUE(s.complete());
}

TEST(RepeatPenalty, Examples)
{
  ConstraintSet cs;
  cs.soft_penalty_weight = 0.5;
  cs.repeat = {{x(1), 1, 10}};
  EXPECT_DOUBLE_EQ(repeat_penalty(std::vector{op(Op::Log10), x(0)}, cs), 0.5);
  EXPECT_DOUBLE_EQ(repeat_penalty(std::vector{op(Op::Log10), x(1)}, cs), 1.0);
  cs.repeat = {{x(1), 1, 10}, {x(2), 1, 10}};
  EXPECT_DOUBLE_EQ(repeat_penalty(std::vector{op(Op::Log10), x(0)}, cs), 0.25);
  cs.repeat = {{x(1), 2, 10}};
  EXPECT_DOUBLE_EQ(repeat_penalty(std::vector{op(Op::Log10), x(0)}, cs), 0.25);
  EXPECT_EQ(count_token(std::vector{op(Op::Add), x(1), x(1)}, x(1)), 2u);
}

// Uniform sampling over the masked vocabulary never yields a sequence the
// independent checker rejects.
TEST(ValidNextTokens, MaskedSamplingIsSound)
{
  auto vocab = Vocabulary::make(4);
  ConstraintSet cs;
  cs.repeat = {{x(2), 1, 2}, {x(3), 1, 2}};
  std::mt19937_64 rng(11);
  int produced = 0, dead_ends = 0;
  while (produced < 10000) {
    PrefixState state(cs);
    std::vector<Token> seq;
    bool dead = false;
    while (!state.complete()) {
      auto m = valid_next_tokens(state, vocab);
      if (m.dead_end()) {
        dead = true;
        break;
      }
      std::vector<std::size_t> ok;
      for (std::size_t i = 0; i < m.allowed.size(); ++i)
        if (m.allowed[i])
          ok.push_back(i);
      const auto pick = ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng)];
      seq.push_back(vocab[pick]);
      state.push(vocab[pick]);
    }
    if (dead) {
      ++dead_ends;
      continue;
    }
    ASSERT_EQ(autopl::testing::hard_violation(seq, cs), "") << to_infix({seq, std::vector<double>(
                                                                                   ExpressionTree{seq, {}}.placeholder_count(), 1.0)});
    ++produced;
  }
  EXPECT_LT(dead_ends, produced);
}

} // namespace
