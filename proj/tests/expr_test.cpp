#include "autopl/const_fit.hpp"
#include "autopl/constraints.hpp"
#include "autopl/expr.hpp"
#include "autopl/expr_io.hpp"
#include "support/constraint_checker.hpp"
#include "support/infix_parser.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace
{

using namespace autopl::expr;
using autopl::Matrix;

Token op(Op o) { return Token::make(o); }
Token x(int i) { return Token::variable(i); }
Token lit(double v) { return Token::literal(v); }

TEST(IsComplete, Examples)
{
  EXPECT_TRUE(is_complete(std::vector{op(Op::Add), x(0), x(0)}));
  EXPECT_FALSE(is_complete(std::vector{op(Op::Add), x(0)}));
  EXPECT_TRUE(is_complete(std::vector{op(Op::Log10), op(Op::Add), x(0), lit(1)}));
  EXPECT_FALSE(is_complete(std::vector<Token>{}));
  EXPECT_FALSE(is_complete(std::vector{x(0), x(1)}));
}

// Agreement with the recursive tree builder on every sequence up to length 7
// over a 6-token alphabet.
TEST(IsComplete, ExhaustiveAgainstTreeBuilder)
{
  const std::vector<Token> alphabet{op(Op::Add), op(Op::Mul), op(Op::Log10), op(Op::Sin), x(0), Token::constant()};
  std::size_t checked = 0;
  for (std::size_t len = 1; len <= 7; ++len) {
    std::vector<std::size_t> idx(len, 0);
    for (;;) {
      std::vector<Token> seq;
      for (auto i : idx)
        seq.push_back(alphabet[i]);
      const bool expected = autopl::testing::build_tree(seq) != nullptr;
      ASSERT_EQ(is_complete(seq), expected);
      ++checked;
      std::size_t k = 0;
      while (k < len && ++idx[k] == alphabet.size())
        idx[k++] = 0;
      if (k == len)
        break;
    }
  }
  EXPECT_EQ(checked, 335922u); // sum of 6^len, len = 1..7
}

TEST(Evaluate, Identity)
{
  ExpressionTree e{{x(0)}, {}};
  EXPECT_EQ(evaluate(e, Matrix::from_rows({{3}, {5}})), (std::vector<double>{3, 5}));
}

TEST(Evaluate, DomainViolationIsNonFinite)
{
  ExpressionTree e{{op(Op::Log10), x(0)}, {}};
  auto out = evaluate(e, Matrix::from_rows({{-1}, {100}}));
  EXPECT_FALSE(std::isfinite(out[0]));
  EXPECT_DOUBLE_EQ(out[1], 2.0);

  // 1/(1/0) would be 0 if the inner infinity were allowed through
  ExpressionTree div{{op(Op::Div), lit(1), op(Op::Div), lit(1), x(0)}, {}};
  EXPECT_FALSE(std::isfinite(evaluate(div, Matrix::from_rows({{0}}))[0]));
}

TEST(Evaluate, HandExample)
{
  // 10*2*log10(x0) + 5
  ExpressionTree e{{op(Op::Add), op(Op::Mul), lit(10), op(Op::Mul), lit(2), op(Op::Log10), x(0), lit(5)}, {}};
  EXPECT_DOUBLE_EQ(evaluate(e, Matrix::from_rows({{100}}))[0], 45.0);
}

TEST(Evaluate, OperandOrder)
{
  ExpressionTree sub{{op(Op::Sub), x(0), x(1)}, {}};
  ExpressionTree div{{op(Op::Div), x(0), x(1)}, {}};
  auto X = Matrix::from_rows({{6, 2}});
  EXPECT_EQ(evaluate(sub, X)[0], 4.0);
  EXPECT_EQ(evaluate(div, X)[0], 3.0);
}

TEST(Evaluate, PlaceholdersInOrder)
{
  // c0 - c1
  ExpressionTree e{{op(Op::Sub), Token::constant(), Token::constant()}, {7.0, 2.0}};
  EXPECT_EQ(evaluate(e, Matrix::from_rows({{0}}))[0], 5.0);
  e.constants = {1.0};
  EXPECT_THROW(evaluate(e, Matrix::from_rows({{0}})), std::invalid_argument);
}

TEST(Evaluate, IncompleteThrows)
{
  ExpressionTree e{{op(Op::Add), x(0)}, {}};
  EXPECT_THROW(evaluate(e, Matrix::from_rows({{1}})), std::invalid_argument);
}

// Manually built trees agree with the direct formula on finite outputs.
TEST(Evaluate, MatchesDirectFormula)
{
  const std::vector<std::string> names{"a", "b", "c"};
  auto e = autopl::testing::parse_infix("exp(a/3) - sin(b)*square(c) + log10(a*b + 1) / cos(c)", names);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.1, 3.0);
  Matrix X(200, 3);
  for (std::size_t r = 0; r < 200; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      X(r, c) = U(rng);
  auto got = evaluate(e, X);
  for (std::size_t r = 0; r < 200; ++r) {
    const double a = X(r, 0), b = X(r, 1), c = X(r, 2);
    const double want = std::exp(a / 3) - std::sin(b) * c * c + std::log10(a * b + 1) / std::cos(c);
    ASSERT_NEAR(got[r], want, 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST(ToInfix, Examples)
{
  EXPECT_EQ(to_infix({{op(Op::Add), x(0), x(1)}, {}}), "(x0 + x1)");
  EXPECT_EQ(to_infix({{op(Op::Log10), x(0)}, {}}), "log10(x0)");
  EXPECT_EQ(to_infix({{op(Op::Mul), Token::constant(), x(0)}, {3.14159}}, {"d"}), "(3.142 * d)");
  EXPECT_EQ(to_infix({{op(Op::Add), lit(-2.5), x(0)}, {}}), "((-2.5) + x0)");
}

// Rendering then re-parsing preserves semantics on a probe grid.
TEST(ToInfix, ReparseEquivalence)
{
  const std::vector<std::string> names{"x0", "x1"};
  const std::vector<std::string> sources{
      "x0 + x1", "log10(x0 * 3) - 2 / x1", "square(x0 - x1) * exp(x1 / 4)", "sin(x0 + cos(2))", "-x0 + 7 * x1",
      "cube(x0) / (1 + square(x1))", "sqrt(x0) + 0.5 * x1"};
  Matrix X(50, 2);
  for (std::size_t r = 0; r < 50; ++r) {
    X(r, 0) = 0.1 + 0.07 * r;
    X(r, 1) = 2.0 - 0.03 * r;
  }
  for (const auto& src : sources) {
    auto e = autopl::testing::parse_infix(src, names);
    auto again = autopl::testing::parse_infix(to_infix(e, names), names);
    auto a = evaluate(e, X), b = evaluate(again, X);
    for (std::size_t r = 0; r < a.size(); ++r)
      ASSERT_EQ(a[r], b[r]) << src;
  }
}

TEST(Json, RoundTrip)
{
  ExpressionTree e{{op(Op::Add), op(Op::Mul), Token::constant(), op(Op::Log10), x(1), lit(4)}, {20.5}};
  auto j = to_json(e, {"f", "d"});
  EXPECT_EQ(j["infix"], "((20.5 * log10(d)) + 4)");
  auto back = from_json(j);
  EXPECT_EQ(back.tokens, e.tokens);
  EXPECT_EQ(back.constants, e.constants);
  j["tokens"].erase(0);
  EXPECT_THROW(from_json(j), autopl::FormatError);
}

TEST(StructuralScan, PublishedExpressions)
{
  const std::vector<std::string> names{"n_w", "n_f", "d", "f"};
  auto s = structural_scan(autopl::testing::parse_infix("d - 1.3 * cos(5.04 * f - 0.5)", names));
  EXPECT_EQ(s.trig_over, (std::set<int>{3}));
  EXPECT_EQ(s.variables_used, (std::set<int>{2, 3}));

  const std::vector<std::string> ci{"f", "n", "d", "chi"};
  auto s2 = structural_scan(autopl::testing::parse_infix("23*n + d/10 + log10(f) + 40", ci));
  EXPECT_TRUE(s2.trig_over.empty());
  EXPECT_EQ(s2.variables_used, (std::set<int>{0, 1, 2}));

  auto s3 = structural_scan(autopl::testing::parse_infix("3 + 4", ci));
  EXPECT_TRUE(s3.trig_over.empty());
  EXPECT_TRUE(s3.variables_used.empty());

  // trig scope ends with its subtree
  auto s4 = structural_scan(autopl::testing::parse_infix("sin(n) * d + f", ci));
  EXPECT_EQ(s4.trig_over, (std::set<int>{1}));
}

TEST(OptimizeConstants, ConstantOnly)
{
  ExpressionTree e{{Token::constant()}, {}};
  autopl::Dataset ds;
  ds.feature_names = {"x0"};
  ds.features = Matrix::from_rows({{0}, {1}, {2}});
  ds.target = {7, 7, 7};
  auto fit = optimize_constants(e, ds);
  ASSERT_TRUE(fit.fittable);
  EXPECT_NEAR(fit.constants[0], 7.0, 1e-5);
  EXPECT_NEAR(fit.mse, 0.0, 1e-9);
}

TEST(OptimizeConstants, LinearScale)
{
  ExpressionTree e{{op(Op::Mul), Token::constant(), x(0)}, {}};
  autopl::Dataset ds;
  ds.feature_names = {"x0"};
  ds.features = Matrix::from_rows({{1}, {2}});
  ds.target = {3, 6};
  auto fit = optimize_constants(e, ds);
  EXPECT_NEAR(fit.constants[0], 3.0, 1e-5);
}

TEST(OptimizeConstants, RecoversLogModel)
{
  ExpressionTree e{{op(Op::Add), op(Op::Mul), Token::constant(), op(Op::Log10), x(0), Token::constant()}, {}};
  autopl::Dataset ds;
  ds.feature_names = {"x0"};
  ds.features = Matrix(60, 1);
  for (std::size_t i = 0; i < 60; ++i) {
    ds.features(i, 0) = 1.0 + 10.0 * i;
    ds.target.push_back(20.0 * std::log10(ds.features(i, 0)) + 32.44);
  }
  auto fit = optimize_constants(e, ds);
  EXPECT_NEAR(fit.constants[0], 20.0, 1e-3);
  EXPECT_NEAR(fit.constants[1], 32.44, 1e-3);
}

TEST(OptimizeConstants, NoPlaceholdersIsNoOp)
{
  ExpressionTree e{{op(Op::Add), x(0), lit(1)}, {}};
  autopl::Dataset ds;
  ds.feature_names = {"x0"};
  ds.features = Matrix::from_rows({{1}, {2}});
  ds.target = {2, 4};
  auto fit = optimize_constants(e, ds);
  EXPECT_TRUE(fit.constants.empty());
  EXPECT_DOUBLE_EQ(fit.mse, 0.5);
}

TEST(OptimizeConstants, Unfittable)
{
  // log10(c0 - c0*... ) style: log of a negative feature for every c
  ExpressionTree e{{op(Op::Log10), op(Op::Mul), op(Op::Square), Token::constant(), x(0)}, {}};
  autopl::Dataset ds;
  ds.feature_names = {"x0"};
  ds.features = Matrix::from_rows({{-1}, {-2}});
  ds.target = {1, 2};
  auto fit = optimize_constants(e, ds);
  EXPECT_FALSE(fit.fittable);
}

} // namespace
