#pragma once

#include "autopl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace autopl::expr
{

enum class Op : std::uint8_t
{
  Add,
  Sub,
  Mul,
  Div,
  Log10,
  Exp,
  Sin,
  Cos,
  Sqrt,
  Square,
  Cube,
  Var,     // feature column
  Const,   // placeholder, value fitted per expression
  Literal, // fixed numeric value
};

constexpr int arity(Op op)
{
  switch (op) {
  case Op::Add:
  case Op::Sub:
  case Op::Mul:
  case Op::Div:
    return 2;
  case Op::Log10:
  case Op::Exp:
  case Op::Sin:
  case Op::Cos:
  case Op::Sqrt:
  case Op::Square:
  case Op::Cube:
    return 1;
  default:
    return 0;
  }
}

constexpr bool is_trig(Op op) { return op == Op::Sin || op == Op::Cos; }
constexpr bool is_constant_leaf(Op op) { return op == Op::Const || op == Op::Literal; }

inline const char* op_name(Op op)
{
  switch (op) {
  case Op::Add: return "add";
  case Op::Sub: return "sub";
  case Op::Mul: return "mul";
  case Op::Div: return "div";
  case Op::Log10: return "log10";
  case Op::Exp: return "exp";
  case Op::Sin: return "sin";
  case Op::Cos: return "cos";
  case Op::Sqrt: return "sqrt";
  case Op::Square: return "square";
  case Op::Cube: return "cube";
  case Op::Var: return "var";
  case Op::Const: return "const";
  case Op::Literal: return "lit";
  }
  return "?";
}

inline std::optional<Op> op_from_name(const std::string& s)
{
  for (int i = 0; i <= static_cast<int>(Op::Literal); ++i)
    if (s == op_name(static_cast<Op>(i)))
      return static_cast<Op>(i);
  return std::nullopt;
}

struct Token
{
  Op op = Op::Literal;
  int var = -1;       // Var only
  double value = 0.0; // Literal only

  static Token make(Op op) { return {op, -1, 0.0}; }
  static Token variable(int index) { return {Op::Var, index, 0.0}; }
  static Token constant() { return {Op::Const, -1, 0.0}; }
  static Token literal(double v) { return {Op::Literal, -1, v}; }

  int arity() const { return expr::arity(op); }

  friend bool operator==(const Token& a, const Token& b)
  {
    if (a.op != b.op)
      return false;
    if (a.op == Op::Var)
      return a.var == b.var;
    if (a.op == Op::Literal)
      return a.value == b.value;
    return true;
  }
  friend bool operator<(const Token& a, const Token& b)
  {
    if (a.op != b.op)
      return a.op < b.op;
    if (a.var != b.var)
      return a.var < b.var;
    return a.value < b.value;
  }
};

// Pre-order token sequence plus one fitted value per Const placeholder, in
// order of appearance.
struct ExpressionTree
{
  std::vector<Token> tokens;
  std::vector<double> constants;

  std::size_t placeholder_count() const
  {
    return static_cast<std::size_t>(
        std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return t.op == Op::Const; }));
  }
};

inline bool is_complete(std::span<const Token> tokens)
{
  if (tokens.empty())
    return false;
  long open = 1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    open += tokens[i].arity() - 1;
    if (open == 0)
      return i + 1 == tokens.size();
  }
  return false;
}

// ---------------------------------------------------------------------------
// Evaluation

// Column-major copy of a feature matrix, the layout evaluate() works on.
struct Columns
{
  std::vector<std::vector<double>> cols;
  std::size_t rows = 0;

  Columns() = default;
  explicit Columns(const Matrix& m) : cols(m.cols()), rows(m.rows())
  {
    for (std::size_t c = 0; c < m.cols(); ++c)
      cols[c] = m.column(c);
  }
};

// Scratch buffers reused across evaluations of different expressions.
class Evaluator
{
public:
  // Writes one prediction per row. A row whose evaluation hits any
  // non-finite intermediate comes out as NaN.
  void evaluate(std::span<const Token> tokens, std::span<const double> constants, const Columns& X,
                std::vector<double>& out)
  {
    if (!is_complete(tokens))
      throw std::invalid_argument("expression is not arity-complete");
    const std::size_t n = X.rows;
    std::size_t depth = 0;
    const auto placeholders =
        std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return t.op == Op::Const; });
    if (static_cast<std::size_t>(placeholders) != constants.size())
      throw std::invalid_argument("constant count does not match placeholder count");
    std::size_t const_index = constants.size();
    // Reverse pre-order: children are evaluated before their operator and
    // the first child ends up on top of the stack.
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
      const Token& t = *it;
      if (t.arity() == 0) {
        auto& dst = slot(depth++, n);
        switch (t.op) {
        case Op::Var:
          if (t.var < 0 || static_cast<std::size_t>(t.var) >= X.cols.size())
            throw std::invalid_argument("variable index out of range");
          std::copy(X.cols[t.var].begin(), X.cols[t.var].end(), dst.begin());
          break;
        case Op::Const:
          std::fill(dst.begin(), dst.end(), constants[--const_index]);
          break;
        default:
          std::fill(dst.begin(), dst.end(), t.value);
          break;
        }
        continue;
      }
      if (t.arity() == 1) {
        auto& a = stack_[depth - 1];
        apply_unary(t.op, a, n);
        continue;
      }
      auto& a = stack_[depth - 1]; // first child
      auto& b = stack_[depth - 2];
      apply_binary(t.op, a, b, n);
      std::swap(stack_[depth - 2], stack_[depth - 1]);
      --depth;
    }
    out.assign(stack_[0].begin(), stack_[0].begin() + static_cast<std::ptrdiff_t>(n));
  }

private:
  std::vector<double>& slot(std::size_t i, std::size_t n)
  {
    if (stack_.size() <= i)
      stack_.resize(i + 1);
    if (stack_[i].size() < n)
      stack_[i].resize(n);
    return stack_[i];
  }

  static double clean(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN(); }

  static void apply_unary(Op op, std::vector<double>& a, std::size_t n)
  {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = a[i];
      double y;
      switch (op) {
      case Op::Log10: y = x > 0.0 ? std::log10(x) : std::numeric_limits<double>::quiet_NaN(); break;
      case Op::Exp: y = std::exp(x); break;
      case Op::Sin: y = std::sin(x); break;
      case Op::Cos: y = std::cos(x); break;
      case Op::Sqrt: y = x >= 0.0 ? std::sqrt(x) : std::numeric_limits<double>::quiet_NaN(); break;
      case Op::Square: y = x * x; break;
      case Op::Cube: y = x * x * x; break;
      default: y = x; break;
      }
      a[i] = clean(y);
    }
  }

  // result stored in a (first child)
  static void apply_binary(Op op, std::vector<double>& a, const std::vector<double>& b, std::size_t n)
  {
    switch (op) {
    case Op::Add:
      for (std::size_t i = 0; i < n; ++i)
        a[i] = clean(a[i] + b[i]);
      break;
    case Op::Sub:
      for (std::size_t i = 0; i < n; ++i)
        a[i] = clean(a[i] - b[i]);
      break;
    case Op::Mul:
      for (std::size_t i = 0; i < n; ++i)
        a[i] = clean(a[i] * b[i]);
      break;
    case Op::Div:
      for (std::size_t i = 0; i < n; ++i)
        a[i] = b[i] == 0.0 ? std::numeric_limits<double>::quiet_NaN() : clean(a[i] / b[i]);
      break;
    default:
      break;
    }
  }

  std::vector<std::vector<double>> stack_;
};

inline std::vector<double> evaluate(const ExpressionTree& e, const Columns& X)
{
  Evaluator ev;
  std::vector<double> out;
  ev.evaluate(e.tokens, e.constants, X, out);
  return out;
}

inline std::vector<double> evaluate(const ExpressionTree& e, const Matrix& X) { return evaluate(e, Columns(X)); }

// ---------------------------------------------------------------------------
// Rendering

inline std::string format_number(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  std::string s = buf;
  if (v < 0.0)
    return "(" + s + ")";
  return s;
}

inline std::vector<std::string> default_names(std::size_t n)
{
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back("x" + std::to_string(i));
  return out;
}

// Fully parenthesized infix. Constants and literals use 4 significant digits.
inline std::string to_infix(const ExpressionTree& e, const std::vector<std::string>& names = {})
{
  if (!is_complete(e.tokens))
    throw std::invalid_argument("expression is not arity-complete");
  std::size_t pos = 0, next_const = 0;
  auto render = [&](auto&& self) -> std::string {
    const Token& t = e.tokens[pos++];
    switch (t.op) {
    case Op::Var:
      return static_cast<std::size_t>(t.var) < names.size() ? names[t.var] : "x" + std::to_string(t.var);
    case Op::Const:
      return next_const < e.constants.size() ? format_number(e.constants[next_const++]) : "c" + std::to_string(next_const++);
    case Op::Literal:
      return format_number(t.value);
    default:
      break;
    }
    if (t.arity() == 1)
      return std::string(op_name(t.op)) + "(" + self(self) + ")";
    const char* sym = t.op == Op::Add ? " + " : t.op == Op::Sub ? " - " : t.op == Op::Mul ? " * " : " / ";
    std::string lhs = self(self);
    std::string rhs = self(self);
    return "(" + lhs + sym + rhs + ")";
  };
  return render(render);
}

// ---------------------------------------------------------------------------
// Structure

struct StructuralScan
{
  std::set<int> variables_used;
  std::set<int> trig_over; // variables appearing under sin or cos
};

inline StructuralScan structural_scan(const ExpressionTree& e)
{
  StructuralScan scan;
  std::vector<std::pair<bool, long>> frames; // open operators: (is_trig, slots left)
  for (const auto& t : e.tokens) {
    bool under_trig = std::any_of(frames.begin(), frames.end(), [](const auto& f) { return f.first; });
    if (t.op == Op::Var) {
      scan.variables_used.insert(t.var);
      if (under_trig)
        scan.trig_over.insert(t.var);
    }
    if (!frames.empty())
      --frames.back().second;
    if (t.arity() > 0)
      frames.emplace_back(is_trig(t.op), t.arity());
    while (!frames.empty() && frames.back().second == 0)
      frames.pop_back();
  }
  return scan;
}

inline std::size_t count_token(std::span<const Token> tokens, const Token& t)
{
  return static_cast<std::size_t>(std::count(tokens.begin(), tokens.end(), t));
}

} // namespace autopl::expr
