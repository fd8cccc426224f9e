#pragma once

#include "autopl/dataset.hpp"
#include "autopl/expr.hpp"
#include "autopl/nelder_mead.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace autopl::expr
{

struct ConstantFit
{
  std::vector<double> constants;
  double mse = std::numeric_limits<double>::infinity();
  // false when every probed constant vector produced a non-finite prediction
  bool fittable = false;
};

struct ConstantFitOptions
{
  int max_iterations = 200;
  std::vector<double> starts = {1.0, 0.1};
};

// Mean squared error; +inf when any prediction is non-finite.
inline double mse_or_inf(std::span<const double> pred, std::span<const double> y)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = pred[i] - y[i];
    if (!std::isfinite(r))
      return std::numeric_limits<double>::infinity();
    acc += r * r;
  }
  return acc / static_cast<double>(y.size());
}

inline ConstantFit optimize_constants(const ExpressionTree& e, const Columns& X, std::span<const double> y,
                                      Evaluator& ev, const ConstantFitOptions& opt = {})
{
  ConstantFit fit;
  const std::size_t k = e.placeholder_count();
  std::vector<double> pred;
  if (k == 0) {
    ev.evaluate(e.tokens, {}, X, pred);
    fit.mse = mse_or_inf(pred, y);
    fit.fittable = std::isfinite(fit.mse);
    return fit;
  }

  auto objective = [&](std::span<const double> c) {
    ev.evaluate(e.tokens, c, X, pred);
    return mse_or_inf(pred, y);
  };
  for (double start : opt.starts) {
    auto r = nelder_mead(objective, std::vector<double>(k, start), opt.max_iterations);
    if (r.value < fit.mse) {
      fit.mse = r.value;
      fit.constants = std::move(r.x);
    }
  }
  fit.fittable = std::isfinite(fit.mse);
  if (!fit.fittable)
    fit.constants.assign(k, opt.starts.front());
  return fit;
}

inline ConstantFit optimize_constants(const ExpressionTree& e, const Dataset& ds, const ConstantFitOptions& opt = {})
{
  Evaluator ev;
  return optimize_constants(e, Columns(ds.features), ds.target, ev, opt);
}

} // namespace autopl::expr
