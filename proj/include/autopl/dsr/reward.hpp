#pragma once

#include "autopl/const_fit.hpp"
#include "autopl/constraints.hpp"
#include "autopl/dataset.hpp"
#include "autopl/error.hpp"
#include "autopl/expr.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace autopl::dsr
{

// Population standard deviation.
inline double population_std(std::span<const double> y)
{
  double mean = 0.0;
  for (double v : y)
    mean += v;
  mean /= static_cast<double>(y.size());
  double acc = 0.0;
  for (double v : y)
    acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(y.size()));
}

// RMSE / sigma_y. Returns +inf when any prediction is non-finite.
inline double nrmse(std::span<const double> pred, std::span<const double> y)
{
  if (pred.size() != y.size() || y.empty())
    throw std::invalid_argument("nrmse: size mismatch");
  const double sigma = population_std(y);
  if (!(sigma > 0.0))
    throw DataError("target has zero variance");
  return std::sqrt(expr::mse_or_inf(pred, y)) / sigma;
}

inline double reward_from_nrmse(double e) { return std::isfinite(e) ? 1.0 / (1.0 + e) : 0.0; }

struct RewardResult
{
  double reward = 0.0;
  double nrmse = 0.0;
  std::vector<double> constants;
};

// Reward evaluation against a fixed training set; owns scratch buffers so one
// instance per worker thread.
class RewardFunction
{
public:
  RewardFunction(const Dataset& train, const expr::ConstraintSet& cs, expr::ConstantFitOptions fit = {})
      : X_(train.features), y_(train.target), cs_(&cs), fit_(std::move(fit))
  {
    sigma_ = population_std(y_);
    if (!(sigma_ > 0.0))
      throw DataError("target has zero variance");
  }

  double sigma() const { return sigma_; }

  RewardResult operator()(const expr::ExpressionTree& e)
  {
    RewardResult r;
    auto fit = expr::optimize_constants(e, X_, y_, ev_, fit_);
    r.constants = fit.constants;
    r.nrmse = std::sqrt(fit.mse) / sigma_;
    r.reward = reward_from_nrmse(r.nrmse) * expr::repeat_penalty(e.tokens, *cs_);
    return r;
  }

private:
  expr::Columns X_;
  std::vector<double> y_;
  const expr::ConstraintSet* cs_;
  expr::ConstantFitOptions fit_;
  expr::Evaluator ev_;
  double sigma_ = 0.0;
};

inline double reward(const expr::ExpressionTree& e, const Dataset& train, const expr::ConstraintSet& cs)
{
  RewardFunction f(train, cs);
  return f(e).reward;
}

} // namespace autopl::dsr
