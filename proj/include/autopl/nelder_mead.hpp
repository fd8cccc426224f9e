#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace autopl
{

struct SimplexResult
{
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

// Derivative-free Nelder-Mead minimization. Non-finite objective values are
// treated as +inf so the simplex retreats from domain boundaries.
inline SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                                 std::vector<double> start, int max_iterations, double initial_step = 0.5,
                                 double tolerance = 1e-14)
{
  const std::size_t n = start.size();
  auto eval = [&](const std::vector<double>& x) {
    double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> simplex(n + 1, start);
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double step = start[i] != 0.0 ? initial_step * std::abs(start[i]) : initial_step;
    simplex[i + 1][i] += step;
  }
  for (std::size_t i = 0; i <= n; ++i)
    values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  SimplexResult result;
  int it = 0;
  for (; it < max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    const double spread = values[worst] - values[best];
    if (std::isfinite(spread) && spread <= tolerance * (std::abs(values[best]) + tolerance))
      break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j)
        centroid[j] += simplex[order[k]][j] / static_cast<double>(n);

    auto along = [&](double t, std::vector<double>& out) {
      for (std::size_t j = 0; j < n; ++j)
        out[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
    };

    along(-1.0, trial);
    const double fr = eval(trial);
    if (fr < values[best]) {
      along(-2.0, trial2);
      const double fe = eval(trial2);
      if (fe < fr) {
        simplex[worst] = trial2;
        values[worst] = fe;
      } else {
        simplex[worst] = trial;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = trial;
      values[worst] = fr;
      continue;
    }
    // contraction, outside or inside
    const bool outside = fr < values[worst];
    along(outside ? -0.5 : 0.5, trial2);
    const double fc = eval(trial2);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = trial2;
      values[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == best)
        continue;
      for (std::size_t j = 0; j < n; ++j)
        simplex[k][j] = simplex[best][j] + 0.5 * (simplex[k][j] - simplex[best][j]);
      values[k] = eval(simplex[k]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  result.x = simplex[best];
  result.value = values[best];
  result.iterations = it;
  return result;
}

} // namespace autopl
