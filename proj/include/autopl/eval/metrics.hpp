#pragma once

#include "autopl/dataset.hpp"
#include "autopl/error.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace autopl::eval
{

namespace detail
{

inline void check_lengths(std::span<const double> pred, std::span<const double> y, const char* metric)
{
  if (pred.size() != y.size())
    throw std::invalid_argument(std::string(metric) + ": prediction and target lengths differ");
  if (y.empty())
    throw std::invalid_argument(std::string(metric) + ": empty input");
}

} // namespace detail

inline double mae(std::span<const double> pred, std::span<const double> y)
{
  detail::check_lengths(pred, y, "mae");
  double acc = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    acc += std::abs(pred[i] - y[i]);
  return acc / static_cast<double>(y.size());
}

inline double mse(std::span<const double> pred, std::span<const double> y)
{
  detail::check_lengths(pred, y, "mse");
  double acc = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    acc += (pred[i] - y[i]) * (pred[i] - y[i]);
  return acc / static_cast<double>(y.size());
}

// Percent.
inline double mape(std::span<const double> pred, std::span<const double> y)
{
  detail::check_lengths(pred, y, "mape");
  double acc = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0)
      throw std::invalid_argument("mape: target contains a zero");
    acc += std::abs((pred[i] - y[i]) / y[i]);
  }
  return 100.0 * acc / static_cast<double>(y.size());
}

inline double r2(std::span<const double> pred, std::span<const double> y)
{
  detail::check_lengths(pred, y, "r2");
  double mean = 0;
  for (double v : y)
    mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - pred[i]) * (y[i] - pred[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (!(ss_tot > 0.0))
    throw std::invalid_argument("r2: target is constant");
  return 1.0 - ss_res / ss_tot;
}

struct RunMetrics
{
  double mae = 0, mse = 0, mape = 0, r2 = 0;
};

inline RunMetrics score(std::span<const double> pred, std::span<const double> y)
{
  return {mae(pred, y), mse(pred, y), mape(pred, y), r2(pred, y)};
}

struct Stat
{
  double mean = 0.0;
  double std = 0.0; // population
};

inline Stat summarize(const std::vector<double>& v)
{
  Stat s;
  if (v.empty())
    return s;
  // offset from the first value so identical runs give exactly zero spread
  double shift = 0.0;
  for (double x : v)
    shift += x - v[0];
  s.mean = v[0] + shift / static_cast<double>(v.size());
  for (double x : v)
    s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(v.size()));
  return s;
}

struct MetricsReport
{
  Stat mae, mse, mape, r2;
  std::size_t n_runs = 0;
  std::vector<RunMetrics> runs;                 // successful runs, by run index
  std::vector<std::size_t> run_index;           // which run each entry came from
  std::vector<std::pair<std::size_t, std::string>> failures;
  // (true, predicted) test pairs per successful run
  std::vector<std::vector<std::pair<double, double>>> scatter;

  void aggregate()
  {
    std::vector<double> a, b, c, d;
    for (const auto& r : runs) {
      a.push_back(r.mae);
      b.push_back(r.mse);
      c.push_back(r.mape);
      d.push_back(r.r2);
    }
    mae = summarize(a);
    mse = summarize(b);
    mape = summarize(c);
    r2 = summarize(d);
  }
};

// Single-shot report over the whole dataset (std = 0).
inline MetricsReport full_dataset_report(std::span<const double> pred, std::span<const double> y)
{
  MetricsReport rep;
  rep.n_runs = 1;
  rep.runs.push_back(score(pred, y));
  rep.run_index.push_back(0);
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < y.size(); ++i)
    pairs.emplace_back(y[i], pred[i]);
  rep.scatter.push_back(std::move(pairs));
  rep.aggregate();
  return rep;
}

using Predictor = std::function<std::vector<double>(const Dataset&)>;
// Fits on the training split (with a run-specific seed) and returns a predictor.
using FitFn = std::function<Predictor(const Dataset& train, std::uint64_t seed)>;

// Repeated random train/test splits; run i uses split seed base_seed + i and
// passes the same value to the fit closure.
inline MetricsReport monte_carlo_eval(const FitFn& fit, const Dataset& ds, std::size_t runs, double train_fraction,
                                      std::uint64_t base_seed, unsigned threads = 1)
{
  if (runs < 1)
    throw std::invalid_argument("monte_carlo_eval: runs must be >= 1");
  struct Slot
  {
    bool ok = false;
    RunMetrics m;
    std::string error;
    std::vector<std::pair<double, double>> pairs;
  };
  std::vector<Slot> slots(runs);
  auto run_one = [&](std::size_t i) {
    try {
      auto [train, test] = split(ds, train_fraction, base_seed + i);
      auto predict = fit(train, base_seed + i);
      auto pred = predict(test);
      slots[i].m = score(pred, test.target);
      for (std::size_t k = 0; k < pred.size(); ++k)
        slots[i].pairs.emplace_back(test.target[k], pred[k]);
      slots[i].ok = true;
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(runs)));
  if (n == 1) {
    for (std::size_t i = 0; i < runs; ++i)
      run_one(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < runs; i += n)
          run_one(i);
      });
    for (auto& t : pool)
      t.join();
  }

  MetricsReport rep;
  rep.n_runs = runs;
  for (std::size_t i = 0; i < runs; ++i) {
    if (slots[i].ok) {
      rep.runs.push_back(slots[i].m);
      rep.run_index.push_back(i);
      rep.scatter.push_back(std::move(slots[i].pairs));
    } else {
      rep.failures.emplace_back(i, slots[i].error);
    }
  }
  if (rep.failures.size() * 2 >= runs)
    throw TrainingError(std::to_string(rep.failures.size()) + " of " + std::to_string(runs) +
                        " Monte-Carlo runs failed; first: " + rep.failures.front().second);
  rep.aggregate();
  return rep;
}

} // namespace autopl::eval
