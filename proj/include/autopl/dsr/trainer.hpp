#pragma once

#include "autopl/adam.hpp"
#include "autopl/dataset.hpp"
#include "autopl/dsr/policy.hpp"
#include "autopl/dsr/reward.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace autopl::dsr
{

enum class PolicyKind
{
  Rspg,
  Vpg,
  Pqt
};

inline std::string to_string(PolicyKind k)
{
  switch (k) {
  case PolicyKind::Rspg: return "rspg";
  case PolicyKind::Vpg: return "vpg";
  case PolicyKind::Pqt: return "pqt";
  }
  return "?";
}

inline PolicyKind parse_policy_kind(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "rspg")
    return PolicyKind::Rspg;
  if (s == "vpg")
    return PolicyKind::Vpg;
  if (s == "pqt")
    return PolicyKind::Pqt;
  throw std::invalid_argument("unknown policy '" + s + "' (expected rspg, vpg or pqt)");
}

struct TrainerConfig
{
  PolicyKind policy_kind = PolicyKind::Rspg;
  double epsilon = 0.05;
  double ewma_alpha = 0.25;
  std::size_t queue_k = 10;
  std::size_t batch_size = 200;
  double learning_rate = 0.002;
  double entropy_weight = 0.008;
  std::size_t sample_budget = 10000;
  std::uint64_t seed = 0;
  std::size_t hidden = 32;
  double reward_threshold = 0.999;
  unsigned threads = 1;
  expr::ConstantFitOptions constant_fit;

  void validate() const
  {
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw std::invalid_argument("epsilon must lie in (0, 1)");
    if (!(ewma_alpha > 0.0 && ewma_alpha <= 1.0))
      throw std::invalid_argument("ewma_alpha must lie in (0, 1]");
    if (queue_k < 1)
      throw std::invalid_argument("queue_k must be >= 1");
    if (batch_size < 1)
      throw std::invalid_argument("batch_size must be >= 1");
    if (sample_budget < batch_size)
      throw std::invalid_argument("sample budget must be >= batch_size");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("learning_rate must be positive");
    if (entropy_weight < 0.0)
      throw std::invalid_argument("entropy_weight must be >= 0");
    if (hidden < 1)
      throw std::invalid_argument("hidden size must be >= 1");
  }
};

// Top-k sequences by reward, one entry per distinct token sequence.
class MaxRewardPriorityQueue
{
public:
  struct Entry
  {
    double reward = 0.0;
    std::vector<int> actions;
    expr::ExpressionTree tree;
  };

  explicit MaxRewardPriorityQueue(std::size_t capacity = 10) : capacity_(capacity)
  {
    if (capacity_ < 1)
      throw std::invalid_argument("queue capacity must be >= 1");
  }

  // Returns true when the entry was admitted.
  bool push(Entry e)
  {
    for (const auto& x : entries_)
      if (x.actions == e.actions)
        return false;
    if (entries_.size() == capacity_) {
      if (!(e.reward > entries_.back().reward))
        return false;
      entries_.pop_back();
    }
    auto pos = std::upper_bound(entries_.begin(), entries_.end(), e.reward,
                                [](double r, const Entry& x) { return r > x.reward; });
    entries_.insert(pos, std::move(e));
    return true;
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  // sorted by descending reward
  const std::vector<Entry>& entries() const { return entries_; }
  double min_reward() const { return entries_.empty() ? 0.0 : entries_.back().reward; }

private:
  std::size_t capacity_;
  std::vector<Entry> entries_;
};

struct StepStats
{
  double quantile = 0.0;  // RSPG threshold
  double baseline = 0.0;  // VPG baseline after the update
  std::size_t contributing = 0;
  bool policy_no_op = false; // no sequence carried policy-gradient weight
  double objective = 0.0;
};

// Empirical (1 - epsilon) quantile with linear interpolation between order
// statistics.
inline double empirical_quantile(std::vector<double> v, double q)
{
  if (v.empty())
    throw std::invalid_argument("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Per-sequence log-probability weights of the risk-seeking estimator.
inline std::vector<double> rspg_weights(std::span<const double> rewards, double epsilon, double* quantile = nullptr)
{
  const double q = empirical_quantile({rewards.begin(), rewards.end()}, 1.0 - epsilon);
  if (quantile)
    *quantile = q;
  const double denom = epsilon * static_cast<double>(rewards.size());
  std::vector<double> w(rewards.size(), 0.0);
  for (std::size_t i = 0; i < rewards.size(); ++i)
    if (rewards[i] > q)
      w[i] = (rewards[i] - q) / denom;
  return w;
}

namespace detail
{

inline StepStats ascend(PolicyNetwork& policy, Adam& opt, const expr::Vocabulary& vocab, const expr::ConstraintSet& cs,
                        std::vector<WeightedSequence>& terms, StepStats stats)
{
  auto s = surrogate(policy, vocab, cs, terms);
  stats.objective = s.value;
  s.gradient = -s.gradient;
  opt.step({policy.parameters().data(), static_cast<std::size_t>(policy.parameters().size())},
           {s.gradient.data(), static_cast<std::size_t>(s.gradient.size())});
  return stats;
}

inline void add_entropy_terms(const SampledBatch& batch, double entropy_weight, std::vector<WeightedSequence>& terms)
{
  const double w = entropy_weight / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (i < terms.size() && terms[i].actions == &batch.sequences[i].actions)
      terms[i].entropy_weight += w;
    else
      terms.push_back({&batch.sequences[i].actions, 0.0, w});
  }
}

} // namespace detail

inline StepStats rspg_step(PolicyNetwork& policy, Adam& opt, const SampledBatch& batch, const expr::Vocabulary& vocab,
                           const expr::ConstraintSet& cs, double epsilon, double entropy_weight)
{
  StepStats stats;
  const auto w = rspg_weights(batch.rewards, epsilon, &stats.quantile);
  std::vector<WeightedSequence> terms;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    terms.push_back({&batch.sequences[i].actions, w[i], 0.0});
    stats.contributing += w[i] > 0.0;
  }
  stats.policy_no_op = stats.contributing == 0;
  detail::add_entropy_terms(batch, entropy_weight, terms);
  return detail::ascend(policy, opt, vocab, cs, terms, stats);
}

// `baseline` holds the EWMA state; NaN means no batch seen yet.
inline StepStats vpg_step(PolicyNetwork& policy, Adam& opt, const SampledBatch& batch, double& baseline,
                          double ewma_alpha, const expr::Vocabulary& vocab, const expr::ConstraintSet& cs,
                          double entropy_weight)
{
  double mean = 0.0;
  for (double r : batch.rewards)
    mean += r;
  mean /= static_cast<double>(batch.size());
  baseline = std::isnan(baseline) ? mean : ewma_alpha * mean + (1.0 - ewma_alpha) * baseline;

  StepStats stats;
  stats.baseline = baseline;
  std::vector<WeightedSequence> terms;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double w = (batch.rewards[i] - baseline) / static_cast<double>(batch.size());
    terms.push_back({&batch.sequences[i].actions, w, 0.0});
    stats.contributing += w != 0.0;
  }
  stats.policy_no_op = stats.contributing == 0;
  detail::add_entropy_terms(batch, entropy_weight, terms);
  return detail::ascend(policy, opt, vocab, cs, terms, stats);
}

inline StepStats pqt_step(PolicyNetwork& policy, Adam& opt, const SampledBatch& batch, MaxRewardPriorityQueue& queue,
                          const expr::Vocabulary& vocab, const expr::ConstraintSet& cs, double entropy_weight)
{
  for (std::size_t i = 0; i < batch.size(); ++i)
    queue.push({batch.rewards[i], batch.sequences[i].actions, batch.sequences[i].tree});
  StepStats stats;
  std::vector<WeightedSequence> terms;
  detail::add_entropy_terms(batch, entropy_weight, terms);
  const double w = 1.0 / static_cast<double>(queue.capacity());
  for (const auto& e : queue.entries())
    terms.push_back({&e.actions, w, 0.0});
  stats.contributing = queue.size();
  return detail::ascend(policy, opt, vocab, cs, terms, stats);
}

struct HistoryRow
{
  std::size_t step = 0;
  double best_reward = 0.0;
  double mean_reward = 0.0;
  std::string best_expression_infix;
};

struct TrainResult
{
  expr::ExpressionTree best;
  double best_reward = 0.0;
  std::vector<HistoryRow> history;
  std::size_t samples_used = 0;
};

// Reward evaluation with a per-run cache keyed by token sequence; uncached
// sequences are optionally spread over worker threads.
class BatchRewarder
{
public:
  BatchRewarder(const Dataset& train, const expr::ConstraintSet& cs, const expr::ConstantFitOptions& fit,
                unsigned threads)
  {
    const unsigned n = std::max(1u, threads);
    for (unsigned i = 0; i < n; ++i)
      workers_.emplace_back(train, cs, fit);
  }

  void evaluate(SampledBatch& batch)
  {
    std::vector<std::size_t> todo;
    std::map<std::vector<int>, std::size_t> first;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& a = batch.sequences[i].actions;
      if (!cache_.count(a) && first.emplace(a, i).second)
        todo.push_back(i);
    }
    std::vector<RewardResult> results(todo.size());
    auto run = [&](std::size_t w) {
      for (std::size_t j = w; j < todo.size(); j += workers_.size())
        results[j] = workers_[w](batch.sequences[todo[j]].tree);
    };
    if (workers_.size() == 1 || todo.size() < 2) {
      run(0);
      for (std::size_t w = 1; w < workers_.size(); ++w)
        run(w);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers_.size(); ++w)
        pool.emplace_back(run, w);
      for (auto& t : pool)
        t.join();
    }
    for (std::size_t j = 0; j < todo.size(); ++j)
      cache_.emplace(batch.sequences[todo[j]].actions, std::move(results[j]));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& r = cache_.at(batch.sequences[i].actions);
      batch.rewards[i] = r.reward;
      batch.sequences[i].tree.constants = r.constants;
    }
  }

  std::size_t cache_size() const { return cache_.size(); }

private:
  std::vector<RewardFunction> workers_;
  std::map<std::vector<int>, RewardResult> cache_;
};

inline TrainResult train(const TrainerConfig& config, const Dataset& data, const expr::Vocabulary& vocab,
                         const expr::ConstraintSet& cs)
{
  config.validate();
  cs.validate();
  data.validate();
  if (vocab.variable_names().size() != data.feature_count())
    throw std::invalid_argument("vocabulary and dataset disagree on the number of features");

  PolicyNetwork policy(vocab.size(), config.hidden, config.seed);
  Adam opt(policy.parameter_count(), config.learning_rate);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  BatchRewarder rewarder(data, cs, config.constant_fit, config.threads);
  MaxRewardPriorityQueue queue(config.queue_k);
  double baseline = std::numeric_limits<double>::quiet_NaN();

  TrainResult result;
  const std::size_t steps = config.sample_budget / config.batch_size;
  for (std::size_t step = 0; step < steps; ++step) {
    auto batch = sample_batch(policy, config.batch_size, vocab, cs, rng);
    rewarder.evaluate(batch);
    result.samples_used += batch.size();

    double mean = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      mean += batch.rewards[i];
      if (batch.rewards[i] > result.best_reward || result.best.tokens.empty()) {
        result.best_reward = batch.rewards[i];
        result.best = batch.sequences[i].tree;
      }
    }
    mean /= static_cast<double>(batch.size());
    result.history.push_back(
        {step + 1, result.best_reward, mean, expr::to_infix(result.best, vocab.variable_names())});
    if (result.best_reward >= config.reward_threshold)
      break;

    switch (config.policy_kind) {
    case PolicyKind::Rspg: rspg_step(policy, opt, batch, vocab, cs, config.epsilon, config.entropy_weight); break;
    case PolicyKind::Vpg:
      vpg_step(policy, opt, batch, baseline, config.ewma_alpha, vocab, cs, config.entropy_weight);
      break;
    case PolicyKind::Pqt: pqt_step(policy, opt, batch, queue, vocab, cs, config.entropy_weight); break;
    }
  }
  return result;
}

} // namespace autopl::dsr
