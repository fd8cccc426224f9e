#pragma once

#include "autopl/constraints.hpp"
#include "autopl/error.hpp"
#include "autopl/expr.hpp"
#include "autopl/vocabulary.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace autopl::dsr
{

// Autoregressive token distribution p(tau | theta). A single-layer GRU reads
// one-hot (parent, sibling) pairs of the position being generated and emits
// logits over the vocabulary. Masked tokens get probability exactly zero.
class PolicyNetwork
{
public:
  PolicyNetwork() = default;

  PolicyNetwork(std::size_t vocab_size, std::size_t hidden, std::uint64_t seed, double init_scale = 0.1)
      : vocab_(static_cast<int>(vocab_size)), hidden_(static_cast<int>(hidden))
  {
    theta_.resize(static_cast<Eigen::Index>(parameter_count()));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-init_scale, init_scale);
    for (Eigen::Index i = 0; i < theta_.size(); ++i)
      theta_[i] = U(rng);
  }

  int vocab_size() const { return vocab_; }
  int hidden_size() const { return hidden_; }
  // parent and sibling each take vocab + 1 slots; the extra one is "empty"
  int input_size() const { return 2 * (vocab_ + 1); }
  int empty_marker() const { return vocab_; }

  std::size_t parameter_count() const
  {
    const std::size_t H = hidden_, D = input_size(), V = vocab_;
    return 3 * H * D + 3 * H * H + 3 * H + V * H + V;
  }

  Eigen::VectorXd& parameters() { return theta_; }
  const Eigen::VectorXd& parameters() const { return theta_; }

  // Typed views into the flat parameter vector.
  template <class Ptr>
  struct ViewsT
  {
    using M = std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>, Eigen::Map<const Eigen::MatrixXd>,
                                 Eigen::Map<Eigen::MatrixXd>>;
    using Vec = std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>, Eigen::Map<const Eigen::VectorXd>,
                                   Eigen::Map<Eigen::VectorXd>>;
    M Wz, Wr, Wn, Uz, Ur, Un;
    Vec bz, br, bn;
    M Wo;
    Vec bo;

    ViewsT(Ptr p, int H, int D, int V)
        : Wz(p, H, D), Wr(p + H * D, H, D), Wn(p + 2 * H * D, H, D), Uz(p + 3 * H * D, H, H),
          Ur(p + 3 * H * D + H * H, H, H), Un(p + 3 * H * D + 2 * H * H, H, H), bz(p + 3 * H * D + 3 * H * H, H),
          br(p + 3 * H * D + 3 * H * H + H, H), bn(p + 3 * H * D + 3 * H * H + 2 * H, H),
          Wo(p + 3 * H * D + 3 * H * H + 3 * H, V, H), bo(p + 3 * H * D + 3 * H * H + 3 * H + V * H, V)
    {
    }
  };
  using Views = ViewsT<const double*>;
  using MutableViews = ViewsT<double*>;

  Views views() const { return Views(theta_.data(), hidden_, input_size(), vocab_); }
  static MutableViews views_of(Eigen::VectorXd& flat, int H, int D, int V) { return MutableViews(flat.data(), H, D, V); }

  // Everything backprop needs from one recurrent step.
  struct StepCache
  {
    Eigen::VectorXd h_prev, z, r, n, u, h;
    Eigen::VectorXd probs; // masked softmax, zeros on masked entries
    int parent = 0;
    int sibling = 0;
    int chosen = 0;
    double entropy = 0.0;
  };

  // Advances the cell and fills probs from the masked logits.
  void step(const Eigen::VectorXd& h_prev, int parent, int sibling, std::span<const char> mask, StepCache& c) const
  {
    const auto v = views();
    const int q = vocab_ + 1 + sibling;
    c.h_prev = h_prev;
    c.parent = parent;
    c.sibling = sibling;
    Eigen::VectorXd az = v.Wz.col(parent) + v.Wz.col(q) + v.Uz * h_prev + v.bz;
    Eigen::VectorXd ar = v.Wr.col(parent) + v.Wr.col(q) + v.Ur * h_prev + v.br;
    c.z = az.unaryExpr([](double a) { return 1.0 / (1.0 + std::exp(-a)); });
    c.r = ar.unaryExpr([](double a) { return 1.0 / (1.0 + std::exp(-a)); });
    c.u = v.Un * h_prev;
    Eigen::VectorXd an = v.Wn.col(parent) + v.Wn.col(q) + v.bn + c.r.cwiseProduct(c.u);
    c.n = an.array().tanh().matrix();
    c.h = (1.0 - c.z.array()).matrix().cwiseProduct(c.n) + c.z.cwiseProduct(h_prev);

    Eigen::VectorXd logits = v.Wo * c.h + v.bo;
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < vocab_; ++i)
      if (mask[i])
        mx = std::max(mx, logits[i]);
    c.probs = Eigen::VectorXd::Zero(vocab_);
    double total = 0.0;
    for (int i = 0; i < vocab_; ++i)
      if (mask[i]) {
        c.probs[i] = std::exp(logits[i] - mx);
        total += c.probs[i];
      }
    c.probs /= total;
    c.entropy = 0.0;
    for (int i = 0; i < vocab_; ++i)
      if (c.probs[i] > 0.0)
        c.entropy -= c.probs[i] * std::log(c.probs[i]);
  }

private:
  int vocab_ = 0;
  int hidden_ = 0;
  Eigen::VectorXd theta_;
};

// One sampled sequence: vocabulary indices and the expression they spell.
struct SequenceRecord
{
  std::vector<int> actions;
  expr::ExpressionTree tree;
};

struct SampledBatch
{
  std::vector<SequenceRecord> sequences;
  std::vector<double> log_probs; // sum of log p over steps
  std::vector<double> entropies; // mean step entropy
  std::vector<double> rewards;   // filled by the trainer

  std::size_t size() const { return sequences.size(); }
};

namespace detail
{

inline int index_or_empty(const std::optional<expr::Token>& t, const expr::Vocabulary& vocab, int empty)
{
  if (!t)
    return empty;
  auto i = vocab.index_of(*t);
  return i ? static_cast<int>(*i) : empty;
}

// Replays a sequence through the policy, invoking visit(cache) per step.
template <class Visit>
void replay(const PolicyNetwork& policy, const expr::Vocabulary& vocab, const expr::ConstraintSet& cs,
            std::span<const int> actions, Visit&& visit)
{
  expr::PrefixState state(cs);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(policy.hidden_size());
  PolicyNetwork::StepCache cache;
  for (int a : actions) {
    auto mask = expr::valid_next_tokens(state, vocab);
    if (!mask.allowed[a])
      throw std::invalid_argument("sequence contains a token its prefix masks out");
    policy.step(h, index_or_empty(state.parent(), vocab, policy.empty_marker()),
                index_or_empty(state.sibling(), vocab, policy.empty_marker()), mask.allowed, cache);
    cache.chosen = a;
    visit(cache);
    h = cache.h;
    state.push(vocab[a]);
  }
}

} // namespace detail

inline SampledBatch sample_batch(const PolicyNetwork& policy, std::size_t n, const expr::Vocabulary& vocab,
                                 const expr::ConstraintSet& cs, std::mt19937_64& rng, std::size_t retry_cap = 0)
{
  if (n < 1)
    throw std::invalid_argument("batch size must be >= 1");
  if (static_cast<int>(vocab.size()) != policy.vocab_size())
    throw std::invalid_argument("policy and vocabulary sizes differ");
  if (retry_cap == 0)
    retry_cap = 100 * n;
  SampledBatch batch;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::size_t dead_ends = 0;
  PolicyNetwork::StepCache cache;
  while (batch.size() < n) {
    expr::PrefixState state(cs);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(policy.hidden_size());
    SequenceRecord rec;
    double logp = 0.0, entropy = 0.0;
    bool dead = false;
    while (!state.complete()) {
      auto mask = expr::valid_next_tokens(state, vocab);
      if (mask.dead_end()) {
        dead = true;
        break;
      }
      policy.step(h, detail::index_or_empty(state.parent(), vocab, policy.empty_marker()),
                  detail::index_or_empty(state.sibling(), vocab, policy.empty_marker()), mask.allowed, cache);
      const double u = U(rng);
      double acc = 0.0;
      int pick = -1;
      for (int i = 0; i < policy.vocab_size(); ++i) {
        if (!mask.allowed[i])
          continue;
        pick = i;
        acc += cache.probs[i];
        if (u < acc)
          break;
      }
      logp += std::log(cache.probs[pick]);
      entropy += cache.entropy;
      rec.actions.push_back(pick);
      rec.tree.tokens.push_back(vocab[pick]);
      h = cache.h;
      state.push(vocab[pick]);
    }
    if (dead) {
      if (++dead_ends > retry_cap)
        throw TrainingError("sampler hit " + std::to_string(dead_ends) + " dead-end prefixes; constraints too tight");
      continue;
    }
    rec.tree.constants.assign(rec.tree.placeholder_count(), 1.0);
    batch.log_probs.push_back(logp);
    batch.entropies.push_back(entropy / static_cast<double>(rec.actions.size()));
    batch.sequences.push_back(std::move(rec));
  }
  batch.rewards.assign(n, 0.0);
  return batch;
}

inline double log_prob(const PolicyNetwork& policy, const expr::Vocabulary& vocab, const expr::ConstraintSet& cs,
                       std::span<const int> actions)
{
  double lp = 0.0;
  detail::replay(policy, vocab, cs, actions, [&](const PolicyNetwork::StepCache& c) { lp += std::log(c.probs[c.chosen]); });
  return lp;
}

// A sequence's contribution to the surrogate objective
//   J = sum_i logp_weight_i * log p(tau_i) + entropy_weight_i * meanH(tau_i).
struct WeightedSequence
{
  const std::vector<int>* actions = nullptr;
  double logp_weight = 0.0;
  double entropy_weight = 0.0;
};

struct SurrogateResult
{
  double value = 0.0;
  Eigen::VectorXd gradient;
};

// Value and analytic gradient (BPTT) of the surrogate. Terms are summed in
// input order.
inline SurrogateResult surrogate(const PolicyNetwork& policy, const expr::Vocabulary& vocab,
                                 const expr::ConstraintSet& cs, std::span<const WeightedSequence> terms)
{
  const int H = policy.hidden_size(), D = policy.input_size(), V = policy.vocab_size();
  SurrogateResult res;
  res.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(policy.parameter_count()));
  auto g = PolicyNetwork::views_of(res.gradient, H, D, V);
  const auto w = policy.views();

  std::vector<PolicyNetwork::StepCache> caches;
  for (const auto& term : terms) {
    if (term.logp_weight == 0.0 && term.entropy_weight == 0.0)
      continue;
    caches.clear();
    detail::replay(policy, vocab, cs, *term.actions, [&](const PolicyNetwork::StepCache& c) { caches.push_back(c); });
    const double T = static_cast<double>(caches.size());
    double lp = 0.0, ent = 0.0;
    for (const auto& c : caches) {
      lp += std::log(c.probs[c.chosen]);
      ent += c.entropy;
    }
    res.value += term.logp_weight * lp + term.entropy_weight * ent / T;

    Eigen::VectorXd gh_next = Eigen::VectorXd::Zero(H);
    for (auto it = caches.rbegin(); it != caches.rend(); ++it) {
      const auto& c = *it;
      // d/dlogits of weight*log p_chosen + (ew/T)*H
      Eigen::VectorXd gl = Eigen::VectorXd::Zero(V);
      for (int j = 0; j < V; ++j) {
        const double p = c.probs[j];
        if (p <= 0.0)
          continue;
        gl[j] = term.logp_weight * ((j == c.chosen ? 1.0 : 0.0) - p) -
                (term.entropy_weight / T) * p * (std::log(p) + c.entropy);
      }
      g.Wo.noalias() += gl * c.h.transpose();
      g.bo += gl;
      Eigen::VectorXd gh = gh_next + w.Wo.transpose() * gl;

      const Eigen::VectorXd gn = gh.cwiseProduct((1.0 - c.z.array()).matrix());
      const Eigen::VectorXd gz = gh.cwiseProduct(c.h_prev - c.n);
      Eigen::VectorXd gprev = gh.cwiseProduct(c.z);

      const Eigen::VectorXd gan = gn.cwiseProduct((1.0 - c.n.array().square()).matrix());
      const int q = V + 1 + c.sibling;
      g.Wn.col(c.parent) += gan;
      g.Wn.col(q) += gan;
      g.bn += gan;
      const Eigen::VectorXd gr = gan.cwiseProduct(c.u);
      const Eigen::VectorXd gu = gan.cwiseProduct(c.r);
      g.Un.noalias() += gu * c.h_prev.transpose();
      gprev.noalias() += w.Un.transpose() * gu;

      const Eigen::VectorXd gar = gr.cwiseProduct(c.r.cwiseProduct((1.0 - c.r.array()).matrix()));
      g.Wr.col(c.parent) += gar;
      g.Wr.col(q) += gar;
      g.br += gar;
      g.Ur.noalias() += gar * c.h_prev.transpose();
      gprev.noalias() += w.Ur.transpose() * gar;

      const Eigen::VectorXd gaz = gz.cwiseProduct(c.z.cwiseProduct((1.0 - c.z.array()).matrix()));
      g.Wz.col(c.parent) += gaz;
      g.Wz.col(q) += gaz;
      g.bz += gaz;
      g.Uz.noalias() += gaz * c.h_prev.transpose();
      gprev.noalias() += w.Uz.transpose() * gaz;

      gh_next = gprev;
    }
  }
  return res;
}

} // namespace autopl::dsr
