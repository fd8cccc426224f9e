#pragma once

#include "autopl/adam.hpp"
#include "autopl/dataset.hpp"
#include "autopl/error.hpp"
#include "autopl/kan/bspline.hpp"
#include "autopl/kan/family.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace autopl::kan
{

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double silu_slope(double x)
{
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

struct KanEdge
{
  std::vector<double> coeffs;
  double w_base = 0.0;
  double w_spline = 0.0;
  bool active = true;
  std::optional<SymbolicEdge> symbolic;

  double spline(const BSplineBasis& basis, double x) const
  {
    const auto l = basis.local(x);
    double s = 0.0;
    for (int r = 0; r <= basis.degree(); ++r)
      s += coeffs[l.first + r] * l.value[r];
    return s;
  }

  double operator()(const BSplineBasis& basis, double x) const
  {
    if (!active)
      return 0.0;
    if (symbolic)
      return (*symbolic)(x);
    return w_base * silu(x) + w_spline * spline(basis, x);
  }
};

struct KanLayer
{
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  BSplineBasis basis;
  std::vector<KanEdge> edges; // edge (p -> q) at p * d_out + q

  KanEdge& edge(std::size_t p, std::size_t q) { return edges[p * d_out + q]; }
  const KanEdge& edge(std::size_t p, std::size_t q) const { return edges[p * d_out + q]; }
};

struct KanTrainConfig
{
  std::vector<std::size_t> shape;
  int grid = 5;
  int order = 3;
  int steps = 100;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double learning_rate = 0.02;
  double domain_margin = 0.05;
  // Off: every layer uses [-1, 1 + domain_margin]. On: hidden layers take
  // their domain from the initial activation range.
  bool fit_hidden_domains = false;

  void validate() const
  {
    if (shape.size() < 2)
      throw std::invalid_argument("KAN shape needs at least an input and an output width");
    for (auto w : shape)
      if (w < 1)
        throw std::invalid_argument("KAN layer widths must be >= 1");
    if (shape.back() != 1)
      throw std::invalid_argument("KAN output width must be 1");
    if (grid < 1)
      throw std::invalid_argument("grid must be >= 1");
    if (order < 1 || order > BSplineBasis::kMaxOrder)
      throw std::invalid_argument("order must lie in [1, 8]");
    if (steps < 0)
      throw std::invalid_argument("steps must be >= 0");
    if (!(lambda >= 0.0))
      throw std::invalid_argument("lambda must be >= 0");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("learning_rate must be positive");
  }
};

class KanNetwork
{
public:
  KanNetwork() = default;

  // Random initialization: residual weight U(-1,1)/sqrt(d_in), spline weight
  // 1/sqrt(d_in), small random control points.
  static KanNetwork create(const std::vector<std::size_t>& shape, int grid, int order, std::uint64_t seed,
                           double lo = -1.0, double hi = 1.05)
  {
    KanTrainConfig probe;
    probe.shape = shape;
    probe.grid = grid;
    probe.order = order;
    probe.validate();
    KanNetwork net;
    net.shape_ = shape;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (std::size_t l = 0; l + 1 < shape.size(); ++l) {
      KanLayer layer;
      layer.d_in = shape[l];
      layer.d_out = shape[l + 1];
      layer.basis = BSplineBasis(grid, order, lo, hi);
      const double s = 1.0 / std::sqrt(static_cast<double>(layer.d_in));
      for (std::size_t e = 0; e < layer.d_in * layer.d_out; ++e) {
        KanEdge edge;
        edge.w_base = U(rng) * s;
        edge.w_spline = s;
        edge.coeffs.resize(layer.basis.size());
        for (auto& c : edge.coeffs)
          c = 0.1 * U(rng);
        layer.edges.push_back(std::move(edge));
      }
      net.layers_.push_back(std::move(layer));
    }
    return net;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t layer_count() const { return layers_.size(); }
  KanLayer& layer(std::size_t l) { return layers_[l]; }
  const KanLayer& layer(std::size_t l) const { return layers_[l]; }
  std::vector<KanLayer>& layers() { return layers_; }
  const std::vector<KanLayer>& layers() const { return layers_; }

  // Scales the raw inputs were divided by; empty when inputs are raw.
  std::vector<double> input_scale;
  std::vector<std::string> feature_names;
  // prediction = output_scale * (sum at the output node) + output_offset
  double output_scale = 1.0;
  double output_offset = 0.0;

  // Node values of every layer, layer 0 being the input.
  std::vector<Eigen::MatrixXd> trace(const Matrix& X) const
  {
    if (X.cols() != shape_.front())
      throw std::invalid_argument("input has " + std::to_string(X.cols()) + " columns, network expects " +
                                  std::to_string(shape_.front()));
    std::vector<Eigen::MatrixXd> nodes;
    Eigen::MatrixXd in(X.rows(), X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r)
      for (std::size_t c = 0; c < X.cols(); ++c)
        in(r, c) = X(r, c);
    nodes.push_back(std::move(in));
    for (const auto& layer : layers_)
      nodes.push_back(layer_forward(layer, nodes.back()));
    return nodes;
  }

  static Eigen::MatrixXd layer_forward(const KanLayer& layer, const Eigen::MatrixXd& in)
  {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(in.rows(), layer.d_out);
    for (std::size_t p = 0; p < layer.d_in; ++p)
      for (std::size_t q = 0; q < layer.d_out; ++q) {
        const auto& e = layer.edge(p, q);
        if (!e.active)
          continue;
        for (Eigen::Index n = 0; n < in.rows(); ++n)
          out(n, q) += e(layer.basis, in(n, p));
      }
    return out;
  }

  std::vector<double> forward(const Matrix& X) const
  {
    const auto nodes = trace(X);
    const auto& last = nodes.back();
    std::vector<double> y(last.rows());
    for (Eigen::Index n = 0; n < last.rows(); ++n)
      y[n] = output_scale * last(n, 0) + output_offset;
    return y;
  }

  // True when every active edge carries a symbolic replacement.
  bool fully_symbolic() const
  {
    for (const auto& layer : layers_)
      for (const auto& e : layer.edges)
        if (e.active && !e.symbolic)
          return false;
    return true;
  }

  std::size_t active_edge_count() const
  {
    std::size_t n = 0;
    for (const auto& layer : layers_)
      for (const auto& e : layer.edges)
        n += e.active;
    return n;
  }

  // Nodes (per layer, layer 0 = inputs) with no active incoming edge.
  std::vector<std::vector<bool>> disconnected() const
  {
    std::vector<std::vector<bool>> out(shape_.size());
    out[0].assign(shape_[0], false);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      out[l + 1].assign(shape_[l + 1], true);
      for (std::size_t p = 0; p < layers_[l].d_in; ++p)
        for (std::size_t q = 0; q < layers_[l].d_out; ++q)
          if (layers_[l].edge(p, q).active)
            out[l + 1][q] = false;
    }
    return out;
  }

  // --- spline parameters as one flat vector (active, non-symbolic edges)

  std::size_t spline_parameter_count() const
  {
    std::size_t n = 0;
    for (const auto& layer : layers_)
      for (const auto& e : layer.edges)
        if (e.active && !e.symbolic)
          n += 2 + e.coeffs.size();
    return n;
  }

  std::vector<double> spline_parameters() const
  {
    std::vector<double> out;
    for (const auto& layer : layers_)
      for (const auto& e : layer.edges)
        if (e.active && !e.symbolic) {
          out.push_back(e.w_base);
          out.push_back(e.w_spline);
          out.insert(out.end(), e.coeffs.begin(), e.coeffs.end());
        }
    return out;
  }

  void set_spline_parameters(std::span<const double> v)
  {
    if (v.size() != spline_parameter_count())
      throw std::invalid_argument("spline parameter vector has the wrong length");
    std::size_t i = 0;
    for (auto& layer : layers_)
      for (auto& e : layer.edges)
        if (e.active && !e.symbolic) {
          e.w_base = v[i++];
          e.w_spline = v[i++];
          for (auto& c : e.coeffs)
            c = v[i++];
        }
  }

private:
  std::vector<std::size_t> shape_;
  std::vector<KanLayer> layers_;
};

struct LossAndGradient
{
  double mse = 0.0;
  double reg = 0.0;
  double loss = 0.0; // mse + lambda * reg
  std::vector<double> gradient; // w.r.t. spline_parameters()
};

// Objective on standardized targets: mean((s - t)^2) + lambda * sum_e mean|phi_e|
// where s is the output-node sum and t = (y - output_offset) / output_scale.
inline LossAndGradient loss_and_gradient(const KanNetwork& net, const Matrix& X, std::span<const double> y,
                                         double lambda, bool with_gradient = true)
{
  const auto nodes = net.trace(X);
  const Eigen::Index N = static_cast<Eigen::Index>(X.rows());
  LossAndGradient out;
  Eigen::VectorXd resid(N);
  for (Eigen::Index n = 0; n < N; ++n)
    resid[n] = nodes.back()(n, 0) - (y[n] - net.output_offset) / net.output_scale;
  out.mse = resid.squaredNorm() / static_cast<double>(N);

  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& layer = net.layer(l);
    for (std::size_t p = 0; p < layer.d_in; ++p)
      for (std::size_t q = 0; q < layer.d_out; ++q) {
        const auto& e = layer.edge(p, q);
        if (!e.active)
          continue;
        double acc = 0.0;
        for (Eigen::Index n = 0; n < N; ++n)
          acc += std::abs(e(layer.basis, nodes[l](n, p)));
        out.reg += acc / static_cast<double>(N);
      }
  }
  out.loss = out.mse + lambda * out.reg;
  if (!std::isfinite(out.loss)) {
    for (std::size_t l = 0; l < net.layer_count(); ++l)
      for (std::size_t p = 0; p < net.layer(l).d_in; ++p)
        for (std::size_t q = 0; q < net.layer(l).d_out; ++q)
          for (Eigen::Index n = 0; n < N; ++n)
            if (!std::isfinite(net.layer(l).edge(p, q)(net.layer(l).basis, nodes[l](n, p))))
              throw TrainingError("non-finite loss: edge (layer " + std::to_string(l) + ", " + std::to_string(p) +
                                  " -> " + std::to_string(q) + ") produced a non-finite output");
    throw TrainingError("non-finite loss");
  }
  if (!with_gradient)
    return out;

  // offsets of each trainable edge in the flat vector
  std::vector<std::vector<std::ptrdiff_t>> offset(net.layer_count());
  std::ptrdiff_t total = 0;
  for (std::size_t l = 0; l < net.layer_count(); ++l)
    for (const auto& e : net.layer(l).edges) {
      offset[l].push_back(e.active && !e.symbolic ? total : -1);
      if (e.active && !e.symbolic)
        total += 2 + static_cast<std::ptrdiff_t>(e.coeffs.size());
    }
  out.gradient.assign(static_cast<std::size_t>(total), 0.0);

  Eigen::MatrixXd upstream = (2.0 / static_cast<double>(N)) * resid;
  const double reg_scale = lambda / static_cast<double>(N);
  for (std::size_t l = net.layer_count(); l-- > 0;) {
    const auto& layer = net.layer(l);
    const auto& in = nodes[l];
    Eigen::MatrixXd down = Eigen::MatrixXd::Zero(N, layer.d_in);
    const int deg = layer.basis.degree();
    for (std::size_t p = 0; p < layer.d_in; ++p)
      for (std::size_t q = 0; q < layer.d_out; ++q) {
        const auto& e = layer.edge(p, q);
        if (!e.active)
          continue;
        const auto off = offset[l][p * layer.d_out + q];
        for (Eigen::Index n = 0; n < N; ++n) {
          const double x = in(n, p);
          double g = upstream(n, q);
          if (e.symbolic) {
            const auto ps = e.symbolic->partials(x);
            if (lambda > 0.0)
              g += reg_scale * ((*e.symbolic)(x) > 0 ? 1.0 : ((*e.symbolic)(x) < 0 ? -1.0 : 0.0));
            down(n, p) += g * ps.x;
            continue;
          }
          const auto loc = layer.basis.local(x);
          double s = 0.0, ds = 0.0;
          for (int r = 0; r <= deg; ++r) {
            s += e.coeffs[loc.first + r] * loc.value[r];
            ds += e.coeffs[loc.first + r] * loc.slope[r];
          }
          const double b = silu(x);
          if (lambda > 0.0) {
            const double phi = e.w_base * b + e.w_spline * s;
            g += reg_scale * (phi > 0 ? 1.0 : (phi < 0 ? -1.0 : 0.0));
          }
          double* grad = out.gradient.data() + off;
          grad[0] += g * b;
          grad[1] += g * s;
          for (int r = 0; r <= deg; ++r)
            grad[2 + loc.first + r] += g * e.w_spline * loc.value[r];
          down(n, p) += g * (e.w_base * silu_slope(x) + e.w_spline * ds);
        }
      }
    upstream = std::move(down);
  }
  return out;
}

// Sets every hidden layer's spline domain to the range its inputs take on X
// (widened by `margin` of the span on each side).
inline void fit_hidden_domains(KanNetwork& net, const Matrix& X, double margin = 0.1)
{
  auto nodes = net.trace(X);
  for (std::size_t l = 1; l < net.layer_count(); ++l) {
    const double lo = nodes[l].minCoeff(), hi = nodes[l].maxCoeff();
    const double span = std::max(hi - lo, 1e-3);
    auto& basis = net.layer(l).basis;
    basis = BSplineBasis(basis.grid(), basis.order(), lo - margin * span, hi + margin * span);
    nodes = net.trace(X); // later layers see the re-domained outputs
  }
}

struct TrainReport
{
  std::vector<double> loss_history; // objective per step, before the update
  double initial_mse = 0.0;
  double final_mse = 0.0;
};

// Full-batch Adam on the spline parameters. The returned network holds the
// parameters with the lowest objective among those whose MSE does not exceed
// the initial MSE.
inline TrainReport train(KanNetwork& net, const Dataset& data, const KanTrainConfig& cfg)
{
  cfg.validate();
  data.validate();
  if (data.feature_count() != net.shape().front())
    throw std::invalid_argument("dataset has " + std::to_string(data.feature_count()) +
                                " features, network expects " + std::to_string(net.shape().front()));
  if (data.size() < 2)
    throw DataError("training needs at least two rows");

  TrainReport report;
  auto params = net.spline_parameters();
  Adam opt(params.size(), cfg.learning_rate);
  auto current = loss_and_gradient(net, data.features, data.target, cfg.lambda);
  report.initial_mse = current.mse;
  auto best = params;
  double best_loss = current.loss;
  for (int step = 0; step < cfg.steps; ++step) {
    report.loss_history.push_back(current.loss);
    opt.step(params, current.gradient);
    net.set_spline_parameters(params);
    current = loss_and_gradient(net, data.features, data.target, cfg.lambda);
    if (current.loss < best_loss && current.mse <= report.initial_mse) {
      best_loss = current.loss;
      best = params;
    }
  }
  net.set_spline_parameters(best);
  report.final_mse = loss_and_gradient(net, data.features, data.target, cfg.lambda, false).mse;
  return report;
}

// Builds a network for `data`, standardizing the target through the output
// affine and recording the feature normalization, then trains it.
inline KanNetwork fit(const Dataset& data, const KanTrainConfig& cfg, TrainReport* report = nullptr)
{
  cfg.validate();
  if (cfg.shape.front() != data.feature_count())
    throw std::invalid_argument("shape[0] must equal the feature count (" + std::to_string(data.feature_count()) + ")");
  auto net = KanNetwork::create(cfg.shape, cfg.grid, cfg.order, cfg.seed, -1.0, 1.0 + cfg.domain_margin);
  net.feature_names = data.feature_names;
  if (data.norm)
    net.input_scale = *data.norm;
  double mean = 0.0;
  for (double v : data.target)
    mean += v;
  mean /= static_cast<double>(data.size());
  double var = 0.0;
  for (double v : data.target)
    var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(data.size()));
  net.output_offset = mean;
  net.output_scale = sd > 0.0 ? sd : 1.0;
  if (cfg.fit_hidden_domains)
    fit_hidden_domains(net, data.features);
  auto r = train(net, data, cfg);
  if (report)
    *report = std::move(r);
  return net;
}

// Mean |edge output| over X, normalized so each layer's maximum is 1.
inline std::vector<std::vector<double>> edge_importance(const KanNetwork& net, const Matrix& X)
{
  const auto nodes = net.trace(X);
  std::vector<std::vector<double>> scores(net.layer_count());
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& layer = net.layer(l);
    scores[l].assign(layer.edges.size(), 0.0);
    for (std::size_t p = 0; p < layer.d_in; ++p)
      for (std::size_t q = 0; q < layer.d_out; ++q) {
        const auto& e = layer.edge(p, q);
        if (!e.active)
          continue;
        double acc = 0.0;
        for (Eigen::Index n = 0; n < nodes[l].rows(); ++n)
          acc += std::abs(e(layer.basis, nodes[l](n, p)));
        scores[l][p * layer.d_out + q] = acc / static_cast<double>(nodes[l].rows());
      }
    const double mx = *std::max_element(scores[l].begin(), scores[l].end());
    if (mx > 0.0)
      for (auto& s : scores[l])
        s /= mx;
  }
  return scores;
}

// Deactivates edges whose importance on X is below threshold. Returns the
// number of edges pruned; throws when a layer would lose every edge.
inline std::size_t prune(KanNetwork& net, const Matrix& X, double threshold)
{
  const auto scores = edge_importance(net, X);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    bool any = false;
    for (std::size_t i = 0; i < scores[l].size(); ++i)
      any = any || (net.layer(l).edges[i].active && !(scores[l][i] < threshold));
    if (!any)
      throw std::invalid_argument("threshold " + std::to_string(threshold) + " would prune every edge of layer " +
                                  std::to_string(l));
  }
  std::size_t pruned = 0;
  for (std::size_t l = 0; l < net.layer_count(); ++l)
    for (std::size_t i = 0; i < scores[l].size(); ++i) {
      auto& e = net.layer(l).edges[i];
      if (e.active && scores[l][i] < threshold) {
        e.active = false;
        e.symbolic.reset();
        ++pruned;
      }
    }
  return pruned;
}

} // namespace autopl::kan
