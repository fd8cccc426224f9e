#pragma once

#include "autopl/dataset.hpp"
#include "autopl/error.hpp"
#include "autopl/expr.hpp"
#include "autopl/kan/network.hpp"
#include "autopl/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace autopl::kan
{

struct SymbolicFitOptions
{
  std::vector<Family> library = default_library();
  // near-ties within this R^2 window go to the simpler family
  double tie_window = 0.02;
  int a_grid = 21;    // per sign, log-spaced over [a_min, a_max]
  double a_min = 0.01;
  double a_max = 20.0;
  int b_grid = 41;    // uniform over [-b_max, b_max]
  double b_max = 10.0;
  std::size_t grid_points = 256; // samples used during the coarse search
  int refine_iterations = 100;
};

namespace detail
{

// y ~ c * f + d by ordinary least squares; returns SSE (inf if f non-finite).
inline double affine_ols(std::span<const double> f, std::span<const double> y, double& c, double& d)
{
  const double n = static_cast<double>(y.size());
  double mf = 0, my = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(f[i]))
      return std::numeric_limits<double>::infinity();
    mf += f[i];
    my += y[i];
  }
  mf /= n;
  my /= n;
  double sff = 0, sfy = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sff += (f[i] - mf) * (f[i] - mf);
    sfy += (f[i] - mf) * (y[i] - my);
  }
  c = sff > 0 ? sfy / sff : 0.0;
  d = my - c * mf;
  double sse = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = c * f[i] + d - y[i];
    sse += r * r;
  }
  return std::isfinite(sse) ? sse : std::numeric_limits<double>::infinity();
}

inline double r2_from_sse(double sse, double sst)
{
  if (!std::isfinite(sse))
    return -std::numeric_limits<double>::infinity();
  if (sst <= 0.0)
    return sse <= 1e-24 ? 1.0 : -std::numeric_limits<double>::infinity();
  return 1.0 - sse / sst;
}

inline double edge_sse(const SymbolicEdge& e, std::span<const double> x, std::span<const double> y)
{
  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = e(x[i]) - y[i];
    sse += r * r;
  }
  return std::isfinite(sse) ? sse : std::numeric_limits<double>::infinity();
}

// Refines (a, b, c, d), or just (c, d) for identity, by least squares.
inline SymbolicEdge refine_edge(SymbolicEdge e, std::span<const double> x, std::span<const double> y, int iterations)
{
  if (e.family == Family::Zero)
    return e;
  const bool inner = e.family != Family::Identity;
  Eigen::VectorXd p0(inner ? 4 : 2);
  if (inner)
    p0 << e.a, e.b, e.c, e.d;
  else
    p0 << e.c, e.d;
  auto unpack = [&](const Eigen::VectorXd& p) {
    SymbolicEdge t = e;
    if (inner) {
      t.a = p[0];
      t.b = p[1];
    }
    t.c = p[inner ? 2 : 0];
    t.d = p[inner ? 3 : 1];
    return t;
  };
  auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& J) {
    const auto t = unpack(p);
    r.resize(static_cast<Eigen::Index>(x.size()));
    J.resize(r.size(), p.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto ps = t.partials(x[i]);
      r[i] = t(x[i]) - y[i];
      if (inner)
        J.row(i) << ps.a, ps.b, ps.c, ps.d;
      else
        J.row(i) << ps.c, ps.d;
    }
    return r.allFinite() && J.allFinite();
  };
  auto res = levenberg_marquardt(model, p0, iterations);
  if (!std::isfinite(res.sse))
    return e;
  return unpack(res.x);
}

} // namespace detail

// Fits y ~ c * f(a x + b) + d for each library family and picks the best R^2,
// preferring the simpler family on near-ties.
inline SymbolicEdge fit_symbolic_edge(std::span<const double> x, std::span<const double> y,
                                      const SymbolicFitOptions& opt = {})
{
  if (x.size() != y.size())
    throw std::invalid_argument("edge samples: x and y differ in length");
  if (x.size() < 20)
    throw std::invalid_argument("symbolic fitting needs at least 20 samples");

  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sst = 0;
  for (double v : y)
    sst += (v - my) * (v - my);

  // evenly strided subsample, sorted by x, for the coarse search
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return x[i] < x[j]; });
  std::vector<double> gx, gy;
  const std::size_t m = std::min(opt.grid_points, x.size());
  for (std::size_t k = 0; k < m; ++k) {
    const auto i = order[k * (x.size() - 1) / std::max<std::size_t>(m - 1, 1)];
    gx.push_back(x[i]);
    gy.push_back(y[i]);
  }

  std::vector<double> as;
  for (int i = 0; i < opt.a_grid; ++i) {
    const double t = opt.a_grid > 1 ? static_cast<double>(i) / (opt.a_grid - 1) : 0.0;
    const double a = opt.a_min * std::pow(opt.a_max / opt.a_min, t);
    as.push_back(a);
    as.push_back(-a);
  }
  std::vector<double> bs;
  for (int i = 0; i < opt.b_grid; ++i)
    bs.push_back(opt.b_grid > 1 ? -opt.b_max + 2.0 * opt.b_max * i / (opt.b_grid - 1) : 0.0);

  std::vector<SymbolicEdge> candidates;
  std::vector<double> f(gx.size());
  for (Family fam : opt.library) {
    SymbolicEdge best;
    best.family = fam;
    double best_sse = std::numeric_limits<double>::infinity();
    if (fam == Family::Zero) {
      best.c = 0.0;
      best.d = my;
      best_sse = sst;
    } else if (fam == Family::Identity) {
      best_sse = detail::affine_ols(x, y, best.c, best.d);
    } else {
      for (double a : as)
        for (double b : bs) {
          for (std::size_t i = 0; i < gx.size(); ++i)
            f[i] = family_value(fam, a * gx[i] + b);
          double c = 0.0, d = 0.0;
          const double sse = detail::affine_ols(f, gy, c, d);
          if (sse < best_sse) {
            best_sse = sse;
            best.a = a;
            best.b = b;
            best.c = c;
            best.d = d;
          }
        }
      if (!std::isfinite(best_sse))
        continue;
      // re-solve c, d on the full sample before refining
      std::vector<double> full(x.size());
      for (std::size_t i = 0; i < x.size(); ++i)
        full[i] = family_value(fam, best.a * x[i] + best.b);
      if (!std::isfinite(detail::affine_ols(full, y, best.c, best.d)))
        continue;
      best = detail::refine_edge(best, x, y, opt.refine_iterations);
      best_sse = detail::edge_sse(best, x, y);
    }
    best.fit_r2 = detail::r2_from_sse(best_sse, sst);
    if (std::isfinite(best.fit_r2))
      candidates.push_back(best);
  }

  if (candidates.empty()) {
    SymbolicEdge zero;
    zero.d = my;
    zero.fit_r2 = detail::r2_from_sse(sst, sst);
    return zero;
  }
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates)
    top = std::max(top, c.fit_r2);
  // simplest family inside the window; equal ranks go to the smaller phase |b|
  const SymbolicEdge* pick = nullptr;
  for (const auto& c : candidates) {
    if (c.fit_r2 < top - opt.tie_window)
      continue;
    if (!pick || complexity_rank(c.family) < complexity_rank(pick->family) ||
        (complexity_rank(c.family) == complexity_rank(pick->family) && std::abs(c.b) < std::abs(pick->b)))
      pick = &c;
  }
  return *pick;
}

struct EdgeFitReport
{
  std::size_t layer = 0, from = 0, to = 0;
  Family family = Family::Zero;
  double fit_r2 = 0.0;
};

// Replaces every active edge with its best symbolic fit against the edge's
// observed (input, output) pairs on X.
inline std::vector<EdgeFitReport> auto_symbolic(KanNetwork& net, const Matrix& X, const SymbolicFitOptions& opt = {})
{
  const auto nodes = net.trace(X);
  std::vector<EdgeFitReport> report;
  std::vector<double> xs(X.rows()), ys(X.rows());
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto& layer = net.layer(l);
    for (std::size_t p = 0; p < layer.d_in; ++p)
      for (std::size_t q = 0; q < layer.d_out; ++q) {
        auto& e = layer.edge(p, q);
        if (!e.active)
          continue;
        for (std::size_t n = 0; n < X.rows(); ++n) {
          xs[n] = nodes[l](static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
          ys[n] = e(layer.basis, xs[n]);
        }
        auto fit = fit_symbolic_edge(xs, ys, opt);
        report.push_back({l, p, q, fit.family, fit.fit_r2});
        e.symbolic = fit;
      }
  }
  return report;
}

struct RetrainReport
{
  double mse_before = 0.0;
  double mse_after = 0.0;
  int iterations = 0;
};

namespace detail
{

struct AffineSlot
{
  SymbolicEdge* edge;
  int first; // index into the flat vector
  int count; // 1 (d), 2 (c, d) or 4 (a, b, c, d)
};

inline std::vector<AffineSlot> affine_slots(KanNetwork& net)
{
  std::vector<AffineSlot> slots;
  int at = 0;
  for (auto& layer : net.layers())
    for (auto& e : layer.edges) {
      if (!e.active)
        continue;
      const int count = e.symbolic->family == Family::Zero ? 1 : (e.symbolic->family == Family::Identity ? 2 : 4);
      slots.push_back({&*e.symbolic, at, count});
      at += count;
    }
  return slots;
}

inline void write_affine(const std::vector<AffineSlot>& slots, const Eigen::VectorXd& v)
{
  for (const auto& s : slots) {
    auto& e = *s.edge;
    if (s.count == 4) {
      e.a = v[s.first];
      e.b = v[s.first + 1];
    }
    if (s.count >= 2)
      e.c = v[s.first + s.count - 2];
    e.d = v[s.first + s.count - 1];
  }
}

} // namespace detail

inline double mse(const KanNetwork& net, const Dataset& data)
{
  const auto pred = net.forward(data.features);
  double acc = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    acc += (pred[i] - data.target[i]) * (pred[i] - data.target[i]);
  return acc / static_cast<double>(pred.size());
}

// Re-fits only the affine parameters of the frozen symbolic edges against the
// end-to-end squared error. Never increases the training MSE.
inline RetrainReport retrain_affine(KanNetwork& net, const Dataset& data, int iterations = 50)
{
  if (!net.fully_symbolic())
    throw std::invalid_argument("retrain_affine needs every active edge to be symbolic");
  data.validate();
  auto slots = detail::affine_slots(net);
  int total = 0;
  for (const auto& s : slots)
    total += s.count;
  Eigen::VectorXd p0(total);
  for (const auto& s : slots) {
    const auto& e = *s.edge;
    if (s.count == 4) {
      p0[s.first] = e.a;
      p0[s.first + 1] = e.b;
    }
    if (s.count >= 2)
      p0[s.first + s.count - 2] = e.c;
    p0[s.first + s.count - 1] = e.d;
  }

  RetrainReport report;
  report.mse_before = mse(net, data);
  if (!std::isfinite(report.mse_before)) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      const auto nodes = net.trace(data.features);
      for (std::size_t p = 0; p < net.layer(l).d_in; ++p)
        for (std::size_t q = 0; q < net.layer(l).d_out; ++q)
          for (Eigen::Index n = 0; n < nodes[l].rows(); ++n)
            if (!std::isfinite(net.layer(l).edge(p, q)(net.layer(l).basis, nodes[l](n, p))))
              throw TrainingError("non-finite loss: symbolic edge (layer " + std::to_string(l) + ", " +
                                  std::to_string(p) + " -> " + std::to_string(q) + ") is undefined on the data");
    }
    throw TrainingError("non-finite loss before affine retraining");
  }

  const Eigen::Index N = static_cast<Eigen::Index>(data.size());
  auto model = [&](const Eigen::VectorXd& v, Eigen::VectorXd& r, Eigen::MatrixXd& J) {
    detail::write_affine(slots, v);
    const auto nodes = net.trace(data.features);
    r.resize(N);
    for (Eigen::Index n = 0; n < N; ++n)
      r[n] = net.output_scale * nodes.back()(n, 0) + net.output_offset - data.target[n];
    J = Eigen::MatrixXd::Zero(N, v.size());
    Eigen::MatrixXd sens = Eigen::MatrixXd::Constant(N, 1, net.output_scale);
    std::size_t slot = slots.size();
    for (std::size_t l = net.layer_count(); l-- > 0;) {
      auto& layer = net.layer(l);
      Eigen::MatrixXd down = Eigen::MatrixXd::Zero(N, layer.d_in);
      // slots are stored in forward edge order; walk this layer's block backwards
      std::size_t active = 0;
      for (const auto& e : layer.edges)
        active += e.active;
      slot -= active;
      std::size_t k = slot;
      for (std::size_t p = 0; p < layer.d_in; ++p)
        for (std::size_t q = 0; q < layer.d_out; ++q) {
          const auto& e = layer.edge(p, q);
          if (!e.active)
            continue;
          const auto& s = slots[k++];
          for (Eigen::Index n = 0; n < N; ++n) {
            const auto ps = e.symbolic->partials(nodes[l](n, p));
            const double g = sens(n, q);
            if (s.count == 4) {
              J(n, s.first) = g * ps.a;
              J(n, s.first + 1) = g * ps.b;
            }
            if (s.count >= 2)
              J(n, s.first + s.count - 2) = g * ps.c;
            J(n, s.first + s.count - 1) = g * ps.d;
            down(n, p) += g * ps.x;
          }
        }
      sens = std::move(down);
    }
    return r.allFinite() && J.allFinite();
  };
  auto res = levenberg_marquardt(model, p0, iterations);
  detail::write_affine(slots, res.x);
  report.iterations = res.iterations;
  report.mse_after = mse(net, data);
  return report;
}

namespace detail
{

using Tokens = std::vector<expr::Token>;

inline Tokens lit(double v) { return {expr::Token::literal(v)}; }

inline Tokens binary(expr::Op op, const Tokens& a, const Tokens& b)
{
  Tokens t{expr::Token::make(op)};
  t.insert(t.end(), a.begin(), a.end());
  t.insert(t.end(), b.begin(), b.end());
  return t;
}

inline Tokens unary(expr::Op op, const Tokens& a)
{
  Tokens t{expr::Token::make(op)};
  t.insert(t.end(), a.begin(), a.end());
  return t;
}

// scale * c * f(a' * x + b), with any additive constant returned through k.
inline Tokens edge_term(const SymbolicEdge& e, const Tokens& x, double input_scale, double scale, double& k)
{
  const double a = e.a / input_scale;
  const double c = scale * e.c;
  k += scale * e.d;
  if (e.family == Family::Identity) {
    k += c * e.b;
    return binary(expr::Op::Mul, lit(c * a), x);
  }
  Tokens inner = a == 1.0 ? x : binary(expr::Op::Mul, lit(a), x);
  if (e.b != 0.0)
    inner = binary(expr::Op::Add, inner, lit(e.b));
  switch (e.family) {
  case Family::Log10: return binary(expr::Op::Mul, lit(c), unary(expr::Op::Log10, inner));
  case Family::Square: return binary(expr::Op::Mul, lit(c), unary(expr::Op::Square, inner));
  case Family::Sqrt: return binary(expr::Op::Mul, lit(c), unary(expr::Op::Sqrt, inner));
  case Family::Exp: return binary(expr::Op::Mul, lit(c), unary(expr::Op::Exp, inner));
  case Family::Cube: return binary(expr::Op::Mul, lit(c), unary(expr::Op::Cube, inner));
  case Family::Sin: return binary(expr::Op::Mul, lit(c), unary(expr::Op::Sin, inner));
  case Family::Cos: return binary(expr::Op::Mul, lit(c), unary(expr::Op::Cos, inner));
  case Family::ReciprocalSquare: return binary(expr::Op::Div, lit(c), unary(expr::Op::Square, inner));
  default: return {};
  }
}

} // namespace detail

// Composes the symbolic edges into one expression over the raw input
// variables: input scales are folded into the inner affines and the output
// affine into the last layer.
inline expr::ExpressionTree extract_expression(const KanNetwork& net)
{
  if (!net.fully_symbolic())
    throw std::invalid_argument("extract_expression needs every active edge to be symbolic");
  if (net.disconnected().back()[0])
    throw std::invalid_argument("output node is disconnected");

  std::vector<detail::Tokens> current;
  for (std::size_t p = 0; p < net.shape().front(); ++p)
    current.push_back({expr::Token::variable(static_cast<int>(p))});

  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& layer = net.layer(l);
    const bool last = l + 1 == net.layer_count();
    const double scale = last ? net.output_scale : 1.0;
    std::vector<detail::Tokens> next;
    for (std::size_t q = 0; q < layer.d_out; ++q) {
      double k = last ? net.output_offset : 0.0;
      detail::Tokens sum;
      for (std::size_t p = 0; p < layer.d_in; ++p) {
        const auto& e = layer.edge(p, q);
        if (!e.active)
          continue;
        const double in_scale = l == 0 && !net.input_scale.empty() ? net.input_scale[p] : 1.0;
        auto term = detail::edge_term(*e.symbolic, current[p], in_scale, scale, k);
        if (term.empty())
          continue;
        sum = sum.empty() ? term : detail::binary(expr::Op::Add, sum, term);
      }
      if (sum.empty())
        sum = detail::lit(k);
      else if (k != 0.0)
        sum = detail::binary(expr::Op::Add, sum, detail::lit(k));
      next.push_back(std::move(sum));
    }
    current = std::move(next);
  }
  return {current[0], {}};
}

} // namespace autopl::kan
