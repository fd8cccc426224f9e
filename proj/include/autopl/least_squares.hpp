#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace autopl
{

struct LeastSquaresResult
{
  Eigen::VectorXd x;
  double sse = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int accepted = 0;
};

// Damped Gauss-Newton (Levenberg-Marquardt). `model(x, r, J)` fills the
// residual vector and its Jacobian and returns false when either is
// non-finite. Only steps that lower the sum of squares are taken, so the
// result is never worse than the start.
template <class Model>
LeastSquaresResult levenberg_marquardt(Model&& model, Eigen::VectorXd x0, int max_iterations, double tolerance = 1e-15)
{
  LeastSquaresResult res;
  res.x = std::move(x0);
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  if (!model(res.x, r, J))
    return res;
  res.sse = r.squaredNorm();
  double mu = 1e-3;
  Eigen::VectorXd r_try;
  Eigen::MatrixXd J_try;
  for (int it = 0; it < max_iterations; ++it) {
    res.iterations = it + 1;
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool improved = false;
    while (mu < 1e12) {
      Eigen::MatrixXd D = A;
      for (Eigen::Index i = 0; i < A.rows(); ++i)
        D(i, i) += mu * (A(i, i) + 1e-12);
      const Eigen::VectorXd step = D.ldlt().solve(-g);
      if (!step.allFinite()) {
        mu *= 10.0;
        continue;
      }
      Eigen::VectorXd x_try = res.x + step;
      if (model(x_try, r_try, J_try)) {
        const double sse = r_try.squaredNorm();
        if (sse < res.sse) {
          const double gain = res.sse - sse;
          res.x = std::move(x_try);
          r.swap(r_try);
          J.swap(J_try);
          res.sse = sse;
          ++res.accepted;
          mu = std::max(mu / 3.0, 1e-12);
          improved = true;
          if (gain <= tolerance * (1.0 + sse))
            return res;
          break;
        }
      }
      mu *= 10.0;
    }
    if (!improved)
      break;
  }
  return res;
}

} // namespace autopl
