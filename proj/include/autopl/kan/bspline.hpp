#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace autopl::kan
{

// Uniform B-spline basis of order k (polynomial degree k - 1) over G grid
// intervals on [lo, hi]. The knot vector is extended by k - 1 knots on each
// side so that G + k - 1 basis functions sum to one everywhere on [lo, hi].
class BSplineBasis
{
public:
  static constexpr int kMaxOrder = 8;

  BSplineBasis() = default;
  BSplineBasis(int grid, int order, double lo, double hi) : grid_(grid), order_(order), lo_(lo), hi_(hi)
  {
    if (grid < 1)
      throw std::invalid_argument("grid count must be >= 1");
    if (order < 1 || order > kMaxOrder)
      throw std::invalid_argument("spline order must lie in [1, 8]");
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
      throw std::invalid_argument("spline domain must be a finite interval with lo < hi");
    h_ = (hi - lo) / grid;
  }

  int grid() const { return grid_; }
  int order() const { return order_; }
  int degree() const { return order_ - 1; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int size() const { return grid_ + order_ - 1; }

  double knot(int j) const
  {
    // interior knots are exact grid points; index 0 is lo - degree * h
    const int i = j - degree();
    if (i == grid_)
      return hi_;
    return lo_ + i * h_;
  }

  std::vector<double> knots() const
  {
    std::vector<double> t;
    for (int j = 0; j <= grid_ + 2 * degree(); ++j)
      t.push_back(knot(j));
    return t;
  }

  double clamp(double x) const { return std::clamp(x, lo_, hi_); }
  bool inside(double x) const { return x >= lo_ && x <= hi_; }

  // Nonzero basis values at (clamped) x: B_{first}, ..., B_{first + degree}.
  struct Local
  {
    int first = 0;
    std::array<double, kMaxOrder> value{};
    std::array<double, kMaxOrder> slope{}; // d/dx, zero when x was clamped
  };

  Local local(double x) const
  {
    Local out;
    const bool clamped = !(x > lo_ && x < hi_);
    x = clamp(x);
    int m = static_cast<int>(std::floor((x - lo_) / h_));
    m = std::clamp(m, 0, grid_ - 1);
    const int p = degree();
    const int span = m + p; // knot index with t[span] <= x < t[span + 1]
    out.first = m;

    // Cox-de Boor in the triangular form; N[j] holds B_{span-p'+j, p'}
    std::array<double, kMaxOrder> N{}, left{}, right{}, lower{};
    N[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
      left[j] = x - knot(span + 1 - j);
      right[j] = knot(span + j) - x;
      double saved = 0.0;
      if (j == p)
        lower = N; // degree p - 1 values, needed for the derivative
      for (int r = 0; r < j; ++r) {
        const double tmp = N[r] / (right[r + 1] + left[j - r]);
        N[r] = saved + right[r + 1] * tmp;
        saved = left[j - r] * tmp;
      }
      N[j] = saved;
    }
    for (int r = 0; r <= p; ++r)
      N[r] = std::max(N[r], 0.0); // rounding can leave -1e-16 at knots
    out.value = N;
    if (p == 0 || clamped)
      return out;
    // derivative from the degree p - 1 values: p * (N_{i,p-1}/(t_{i+p}-t_i) - N_{i+1,p-1}/(t_{i+p+1}-t_{i+1}))
    const double inv = 1.0 / h_; // all knot spacings are h on a uniform grid
    for (int r = 0; r <= p; ++r) {
      const double a = r > 0 ? lower[r - 1] : 0.0;
      const double b = r < p ? lower[r] : 0.0;
      out.slope[r] = (a - b) * inv;
    }
    return out;
  }

  // Full-length vector of basis values at x.
  std::vector<double> eval(double x) const
  {
    std::vector<double> out(size(), 0.0);
    auto l = local(x);
    for (int r = 0; r <= degree(); ++r)
      out[l.first + r] = l.value[r];
    return out;
  }

private:
  int grid_ = 1;
  int order_ = 1;
  double lo_ = -1.0;
  double hi_ = 1.0;
  double h_ = 2.0;
};

// Reference recursive definition, O(size * order) per point; used to check
// the fast evaluation.
inline double cox_de_boor(const std::vector<double>& t, int i, int degree, double x)
{
  if (degree == 0) {
    if (x >= t[i] && x < t[i + 1])
      return 1.0;
    return 0.0;
  }
  double a = 0.0, b = 0.0;
  const double d1 = t[i + degree] - t[i];
  const double d2 = t[i + degree + 1] - t[i + 1];
  if (d1 > 0)
    a = (x - t[i]) / d1 * cox_de_boor(t, i, degree - 1, x);
  if (d2 > 0)
    b = (t[i + degree + 1] - x) / d2 * cox_de_boor(t, i + 1, degree - 1, x);
  return a + b;
}

} // namespace autopl::kan
