#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace autopl::kan
{

// Elementary functions an edge can be snapped to, simplest first. The order
// is the complexity rank used to break near-ties between fits.
enum class Family
{
  Zero,
  Identity,
  Log10,
  Square,
  Sqrt,
  Exp,
  Cube,
  Sin,
  Cos,
  ReciprocalSquare
};

inline const std::vector<Family>& default_library()
{
  static const std::vector<Family> lib{Family::Zero, Family::Identity, Family::Log10, Family::Square, Family::Sqrt,
                                       Family::Exp,  Family::Cube,     Family::Sin,   Family::Cos,    Family::ReciprocalSquare};
  return lib;
}

inline const char* family_name(Family f)
{
  switch (f) {
  case Family::Zero: return "zero";
  case Family::Identity: return "identity";
  case Family::Log10: return "log10";
  case Family::Square: return "square";
  case Family::Sqrt: return "sqrt";
  case Family::Exp: return "exp";
  case Family::Cube: return "cube";
  case Family::Sin: return "sin";
  case Family::Cos: return "cos";
  case Family::ReciprocalSquare: return "recip_square";
  }
  return "?";
}

inline std::optional<Family> family_from_name(const std::string& s)
{
  for (Family f : default_library())
    if (s == family_name(f))
      return f;
  return std::nullopt;
}

// sin and cos share a rank: each is the other with a phase shift.
inline int complexity_rank(Family f)
{
  if (f == Family::Cos)
    return complexity_rank(Family::Sin);
  if (f == Family::ReciprocalSquare)
    return static_cast<int>(f) - 1;
  return static_cast<int>(f);
}

// f(u); NaN outside the family's domain.
inline double family_value(Family f, double u)
{
  switch (f) {
  case Family::Zero: return 0.0;
  case Family::Identity: return u;
  case Family::Log10: return u > 0 ? std::log10(u) : std::nan("");
  case Family::Square: return u * u;
  case Family::Sqrt: return u >= 0 ? std::sqrt(u) : std::nan("");
  case Family::Exp: return std::exp(u);
  case Family::Cube: return u * u * u;
  case Family::Sin: return std::sin(u);
  case Family::Cos: return std::cos(u);
  case Family::ReciprocalSquare: return u != 0 ? 1.0 / (u * u) : std::nan("");
  }
  return std::nan("");
}

inline double family_slope(Family f, double u)
{
  switch (f) {
  case Family::Zero: return 0.0;
  case Family::Identity: return 1.0;
  case Family::Log10: return u > 0 ? 1.0 / (u * std::log(10.0)) : std::nan("");
  case Family::Square: return 2.0 * u;
  case Family::Sqrt: return u > 0 ? 0.5 / std::sqrt(u) : std::nan("");
  case Family::Exp: return std::exp(u);
  case Family::Cube: return 3.0 * u * u;
  case Family::Sin: return std::cos(u);
  case Family::Cos: return -std::sin(u);
  case Family::ReciprocalSquare: return u != 0 ? -2.0 / (u * u * u) : std::nan("");
  }
  return std::nan("");
}

// y = c * f(a * x + b) + d
struct SymbolicEdge
{
  Family family = Family::Zero;
  double a = 1.0, b = 0.0, c = 0.0, d = 0.0;
  double fit_r2 = 0.0;

  double operator()(double x) const { return c * family_value(family, a * x + b) + d; }

  // Partial derivatives of the output w.r.t. x, a, b, c, d.
  struct Partials
  {
    double x, a, b, c, d;
  };
  Partials partials(double x) const
  {
    const double u = a * x + b;
    const double s = c * family_slope(family, u);
    return {s * a, s * x, s, family_value(family, u), 1.0};
  }
};

} // namespace autopl::kan
