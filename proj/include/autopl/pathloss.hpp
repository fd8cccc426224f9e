#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace autopl::pathloss
{

inline constexpr double kSpeedOfLight = 299'792'458.0; // m/s

struct AbgParams
{
  double alpha = 0.0; // distance coefficient
  double beta = 0.0;  // offset, dB
  double gamma = 0.0; // frequency coefficient
  double f_ghz = 1.0;
  double d_m = 1.0;
  double chi = 0.0; // shadow fading draw, dB
};

struct CiParams
{
  double f_hz = 1.0;
  double n = 2.0; // pathloss exponent
  double d_m = 1.0;
  double chi = 0.0;
};

struct IndoorParams
{
  double d_m = 1.0;
  double n_w = 0.0; // walls traversed
  double n_f = 1.0; // floors traversed
};

struct OutdoorParams
{
  double d_m = 1.0;
  double h_ed = 1.0; // end-device antenna height, m
  double x_sigma = 0.0;
};

// Fitted constants of the LoRaWAN indoor/outdoor measurement campaign.
struct EmpiricalConstants
{
  double n = 0.0;
  double pl0 = 0.0;
  double b = 0.0;
  double l_f = 0.0;
  double l_w = 0.0;
  double l_h = 0.0;
  double sigma = 0.0;

  static constexpr EmpiricalConstants indoor()
  {
    return {.n = 2.85, .pl0 = 120.4, .b = 0.47, .l_f = 10.0, .l_w = 1.41};
  }
  static constexpr EmpiricalConstants outdoor()
  {
    return {.n = 3.119, .pl0 = 140.7, .l_h = -4.7, .sigma = 9.7};
  }
};

namespace detail
{
inline void require_positive(double v, const char* what)
{
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::domain_error(std::string(what) + " must be positive and finite");
}
} // namespace detail

// Free-space loss at the 1 m reference distance, f in Hz.
inline double fspl_1m(double f_hz)
{
  detail::require_positive(f_hz, "frequency");
  return 20.0 * std::log10(4.0 * std::numbers::pi * f_hz / kSpeedOfLight);
}

inline double eval_abg(const AbgParams& p)
{
  detail::require_positive(p.d_m, "distance");
  detail::require_positive(p.f_ghz, "frequency");
  return 10.0 * p.alpha * std::log10(p.d_m) + p.beta + 10.0 * p.gamma * std::log10(p.f_ghz) + p.chi;
}

inline double eval_ci(const CiParams& p)
{
  detail::require_positive(p.d_m, "distance");
  return fspl_1m(p.f_hz) + 10.0 * p.n * std::log10(p.d_m) + p.chi;
}

inline double eval_indoor_empirical(const IndoorParams& p,
                                    const EmpiricalConstants& k = EmpiricalConstants::indoor())
{
  detail::require_positive(p.d_m, "distance");
  if (p.n_f < 1.0)
    throw std::domain_error("floor count must be >= 1 for the indoor empirical model");
  if (p.n_w < 0.0)
    throw std::domain_error("wall count must be >= 0");
  const double floor_exp = (p.n_f + 2.0) / (p.n_f + 1.0) - k.b;
  return 10.0 * k.n * std::log10(p.d_m) + k.pl0 + p.n_w * k.l_w + std::pow(p.n_f, floor_exp) * k.l_f;
}

inline double eval_outdoor_empirical(const OutdoorParams& p,
                                     const EmpiricalConstants& k = EmpiricalConstants::outdoor())
{
  detail::require_positive(p.d_m, "distance");
  detail::require_positive(p.h_ed, "antenna height");
  return 10.0 * k.n * std::log10(p.d_m) + k.pl0 + k.l_h * std::log10(p.h_ed) + p.x_sigma;
}

// Multi-wall-and-floor model. Linear in n_f, so n_f = 0 is accepted.
inline double eval_mwf(const IndoorParams& p, const EmpiricalConstants& k = EmpiricalConstants::indoor())
{
  detail::require_positive(p.d_m, "distance");
  if (p.n_f < 0.0 || p.n_w < 0.0)
    throw std::domain_error("wall and floor counts must be >= 0");
  const double waf = p.n_w * k.l_w;
  const double faf = p.n_f * k.l_f;
  return 10.0 * k.n * std::log10(p.d_m) + k.pl0 + waf + faf;
}

// Free-space loss, f in MHz and d in km.
inline double eval_fs(double f_mhz, double d_km)
{
  detail::require_positive(f_mhz, "frequency");
  detail::require_positive(d_km, "distance");
  return 20.0 * std::log10(f_mhz) + 20.0 * std::log10(d_km) + 32.44;
}

} // namespace autopl::pathloss
