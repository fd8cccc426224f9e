#pragma once

#include "autopl/expr.hpp"
#include "autopl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace autopl::eval
{

enum class Role
{
  Other,
  Distance,
  Frequency
};

enum class Verdict
{
  Valid,
  Invalid,
  NotApplicable // no distance or frequency variable to check
};

inline const char* to_string(Verdict v)
{
  switch (v) {
  case Verdict::Valid: return "valid";
  case Verdict::Invalid: return "invalid";
  case Verdict::NotApplicable: return "n/a";
  }
  return "?";
}

inline const char* to_string(Role r)
{
  switch (r) {
  case Role::Distance: return "distance";
  case Role::Frequency: return "frequency";
  case Role::Other: return "other";
  }
  return "?";
}

// Variable index -> physical role; unlisted variables are Other.
using RoleMap = std::map<int, Role>;

// Guesses roles from feature names: d / d_m / d_km / distance and f / f_mhz /
// f_ghz / f_hz / frequency.
inline RoleMap roles_from_names(const std::vector<std::string>& names)
{
  RoleMap roles;
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::string n = names[i];
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
    if (n == "d" || n == "d_m" || n == "d_km" || n == "distance")
      roles[static_cast<int>(i)] = Role::Distance;
    else if (n == "f" || n == "f_mhz" || n == "f_ghz" || n == "f_hz" || n == "frequency")
      roles[static_cast<int>(i)] = Role::Frequency;
  }
  return roles;
}

// Sweep range per variable plus the value it is held at while others sweep.
struct ProbeRanges
{
  std::vector<double> lo, hi, hold;
};

inline double median(std::vector<double> v)
{
  if (v.empty())
    throw std::invalid_argument("median of an empty column");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline ProbeRanges probe_from_data(const Matrix& X)
{
  ProbeRanges r;
  for (std::size_t c = 0; c < X.cols(); ++c) {
    auto col = X.column(c);
    r.lo.push_back(*std::min_element(col.begin(), col.end()));
    r.hi.push_back(*std::max_element(col.begin(), col.end()));
    r.hold.push_back(median(col));
  }
  return r;
}

struct ValidityReport
{
  bool distance_applicable = false;
  bool frequency_applicable = false;
  bool uses_distance = false;
  bool uses_frequency = false;
  bool monotone_in_distance = true;
  bool monotone_in_frequency = true;
  std::set<Role> oscillatory_over;
  Verdict verdict = Verdict::NotApplicable;
  std::vector<std::string> diagnostics;
};

// Probes monotonicity of e in variable v over [lo, hi] with the other
// variables held fixed. Returns false when a step drops by more than tol.
inline bool probe_monotone(const expr::ExpressionTree& e, int v, const ProbeRanges& ranges, std::size_t points,
                           double tol, std::string& diagnostic)
{
  const std::size_t n_vars = ranges.lo.size();
  Matrix X(points, n_vars);
  for (std::size_t i = 0; i < points; ++i)
    for (std::size_t c = 0; c < n_vars; ++c)
      X(i, c) = ranges.hold[c];
  for (std::size_t i = 0; i < points; ++i)
    X(i, static_cast<std::size_t>(v)) =
        ranges.lo[v] + (ranges.hi[v] - ranges.lo[v]) * static_cast<double>(i) / static_cast<double>(points - 1);
  const auto out = expr::evaluate(e, X);
  std::size_t bad = 0;
  for (double y : out)
    bad += !std::isfinite(y);
  if (bad * 2 > points) {
    diagnostic = "non-finite output on " + std::to_string(bad) + " of " + std::to_string(points) + " probe points";
    return false;
  }
  double prev = std::nan("");
  for (std::size_t i = 0; i < points; ++i) {
    if (!std::isfinite(out[i]))
      continue;
    if (std::isfinite(prev) && out[i] - prev < -tol) {
      diagnostic = "decreases between x=" + expr::format_number(X(i - 1, v)) + " and x=" + expr::format_number(X(i, v));
      return false;
    }
    prev = out[i];
  }
  return true;
}

// Physical-validity verdict: every applicable variable (distance, frequency)
// must appear, must not sit under a trig function, and pathloss must not
// decrease along it.
inline ValidityReport check_validity(const expr::ExpressionTree& e, const RoleMap& roles, const ProbeRanges& ranges,
                                     std::size_t points = 200, double tol = 1e-6)
{
  ValidityReport rep;
  const auto scan = expr::structural_scan(e);
  bool ok = true;
  for (const auto& [var, role] : roles) {
    if (role == Role::Other)
      continue;
    if (var < 0 || static_cast<std::size_t>(var) >= ranges.lo.size())
      throw std::invalid_argument("role refers to variable " + std::to_string(var) + " outside the probe ranges");
    const bool used = scan.variables_used.count(var) > 0;
    const bool trig = scan.trig_over.count(var) > 0;
    const std::string name = to_string(role);
    if (role == Role::Distance) {
      rep.distance_applicable = true;
      rep.uses_distance = rep.uses_distance || used;
    } else {
      rep.frequency_applicable = true;
      rep.uses_frequency = rep.uses_frequency || used;
    }
    if (!used) {
      ok = false;
      rep.diagnostics.push_back(name + " variable x" + std::to_string(var) + " does not appear");
      continue;
    }
    if (trig) {
      ok = false;
      rep.oscillatory_over.insert(role);
      rep.diagnostics.push_back(name + " variable x" + std::to_string(var) + " appears under sin/cos");
    }
    std::string why;
    if (!probe_monotone(e, var, ranges, points, tol, why)) {
      ok = false;
      (role == Role::Distance ? rep.monotone_in_distance : rep.monotone_in_frequency) = false;
      rep.diagnostics.push_back(name + " probe: " + why);
    }
  }
  if (!rep.distance_applicable && !rep.frequency_applicable)
    rep.verdict = Verdict::NotApplicable;
  else
    rep.verdict = ok ? Verdict::Valid : Verdict::Invalid;
  return rep;
}

inline ValidityReport check_validity(const expr::ExpressionTree& e, const RoleMap& roles, const Matrix& X)
{
  return check_validity(e, roles, probe_from_data(X));
}

} // namespace autopl::eval
