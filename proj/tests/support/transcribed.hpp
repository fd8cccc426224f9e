#pragma once

// Published expressions with their published validity labels, plus the
// parameter ranges used to probe them. Hold values are range midpoints, which
// is where the median of uniformly drawn data sits.

#include "autopl/eval/validity.hpp"
#include "support/infix_parser.hpp"

#include <string>
#include <vector>

namespace autopl::testing
{

struct Transcribed
{
  std::string label;
  std::string infix;
  std::vector<std::string> names;
  std::vector<std::pair<double, double>> ranges;
  eval::Verdict expected;

  expr::ExpressionTree tree() const { return parse_infix(infix, names); }
  eval::RoleMap roles() const { return eval::roles_from_names(names); }
  eval::ProbeRanges probe() const
  {
    eval::ProbeRanges p;
    for (auto [lo, hi] : ranges) {
      p.lo.push_back(lo);
      p.hi.push_back(hi);
      p.hold.push_back(0.5 * (lo + hi));
    }
    return p;
  }
};

inline std::vector<Transcribed> transcribed_expressions()
{
  const std::vector<std::string> abg{"alpha", "beta", "gamma", "f", "d", "chi"};
  const std::vector<std::pair<double, double>> abg_r{{0.1, 2.5}, {-10, -1}, {0, 2}, {2, 73.5}, {1, 500}, {-12, 12}};
  const std::vector<std::string> ci{"f", "n", "d", "chi"};
  const std::vector<std::pair<double, double>> ci_r{{2e9, 73.5e9}, {2, 6}, {1, 500}, {-12, 12}};
  const std::vector<std::string> indoor{"n_w", "n_f", "d", "f"};
  const std::vector<std::pair<double, double>> indoor_r{{0, 3}, {1, 4}, {6.47, 105.25}, {868.1, 868.5}};
  const std::vector<std::string> outdoor{"h_ed", "d", "f"};
  const std::vector<std::pair<double, double>> outdoor_r{{0.2, 3}, {27.66, 170.44}, {868.1, 868.5}};
  using eval::Verdict;
  return {
      {"ABG DSR-RSPG", "20*alpha + 10*gamma + beta + log10(d) + gamma*f/10 + chi", abg, abg_r, Verdict::Valid},
      {"ABG DSR-PQT", "20*alpha + 15*gamma + beta + f/20 + chi", abg, abg_r, Verdict::Invalid},
      {"CI DSR-PQT", "23*n + d/10 + (chi + n)*cos(log10(f)) + 40", ci, ci_r, Verdict::Invalid},
      {"Indoor KAN auto-symbolic",
       "41.5*log10(0.4*d + 4.03) - 1.3*cos(5.04*f - 0.5) + 4.9*sin(8.2*n_w - 2.9) + 52.03*log10(2.4*n_f + 8.6) - 11.2",
       indoor, indoor_r, Verdict::Invalid},
      {"Outdoor DSR-RSPG", "h_ed*d + log10(f) + 80", outdoor, outdoor_r, Verdict::Valid},
  };
}

} // namespace autopl::testing
