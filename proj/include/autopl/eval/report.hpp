#pragma once

#include "autopl/eval/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace autopl::eval
{

struct ReportRow
{
  std::string method;
  MetricsReport metrics;
  std::string expression; // empty for black-box models
  std::string validity;   // valid / invalid / n/a
};

namespace detail
{

inline std::string csv_quote(const std::string& s)
{
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string g17(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string pm(const Stat& s, int precision)
{
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << s.mean << " ± " << s.std;
  return os.str();
}

} // namespace detail

inline void write_metrics_csv(const std::vector<ReportRow>& rows, std::ostream& os)
{
  os << "method,n_runs,mae_mean,mae_std,mse_mean,mse_std,mape_mean,mape_std,r2_mean,r2_std,expression,validity\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    os << detail::csv_quote(r.method) << ',' << m.n_runs;
    for (const Stat* s : {&m.mae, &m.mse, &m.mape, &m.r2})
      os << ',' << detail::g17(s->mean) << ',' << detail::g17(s->std);
    os << ',' << detail::csv_quote(r.expression) << ',' << detail::csv_quote(r.validity) << '\n';
  }
}

// Per-run rows, useful for checking the aggregation.
inline void write_runs_csv(const std::vector<ReportRow>& rows, std::ostream& os)
{
  os << "method,run,mae,mse,mape,r2\n";
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.metrics.runs.size(); ++i) {
      const auto& m = r.metrics.runs[i];
      os << detail::csv_quote(r.method) << ',' << r.metrics.run_index[i] << ',' << detail::g17(m.mae) << ','
         << detail::g17(m.mse) << ',' << detail::g17(m.mape) << ',' << detail::g17(m.r2) << '\n';
    }
}

inline void write_scatter_csv(const std::vector<ReportRow>& rows, std::ostream& os)
{
  os << "method,run,true_db,predicted_db\n";
  for (const auto& r : rows)
    for (std::size_t k = 0; k < r.metrics.scatter.size(); ++k)
      for (const auto& [t, p] : r.metrics.scatter[k])
        os << detail::csv_quote(r.method) << ',' << r.metrics.run_index[k] << ',' << detail::g17(t) << ','
           << detail::g17(p) << '\n';
}

// Fixed-width text table: one row per method, then its expression and
// validity underneath when present.
inline void write_summary(const std::vector<ReportRow>& rows, std::ostream& os)
{
  auto col = [](const std::string& s, std::size_t w) { return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' '); };
  std::size_t w = 22;
  for (const auto& r : rows)
    w = std::max(w, r.method.size() + 2);
  os << col("Method", w) << col("MAE", 18) << col("MSE", 22) << col("MAPE (%)", 16) << "R2\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    os << col(r.method, w) << col(detail::pm(m.mae, 2), 18) << col(detail::pm(m.mse, 2), 22)
       << col(detail::pm(m.mape, 2), 16) << detail::pm(m.r2, 2) << '\n';
    if (!r.expression.empty())
      os << "    expression: " << r.expression << '\n';
    if (!r.validity.empty())
      os << "    validity:   " << r.validity << '\n';
    if (!m.failures.empty())
      os << "    failed runs: " << m.failures.size() << " of " << m.n_runs << '\n';
  }
}

} // namespace autopl::eval
