#pragma once

#include "autopl/dataset.hpp"
#include "autopl/error.hpp"
#include "autopl/eval/metrics.hpp"
#include "autopl/eval/report.hpp"
#include "autopl/pathloss.hpp"

#include <optional>
#include <string>
#include <vector>

namespace autopl::eval
{

enum class Scenario
{
  Indoor,
  Outdoor
};

inline Scenario parse_scenario(const std::string& s)
{
  if (s == "indoor")
    return Scenario::Indoor;
  if (s == "outdoor")
    return Scenario::Outdoor;
  throw std::invalid_argument("scenario must be indoor or outdoor, got '" + s + "'");
}

// Feature names the baselines read; d is in metres and f in MHz.
struct BaselineColumns
{
  std::string distance = "d";
  std::string walls = "n_w";
  std::string floors = "n_f";
  std::string height = "h_ed";
  std::string frequency = "f";
  double default_f_mhz = 868.0; // used when the frequency column is absent
};

namespace detail
{

inline std::size_t require_column(const Dataset& ds, const std::string& name, const char* scenario)
{
  auto idx = ds.feature_index(name);
  if (!idx)
    throw DataError(std::string(scenario) + " baseline needs feature column '" + name + "'");
  return *idx;
}

template <class F>
std::vector<double> rowwise(const Dataset& ds, F&& f)
{
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    try {
      out[i] = f(i);
    } catch (const std::domain_error& e) {
      throw DataError("row " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

} // namespace detail

// Full-dataset metric rows for the analytical baselines (shadow terms zero).
inline std::vector<ReportRow> baseline_table(const Dataset& input, Scenario which, const BaselineColumns& cols = {})
{
  const Dataset ds = input.norm ? denormalize(input) : input;
  const auto& X = ds.features;
  std::vector<ReportRow> rows;
  if (which == Scenario::Indoor) {
    const auto d = detail::require_column(ds, cols.distance, "indoor");
    const auto w = detail::require_column(ds, cols.walls, "indoor");
    const auto fl = detail::require_column(ds, cols.floors, "indoor");
    auto params = [&](std::size_t i) { return pathloss::IndoorParams{X(i, d), X(i, w), X(i, fl)}; };
    auto mwf = detail::rowwise(ds, [&](std::size_t i) { return pathloss::eval_mwf(params(i)); });
    auto emp = detail::rowwise(ds, [&](std::size_t i) { return pathloss::eval_indoor_empirical(params(i)); });
    rows.push_back({"MWF", full_dataset_report(mwf, ds.target), "28.5*log10(d) + 120.4 + 1.41*n_w + 10*n_f", "n/a"});
    rows.push_back({"empirical-indoor", full_dataset_report(emp, ds.target),
                    "28.5*log10(d) + 120.4 + 1.41*n_w + 10*n_f^((n_f+2)/(n_f+1) - 0.47)", "n/a"});
  } else {
    const auto d = detail::require_column(ds, cols.distance, "outdoor");
    const auto h = detail::require_column(ds, cols.height, "outdoor");
    const auto fcol = ds.feature_index(cols.frequency);
    auto f_mhz = [&](std::size_t i) { return fcol ? X(i, *fcol) : cols.default_f_mhz; };
    auto fs = detail::rowwise(ds, [&](std::size_t i) { return pathloss::eval_fs(f_mhz(i), X(i, d) / 1000.0); });
    auto emp = detail::rowwise(
        ds, [&](std::size_t i) { return pathloss::eval_outdoor_empirical({X(i, d), X(i, h), 0.0}); });
    rows.push_back({"FS", full_dataset_report(fs, ds.target), "20*log10(f) + 20*log10(d/1000) + 32.44", "n/a"});
    rows.push_back(
        {"empirical-outdoor", full_dataset_report(emp, ds.target), "31.19*log10(d) + 140.7 - 4.7*log10(h_ed)", "n/a"});
  }
  return rows;
}

} // namespace autopl::eval
