#include "autopl/eval/baseline.hpp"
#include "autopl/eval/metrics.hpp"
#include "autopl/eval/report.hpp"
#include "autopl/eval/validity.hpp"
#include "support/infix_parser.hpp"
#include "support/transcribed.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace
{

using namespace autopl;
using namespace autopl::eval;

// Straightforward re-implementations kept deliberately naive.
double naive_mae(const std::vector<double>& p, const std::vector<double>& y)
{
  long double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    s += std::fabs(p[i] - y[i]);
  return static_cast<double>(s / y.size());
}
double naive_mse(const std::vector<double>& p, const std::vector<double>& y)
{
  long double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    s += (long double)(p[i] - y[i]) * (p[i] - y[i]);
  return static_cast<double>(s / y.size());
}
double naive_mape(const std::vector<double>& p, const std::vector<double>& y)
{
  long double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    s += std::fabs((p[i] - y[i]) / y[i]);
  return static_cast<double>(100 * s / y.size());
}
double naive_r2(const std::vector<double>& p, const std::vector<double>& y)
{
  long double m = 0;
  for (double v : y)
    m += v;
  m /= y.size();
  long double res = 0, tot = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    res += (long double)(y[i] - p[i]) * (y[i] - p[i]);
    tot += (y[i] - m) * (y[i] - m);
  }
  return static_cast<double>(1 - res / tot);
}

TEST(Metrics, MatchNaiveLoops)
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(50, 200);
  for (std::size_t n = 1; n <= 100; ++n) {
    std::vector<double> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(rng);
      y[i] = u(rng);
    }
    auto tol = [](double ref) { return 1e-12 * std::max(1.0, std::fabs(ref)); };
    EXPECT_NEAR(mae(p, y), naive_mae(p, y), tol(naive_mae(p, y)));
    EXPECT_NEAR(mse(p, y), naive_mse(p, y), tol(naive_mse(p, y)));
    EXPECT_NEAR(mape(p, y), naive_mape(p, y), tol(naive_mape(p, y)));
    if (n > 1) {
      EXPECT_NEAR(r2(p, y), naive_r2(p, y), tol(naive_r2(p, y)));
    }
  }
}

TEST(Metrics, SingleElement)
{
  std::vector<double> p{110}, y{100};
  EXPECT_DOUBLE_EQ(mae(p, y), 10.0);
  EXPECT_DOUBLE_EQ(mse(p, y), 100.0);
  EXPECT_DOUBLE_EQ(mape(p, y), 10.0);
  EXPECT_THROW(r2(p, y), std::invalid_argument);
}

TEST(Metrics, PerfectAndMeanPredictions)
{
  std::vector<double> y{1, 2, 3, 4};
  EXPECT_EQ(mae(y, y), 0.0);
  EXPECT_EQ(mse(y, y), 0.0);
  EXPECT_EQ(mape(y, y), 0.0);
  EXPECT_EQ(r2(y, y), 1.0);
  std::vector<double> m(4, 2.5);
  EXPECT_DOUBLE_EQ(r2(m, y), 0.0);
}

TEST(Metrics, PreconditionsNameTheMetric)
{
  std::vector<double> a{1, 2}, b{1};
  try {
    mae(a, b);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("mae"), std::string::npos);
  }
  std::vector<double> z{0, 1};
  try {
    mape(a, z);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("mape"), std::string::npos);
  }
  std::vector<double> c{5, 5};
  EXPECT_THROW(r2(a, c), std::invalid_argument);
  EXPECT_THROW(mse(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST(Metrics, ShiftInvariance)
{
  std::vector<double> p{101, 97, 130, 88}, y{100, 95, 128, 91};
  std::vector<double> p2 = p, y2 = y;
  for (auto& v : p2)
    v += 40;
  for (auto& v : y2)
    v += 40;
  EXPECT_NEAR(r2(p, y), r2(p2, y2), 1e-12);
  EXPECT_NEAR(mae(p, y), mae(p2, y2), 1e-12);
  EXPECT_GT(std::fabs(mape(p, y) - mape(p2, y2)), 1e-3);
}

Dataset line_data(std::size_t n)
{
  Dataset ds;
  ds.feature_names = {"x"};
  ds.features = Matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    ds.features(i, 0) = static_cast<double>(i + 1);
    ds.target.push_back(3.0 * (i + 1) + 10.0 + ((i % 3) - 1.0));
  }
  return ds;
}

// Predictor that ignores the training split entirely.
Predictor fixed_line(const Dataset&, std::uint64_t)
{
  return [](const Dataset& t) {
    std::vector<double> out;
    for (std::size_t i = 0; i < t.size(); ++i)
      out.push_back(3.0 * t.features(i, 0) + 10.0);
    return out;
  };
}

TEST(MonteCarlo, AggregatesPerRunValues)
{
  auto ds = line_data(200);
  auto rep = monte_carlo_eval(fixed_line, ds, 10, 0.8, 5);
  ASSERT_EQ(rep.runs.size(), 10u);
  EXPECT_EQ(rep.n_runs, 10u);
  double m = 0;
  for (const auto& r : rep.runs)
    m += r.mae;
  EXPECT_NEAR(rep.mae.mean, m / 10, 1e-12);
  EXPECT_GE(rep.mse.std, 0.0);
  EXPECT_LE(rep.r2.mean, 1.0);
  EXPECT_EQ(rep.scatter.size(), 10u);
  EXPECT_EQ(rep.scatter[0].size(), 40u);
}

TEST(MonteCarlo, DeterministicFitOnIdenticalSplitsHasZeroStd)
{
  auto ds = line_data(50);
  std::vector<double> pred;
  for (std::size_t i = 0; i < ds.size(); ++i)
    pred.push_back(3.0 * ds.features(i, 0) + 10.0);
  MetricsReport rep;
  rep.n_runs = 3;
  for (std::size_t i = 0; i < 3; ++i) {
    rep.runs.push_back(score(pred, ds.target));
    rep.run_index.push_back(i);
  }
  rep.aggregate();
  EXPECT_EQ(rep.mae.std, 0.0);
  EXPECT_EQ(rep.r2.std, 0.0);
  EXPECT_EQ(full_dataset_report(pred, ds.target).mse.std, 0.0);
}

TEST(MonteCarlo, ThreadedMatchesSerial)
{
  auto ds = line_data(300);
  auto noisy_fit = [](const Dataset& train, std::uint64_t seed) -> Predictor {
    double slope = 3.0 + 0.01 * static_cast<double>(seed % 7) + 1e-4 * train.target[0];
    return [slope](const Dataset& t) {
      std::vector<double> out;
      for (std::size_t i = 0; i < t.size(); ++i)
        out.push_back(slope * t.features(i, 0) + 10.0);
      return out;
    };
  };
  auto a = monte_carlo_eval(noisy_fit, ds, 7, 0.8, 11, 1);
  auto b = monte_carlo_eval(noisy_fit, ds, 7, 0.8, 11, 3);
  ASSERT_EQ(a.runs.size(), b.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(a.runs[i].mae, b.runs[i].mae);
    EXPECT_EQ(a.runs[i].r2, b.runs[i].r2);
  }
  EXPECT_EQ(a.mse.mean, b.mse.mean);
}

TEST(MonteCarlo, FailuresAreRecordedAndMajorityIsFatal)
{
  auto ds = line_data(100);
  auto some_fail = [](const Dataset& tr, std::uint64_t seed) -> Predictor {
    if (seed == 2)
      throw TrainingError("diverged");
    return fixed_line(tr, seed);
  };
  auto rep = monte_carlo_eval(some_fail, ds, 4, 0.8, 0);
  EXPECT_EQ(rep.runs.size(), 3u);
  ASSERT_EQ(rep.failures.size(), 1u);
  EXPECT_EQ(rep.failures[0].first, 2u);

  auto half_fail = [](const Dataset& tr, std::uint64_t seed) -> Predictor {
    if (seed % 2)
      throw TrainingError("diverged");
    return fixed_line(tr, seed);
  };
  EXPECT_THROW(monte_carlo_eval(half_fail, ds, 4, 0.8, 0), TrainingError);
  EXPECT_THROW(monte_carlo_eval(half_fail, ds, 0, 0.8, 0), std::invalid_argument);
}

TEST(Validity, TranscribedExpressionsMatchPublishedLabels)
{
  for (const auto& t : autopl::testing::transcribed_expressions()) {
    auto rep = check_validity(t.tree(), t.roles(), t.probe());
    EXPECT_EQ(rep.verdict, t.expected) << t.label;
  }
}

TEST(Validity, DetailsOfTheInvalidCases)
{
  auto all = autopl::testing::transcribed_expressions();
  auto pqt_abg = check_validity(all[1].tree(), all[1].roles(), all[1].probe());
  EXPECT_FALSE(pqt_abg.uses_distance);
  EXPECT_TRUE(pqt_abg.uses_frequency);

  auto pqt_ci = check_validity(all[2].tree(), all[2].roles(), all[2].probe());
  EXPECT_TRUE(pqt_ci.uses_distance);
  EXPECT_EQ(pqt_ci.oscillatory_over, std::set<Role>{Role::Frequency});

  auto rspg = check_validity(all[0].tree(), all[0].roles(), all[0].probe());
  EXPECT_TRUE(rspg.monotone_in_distance);
  EXPECT_TRUE(rspg.monotone_in_frequency);
  EXPECT_TRUE(rspg.oscillatory_over.empty());
}

TEST(Validity, MonotonicityProbe)
{
  std::vector<std::string> names{"d", "x"};
  ProbeRanges r{{1, -1}, {100, 1}, {50, 0}};
  RoleMap roles{{0, Role::Distance}};
  auto dec = check_validity(autopl::testing::parse_infix("100 - d", names), roles, r);
  EXPECT_EQ(dec.verdict, Verdict::Invalid);
  EXPECT_FALSE(dec.monotone_in_distance);
  // depends on the held value of x: decreasing in d when x < 0
  auto cond = check_validity(autopl::testing::parse_infix("x*d + d", names), roles, r);
  EXPECT_EQ(cond.verdict, Verdict::Valid);
  auto flat = check_validity(autopl::testing::parse_infix("0*d + x", names), roles, r);
  EXPECT_EQ(flat.verdict, Verdict::Valid);
  auto na = check_validity(autopl::testing::parse_infix("x + 1", names), RoleMap{}, r);
  EXPECT_EQ(na.verdict, Verdict::NotApplicable);
}

TEST(Validity, MostlyNonFiniteIsInvalid)
{
  std::vector<std::string> names{"d"};
  ProbeRanges r{{-100}, {1}, {0.5}};
  auto rep = check_validity(autopl::testing::parse_infix("log10(d)", names), {{0, Role::Distance}}, r);
  EXPECT_EQ(rep.verdict, Verdict::Invalid);
  ASSERT_FALSE(rep.diagnostics.empty());
  EXPECT_NE(rep.diagnostics.back().find("non-finite"), std::string::npos);
}

TEST(Validity, ProbeRangesFromData)
{
  Matrix X(4, 1);
  X(0, 0) = 4;
  X(1, 0) = 1;
  X(2, 0) = 3;
  X(3, 0) = 2;
  auto p = probe_from_data(X);
  EXPECT_EQ(p.lo[0], 1);
  EXPECT_EQ(p.hi[0], 4);
  EXPECT_EQ(p.hold[0], 2.5);
}

Dataset indoor_rows()
{
  Dataset ds;
  ds.feature_names = {"n_w", "n_f", "d", "f"};
  ds.features = Matrix(3, 4);
  const double rows[3][4] = {{0, 1, 1, 868.1}, {2, 2, 10, 868.3}, {1, 3, 50, 868.5}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j)
      ds.features(i, j) = rows[i][j];
  ds.target = {125, 175, 190};
  return ds;
}

TEST(Baselines, IndoorRowsAreDeterministic)
{
  auto ds = indoor_rows();
  auto rows = baseline_table(ds, Scenario::Indoor);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].method, "MWF");
  // first row: MWF = 120.4 + 10 = 130.4, empirical = 130.4 as well
  EXPECT_NEAR(rows[0].metrics.scatter[0][0].second, 130.4, 1e-9);
  EXPECT_NEAR(rows[1].metrics.scatter[0][0].second, 130.4, 1e-9);
  EXPECT_NEAR(rows[0].metrics.scatter[0][1].second, 171.72, 0.01);
  EXPECT_NEAR(rows[1].metrics.scatter[0][1].second, 169.92, 0.01);
  EXPECT_EQ(rows[0].metrics.mae.std, 0.0);
}

TEST(Baselines, OutdoorUnitsAndMissingColumns)
{
  Dataset ds;
  ds.feature_names = {"h_ed", "d", "f"};
  ds.features = Matrix(2, 3);
  ds.features(0, 0) = 1;
  ds.features(0, 1) = 1000;
  ds.features(0, 2) = 1;
  ds.features(1, 0) = 2;
  ds.features(1, 1) = 100;
  ds.features(1, 2) = 868.3;
  ds.target = {150, 160};
  auto rows = baseline_table(ds, Scenario::Outdoor);
  EXPECT_NEAR(rows[0].metrics.scatter[0][0].second, 32.44, 1e-12); // 1 MHz, 1 km
  EXPECT_NEAR(rows[1].metrics.scatter[0][1].second, 201.67, 0.01);
  EXPECT_THROW(baseline_table(ds, Scenario::Indoor), DataError);
}

TEST(Report, CsvAndSummary)
{
  std::vector<double> p{110, 90}, y{100, 100.5};
  std::vector<ReportRow> rows{{"m, one", full_dataset_report(p, y), "d + 1", "valid"}};
  std::ostringstream csv, sum, sc;
  write_metrics_csv(rows, csv);
  write_summary(rows, sum);
  write_scatter_csv(rows, sc);
  EXPECT_NE(csv.str().find("\"m, one\",1,"), std::string::npos);
  EXPECT_NE(sum.str().find("expression: d + 1"), std::string::npos);
  EXPECT_NE(sum.str().find("±"), std::string::npos);
  EXPECT_EQ(sc.str(), "method,run,true_db,predicted_db\n\"m, one\",0,100,110\n\"m, one\",0,100.5,90\n");
}

} // namespace
