#include "autopl/dataset.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace
{

using autopl::Dataset;
using autopl::ModelKind;
using autopl::SyntheticSpec;

std::filesystem::path temp_file(const std::string& name)
{
  auto dir = std::filesystem::temp_directory_path() / "autopl_dataset_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TEST(GenerateSynthetic, AbgShape)
{
  auto spec = SyntheticSpec::defaults(ModelKind::Abg);
  spec.seed = 7;
  auto ds = autopl::generate_synthetic(spec);
  EXPECT_EQ(ds.size(), 1000u);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"alpha", "beta", "gamma", "f", "d", "chi"}));
  ds.validate();
}

TEST(GenerateSynthetic, Deterministic)
{
  auto spec = SyntheticSpec::defaults(ModelKind::Ci);
  spec.seed = 99;
  auto a = autopl::generate_synthetic(spec);
  auto b = autopl::generate_synthetic(spec);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.target, b.target);
  spec.seed = 100;
  auto c = autopl::generate_synthetic(spec);
  EXPECT_NE(a.target, c.target);
}

// Re-evaluation oracle over every row plus range compliance.
TEST(GenerateSynthetic, TargetsAndRanges)
{
  for (auto kind : {ModelKind::Abg, ModelKind::Ci}) {
    auto spec = SyntheticSpec::defaults(kind);
    spec.seed = 3;
    auto ds = autopl::generate_synthetic(spec);
    for (std::size_t r = 0; r < ds.size(); ++r) {
      auto row = ds.features.row(r);
      EXPECT_EQ(ds.target[r], autopl::synthetic_target(kind, row));
      for (std::size_t c = 0; c + 1 < ds.feature_count(); ++c) {
        const auto& name = ds.feature_names[c];
        auto range = spec.param_ranges.at(name);
        const double scale = (kind == ModelKind::Ci && name == "f") ? 1e9 : 1.0;
        EXPECT_GE(row[c], range.lo * scale);
        EXPECT_LE(row[c], range.hi * scale);
      }
    }
  }
}

TEST(GenerateSynthetic, CiFrequencyInHertz)
{
  auto spec = SyntheticSpec::defaults(ModelKind::Ci);
  auto ds = autopl::generate_synthetic(spec);
  auto f = ds.features.column(0);
  EXPECT_GT(*std::min_element(f.begin(), f.end()), 1.9e9);
}

TEST(GenerateSynthetic, ChiSpreadMatchesSigmaRange)
{
  auto spec = SyntheticSpec::defaults(ModelKind::Abg);
  spec.count = 20000;
  auto ds = autopl::generate_synthetic(spec);
  auto chi = ds.features.column(5);
  double m = 0, s = 0;
  for (double v : chi)
    m += v;
  m /= chi.size();
  for (double v : chi)
    s += (v - m) * (v - m);
  s = std::sqrt(s / chi.size());
  // sqrt(E[sigma^2]) for sigma ~ U(4, 12) is sqrt(208/3) ~= 8.33
  EXPECT_NEAR(m, 0.0, 0.3);
  EXPECT_NEAR(s, std::sqrt(208.0 / 3.0), 0.3);
}

TEST(GenerateSynthetic, RejectsBadSpec)
{
  auto spec = SyntheticSpec::defaults(ModelKind::Abg);
  spec.param_ranges["alpha"] = {3.0, 1.0};
  EXPECT_THROW(autopl::generate_synthetic(spec), std::invalid_argument);
  spec = SyntheticSpec::defaults(ModelKind::Abg);
  spec.count = 0;
  EXPECT_THROW(autopl::generate_synthetic(spec), std::invalid_argument);
}

Dataset tiny(std::vector<std::vector<double>> rows)
{
  Dataset ds;
  for (std::size_t i = 0; i < rows.front().size(); ++i)
    ds.feature_names.push_back("x" + std::to_string(i));
  ds.features = autopl::Matrix::from_rows(rows);
  ds.target.assign(rows.size(), 1.0);
  return ds;
}

TEST(NormalizeMax, DividesByColumnMax)
{
  auto n = autopl::normalize_max(tiny({{1}, {2}, {4}}));
  EXPECT_EQ(n.features.column(0), (std::vector<double>{0.25, 0.5, 1.0}));
  ASSERT_TRUE(n.norm);
  EXPECT_EQ((*n.norm)[0], 4.0);
  EXPECT_EQ(n.target, (std::vector<double>{1, 1, 1}));
}

TEST(NormalizeMax, IdempotentOnNormalized)
{
  auto once = autopl::normalize_max(tiny({{1, -3}, {2, 5}, {4, -10}}));
  auto twice = autopl::normalize_max(once);
  EXPECT_EQ(once.features, twice.features);
  EXPECT_EQ(*once.norm, *twice.norm);
}

TEST(NormalizeMax, NegativeColumnUsesMagnitude)
{
  auto n = autopl::normalize_max(tiny({{-1}, {-4}, {-10}}));
  EXPECT_EQ(n.features.column(0), (std::vector<double>{-0.1, -0.4, -1.0}));
}

TEST(NormalizeMax, ZeroColumnNamed)
{
  auto ds = tiny({{1, 0}, {2, 0}});
  try {
    autopl::normalize_max(ds);
    FAIL();
  } catch (const autopl::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("x1"), std::string::npos);
  }
}

TEST(NormalizeMax, RoundTrip)
{
  auto spec = SyntheticSpec::defaults(ModelKind::Ci);
  auto ds = autopl::generate_synthetic(spec);
  auto back = autopl::denormalize(autopl::normalize_max(ds));
  for (std::size_t r = 0; r < ds.size(); ++r)
    for (std::size_t c = 0; c < ds.feature_count(); ++c) {
      const double a = ds.features(r, c), b = back.features(r, c);
      EXPECT_LE(std::abs(a - b), 1e-12 * std::abs(a));
    }
}

TEST(Split, SizesAndDeterminism)
{
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 10; ++i)
    rows.push_back({double(i)});
  auto ds = tiny(rows);
  auto [tr, te] = autopl::split(ds, 0.8, 5);
  EXPECT_EQ(tr.size(), 8u);
  EXPECT_EQ(te.size(), 2u);
  auto [tr2, te2] = autopl::split(ds, 0.8, 5);
  EXPECT_EQ(tr.features, tr2.features);
  EXPECT_EQ(te.features, te2.features);
}

TEST(Split, IsPartition)
{
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto spec = SyntheticSpec::defaults(ModelKind::Abg);
    spec.count = 37 + seed;
    spec.seed = seed;
    auto ds = autopl::generate_synthetic(spec);
    auto [tr, te] = autopl::split(ds, 0.8, seed);
    std::vector<std::vector<double>> all, parts;
    auto collect = [](const Dataset& d, std::vector<std::vector<double>>& out) {
      for (std::size_t r = 0; r < d.size(); ++r) {
        auto row = d.features.row(r);
        std::vector<double> v(row.begin(), row.end());
        v.push_back(d.target[r]);
        out.push_back(v);
      }
    };
    collect(ds, all);
    collect(tr, parts);
    collect(te, parts);
    std::sort(all.begin(), all.end());
    std::sort(parts.begin(), parts.end());
    EXPECT_EQ(all, parts);
  }
}

TEST(Split, Degenerate)
{
  EXPECT_THROW(autopl::split(tiny({{1}}), 0.5, 0), autopl::DataError);
  EXPECT_THROW(autopl::split(tiny({{1}, {2}}), 0.0, 0), std::invalid_argument);
  EXPECT_THROW(autopl::split(tiny({{1}, {2}}), 0.99, 0), autopl::DataError);
}

TEST(EmpiricalCsv, LoadsAndDropsBadRows)
{
  auto path = temp_file("emp.csv");
  {
    std::ofstream out(path);
    out << "distance,walls,rssi,loss\n"
        << "10,1,-80,100.5\n"
        << "20,x,-81,101.5\n"
        << "30,2,-82,nan\n"
        << "40,3,-83,103.5\n";
  }
  auto schema = autopl::parse_schema("distance=feature:d,walls=feature:n_w,loss=target");
  auto loaded = autopl::load_empirical_csv(path.string(), schema);
  EXPECT_EQ(loaded.report.rows_read, 4u);
  EXPECT_EQ(loaded.report.dropped, 2u);
  EXPECT_EQ(loaded.dataset.size(), 2u);
  EXPECT_EQ(loaded.dataset.feature_names, (std::vector<std::string>{"d", "n_w"}));
  EXPECT_EQ(loaded.dataset.target, (std::vector<double>{100.5, 103.5}));
  EXPECT_EQ(loaded.dataset.features(1, 0), 40.0);
}

TEST(EmpiricalCsv, WellFormed)
{
  auto path = temp_file("three.csv");
  {
    std::ofstream out(path);
    out << "a,b,pl\n1,2,3\n4,5,6\n7,8,9\n";
  }
  auto loaded = autopl::load_empirical_csv(path.string(), autopl::parse_schema("a=feature,b=feature,pl=target"));
  EXPECT_EQ(loaded.dataset.size(), 3u);
  EXPECT_EQ(loaded.report.dropped, 0u);
}

TEST(EmpiricalCsv, Errors)
{
  auto path = temp_file("err.csv");
  {
    std::ofstream out(path);
    out << "a,pl\nq,1\n";
  }
  EXPECT_THROW(autopl::load_empirical_csv("/nonexistent/file.csv", autopl::parse_schema("a=feature,pl=target")),
               autopl::DataError);
  EXPECT_THROW(autopl::load_empirical_csv(path.string(), autopl::parse_schema("zz=feature,pl=target")),
               autopl::DataError);
  EXPECT_THROW(autopl::load_empirical_csv(path.string(), autopl::parse_schema("a=feature,pl=target")),
               autopl::DataError);
  EXPECT_THROW(autopl::parse_schema("a=weird"), std::invalid_argument);
}

TEST(DatasetCsv, RoundTripWithSidecar)
{
  auto spec = SyntheticSpec::defaults(ModelKind::Ci);
  spec.count = 50;
  auto ds = autopl::normalize_max(autopl::generate_synthetic(spec));
  auto path = temp_file("ci.csv").string();
  autopl::write_dataset_csv(ds, path);
  autopl::write_norm_sidecar(ds, path);
  auto back = autopl::load_dataset_csv(path);
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.target, ds.target);
  ASSERT_TRUE(back.norm);
  EXPECT_EQ(*back.norm, *ds.norm);
}

} // namespace
