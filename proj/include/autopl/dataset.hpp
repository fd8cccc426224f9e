#pragma once

#include "autopl/error.hpp"
#include "autopl/matrix.hpp"
#include "autopl/pathloss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace autopl
{

inline constexpr const char* kTargetColumn = "pl_db";

struct Dataset
{
  std::vector<std::string> feature_names;
  Matrix features;
  std::vector<double> target;
  std::string provenance;
  // Per-feature scale the stored features were divided by, when normalized.
  std::optional<std::vector<double>> norm;

  std::size_t size() const { return target.size(); }
  std::size_t feature_count() const { return feature_names.size(); }

  std::optional<std::size_t> feature_index(const std::string& name) const
  {
    auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end())
      return std::nullopt;
    return static_cast<std::size_t>(it - feature_names.begin());
  }

  void validate() const
  {
    if (features.rows() != target.size())
      throw DataError("feature rows and target length differ");
    if (!target.empty() && features.cols() != feature_names.size())
      throw DataError("feature column count does not match feature names");
    for (double v : features.data())
      if (!std::isfinite(v))
        throw DataError("non-finite feature value");
    for (double v : target)
      if (!std::isfinite(v))
        throw DataError("non-finite target value");
    if (norm) {
      if (norm->size() != feature_names.size())
        throw DataError("norm metadata has wrong length");
      for (double m : *norm)
        if (!(m > 0.0))
          throw DataError("norm entries must be > 0");
    }
  }

  Dataset subset(const std::vector<std::size_t>& indices) const
  {
    Dataset out;
    out.feature_names = feature_names;
    out.provenance = provenance;
    out.norm = norm;
    out.features = Matrix(indices.size(), feature_count());
    out.target.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      auto src = features.row(indices[i]);
      std::copy(src.begin(), src.end(), out.features.row(i).begin());
      out.target.push_back(target[indices[i]]);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Synthetic generation

enum class ModelKind
{
  Abg,
  Ci,
};

inline std::string to_string(ModelKind k) { return k == ModelKind::Abg ? "abg" : "ci"; }

inline ModelKind parse_model_kind(const std::string& s)
{
  if (s == "abg" || s == "ABG")
    return ModelKind::Abg;
  if (s == "ci" || s == "CI")
    return ModelKind::Ci;
  throw std::invalid_argument("unknown model kind '" + s + "' (expected abg or ci)");
}

struct Range
{
  double lo = 0.0;
  double hi = 0.0;
};

struct SyntheticSpec
{
  ModelKind model_kind = ModelKind::Abg;
  // alpha, beta, gamma, f (GHz), d (m), sigma, n
  std::map<std::string, Range> param_ranges;
  std::size_t count = 1000;
  std::uint64_t seed = 0;

  static SyntheticSpec defaults(ModelKind kind)
  {
    SyntheticSpec s;
    s.model_kind = kind;
    s.param_ranges = {
        {"f", {2.0, 73.5}},
        {"d", {1.0, 500.0}},
        {"sigma", {4.0, 12.0}},
    };
    if (kind == ModelKind::Abg) {
      s.param_ranges["alpha"] = {0.1, 2.5};
      s.param_ranges["beta"] = {-10.0, -1.0};
      s.param_ranges["gamma"] = {0.0, 2.0};
    } else {
      s.param_ranges["n"] = {2.0, 6.0};
    }
    return s;
  }

  void validate() const
  {
    if (count < 1)
      throw std::invalid_argument("synthetic count must be >= 1");
    for (const auto& [name, r] : param_ranges)
      if (!(r.lo <= r.hi))
        throw std::invalid_argument("range for '" + name + "' has lo > hi");
    const std::vector<std::string> need = model_kind == ModelKind::Abg
                                              ? std::vector<std::string>{"alpha", "beta", "gamma", "f", "d", "sigma"}
                                              : std::vector<std::string>{"f", "n", "d", "sigma"};
    for (const auto& n : need)
      if (!param_ranges.count(n))
        throw std::invalid_argument("missing range for '" + n + "'");
    if (param_ranges.at("d").lo < 1.0)
      throw std::invalid_argument("distance range must start at >= 1 m");
    if (param_ranges.at("f").lo <= 0.0)
      throw std::invalid_argument("frequency range must be positive");
  }
};

inline std::vector<std::string> synthetic_feature_names(ModelKind kind)
{
  if (kind == ModelKind::Abg)
    return {"alpha", "beta", "gamma", "f", "d", "chi"};
  return {"f", "n", "d", "chi"};
}

// Re-evaluates the generating model on one feature row of a synthetic dataset.
inline double synthetic_target(ModelKind kind, std::span<const double> row)
{
  if (kind == ModelKind::Abg)
    return pathloss::eval_abg({.alpha = row[0], .beta = row[1], .gamma = row[2], .f_ghz = row[3], .d_m = row[4], .chi = row[5]});
  return pathloss::eval_ci({.f_hz = row[0], .n = row[1], .d_m = row[2], .chi = row[3]});
}

// Every parameter is drawn uniformly from its range; chi ~ N(0, sigma_row) with
// sigma_row itself uniform. sigma is not exposed as a feature.
inline Dataset generate_synthetic(const SyntheticSpec& spec)
{
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&](const char* name) {
    const Range& r = spec.param_ranges.at(name);
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
  };

  Dataset ds;
  ds.feature_names = synthetic_feature_names(spec.model_kind);
  ds.features = Matrix(spec.count, ds.feature_names.size());
  ds.target.resize(spec.count);
  ds.provenance = "synthetic:" + to_string(spec.model_kind) + " (uniform ranges, seed " + std::to_string(spec.seed) + ")";

  for (std::size_t i = 0; i < spec.count; ++i) {
    auto row = ds.features.row(i);
    if (spec.model_kind == ModelKind::Abg) {
      row[0] = uniform("alpha");
      row[1] = uniform("beta");
      row[2] = uniform("gamma");
      row[3] = uniform("f");
      row[4] = uniform("d");
    } else {
      row[0] = uniform("f") * 1e9; // GHz -> Hz
      row[1] = uniform("n");
      row[2] = uniform("d");
    }
    const double sigma = uniform("sigma");
    row[ds.feature_names.size() - 1] = std::normal_distribution<double>(0.0, sigma)(rng);
    ds.target[i] = synthetic_target(spec.model_kind, row);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Normalization

// Divides each feature by its largest absolute value and records the scale.
// For non-negative columns this is the column maximum.
inline Dataset normalize_max(const Dataset& ds)
{
  Dataset out = ds;
  std::vector<double> scale(ds.feature_count(), 0.0);
  for (std::size_t r = 0; r < ds.size(); ++r)
    for (std::size_t c = 0; c < ds.feature_count(); ++c)
      scale[c] = std::max(scale[c], std::abs(ds.features(r, c)));
  for (std::size_t c = 0; c < scale.size(); ++c)
    if (!(scale[c] > 0.0))
      throw DataError("cannot normalize column '" + ds.feature_names[c] + "': maximum magnitude is zero");
  for (std::size_t r = 0; r < ds.size(); ++r)
    for (std::size_t c = 0; c < ds.feature_count(); ++c)
      out.features(r, c) = ds.features(r, c) / scale[c];
  if (ds.norm)
    for (std::size_t c = 0; c < scale.size(); ++c)
      scale[c] *= (*ds.norm)[c];
  out.norm = std::move(scale);
  return out;
}

inline Dataset denormalize(const Dataset& ds)
{
  Dataset out = ds;
  if (!ds.norm)
    return out;
  for (std::size_t r = 0; r < ds.size(); ++r)
    for (std::size_t c = 0; c < ds.feature_count(); ++c)
      out.features(r, c) = ds.features(r, c) * (*ds.norm)[c];
  out.norm.reset();
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

// Uniform permutation by seed; the first ceil(fraction * N) rows go to train.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed)
{
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train fraction must lie in (0, 1)");
  const std::size_t n = ds.size();
  if (n < 2)
    throw DataError("need at least 2 rows to split");
  auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  if (n_train < 1 || n_train >= n)
    throw DataError("split of " + std::to_string(n) + " rows at fraction " + std::to_string(train_fraction) +
                    " leaves an empty side");

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i)
    perm[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return {ds.subset(train_idx), ds.subset(test_idx)};
}

// ---------------------------------------------------------------------------
// CSV

namespace csv
{

inline std::vector<std::string> split_line(const std::string& line)
{
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  for (auto& c : cells) {
    auto b = c.find_first_not_of(" \t");
    auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string{} : c.substr(b, e - b + 1);
  }
  return cells;
}

inline std::optional<double> parse_number(const std::string& s)
{
  if (s.empty())
    return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v))
      return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace csv

inline void write_dataset_csv(const Dataset& ds, const std::string& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write " + path);
  for (const auto& name : ds.feature_names)
    out << name << ',';
  out << kTargetColumn << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t c = 0; c < ds.feature_count(); ++c)
      out << csv::format_double(ds.features(r, c)) << ',';
    out << csv::format_double(ds.target[r]) << '\n';
  }
}

inline std::string norm_sidecar_path(const std::string& csv_path) { return csv_path + ".norm"; }

// Sidecar holds one "name,scale" line per feature.
inline void write_norm_sidecar(const Dataset& ds, const std::string& csv_path)
{
  if (!ds.norm)
    return;
  std::ofstream out(norm_sidecar_path(csv_path), std::ios::binary);
  if (!out)
    throw DataError("cannot write " + norm_sidecar_path(csv_path));
  out << "feature,scale\n";
  for (std::size_t c = 0; c < ds.feature_count(); ++c)
    out << ds.feature_names[c] << ',' << csv::format_double((*ds.norm)[c]) << '\n';
}

struct LoadReport
{
  std::size_t rows_read = 0;
  std::size_t dropped = 0;
};

struct LoadedDataset
{
  Dataset dataset;
  LoadReport report;
};

enum class ColumnRole
{
  Feature,
  Target,
};

struct ColumnMapping
{
  std::string column; // header name in the file
  ColumnRole role = ColumnRole::Feature;
  std::string alias;  // feature name in the dataset; defaults to column
};

// Parses "col=role[:alias],..." where role is feature or target.
inline std::vector<ColumnMapping> parse_schema(const std::string& text)
{
  std::vector<ColumnMapping> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty())
      continue;
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("schema entry '" + item + "' is not name=role");
    ColumnMapping m;
    m.column = item.substr(0, eq);
    std::string role = item.substr(eq + 1);
    auto colon = role.find(':');
    if (colon != std::string::npos) {
      m.alias = role.substr(colon + 1);
      role = role.substr(0, colon);
    }
    if (role == "feature")
      m.role = ColumnRole::Feature;
    else if (role == "target")
      m.role = ColumnRole::Target;
    else
      throw std::invalid_argument("schema role '" + role + "' is not feature or target");
    if (m.alias.empty())
      m.alias = m.column;
    out.push_back(m);
  }
  return out;
}

inline LoadedDataset load_empirical_csv(const std::string& path, const std::vector<ColumnMapping>& schema)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open " + path);

  std::size_t targets = 0, feats = 0;
  for (const auto& m : schema)
    (m.role == ColumnRole::Target ? targets : feats) += 1;
  if (targets != 1 || feats < 1)
    throw DataError("schema must map exactly one target and at least one feature column");

  std::string line;
  if (!std::getline(in, line))
    throw DataError(path + " is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
    line = line.substr(3); // UTF-8 BOM
  const auto header = csv::split_line(line);

  std::vector<std::size_t> feature_cols;
  std::size_t target_col = 0;
  LoadedDataset result;
  for (const auto& m : schema) {
    auto it = std::find(header.begin(), header.end(), m.column);
    if (it == header.end())
      throw DataError("column '" + m.column + "' not found in " + path);
    const auto idx = static_cast<std::size_t>(it - header.begin());
    if (m.role == ColumnRole::Target) {
      target_col = idx;
    } else {
      feature_cols.push_back(idx);
      result.dataset.feature_names.push_back(m.alias);
    }
  }

  Matrix features(0, feature_cols.size());
  std::vector<double> row(feature_cols.size());
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r")
      continue;
    ++result.report.rows_read;
    const auto cells = csv::split_line(line);
    bool ok = true;
    for (std::size_t k = 0; k < feature_cols.size() && ok; ++k) {
      auto v = feature_cols[k] < cells.size() ? csv::parse_number(cells[feature_cols[k]]) : std::nullopt;
      ok = v.has_value();
      if (ok)
        row[k] = *v;
    }
    auto t = target_col < cells.size() ? csv::parse_number(cells[target_col]) : std::nullopt;
    if (!ok || !t) {
      ++result.report.dropped;
      continue;
    }
    features.append_row(row);
    result.dataset.target.push_back(*t);
  }
  if (result.dataset.target.empty())
    throw DataError(path + " has no usable rows after filtering");
  result.dataset.features = std::move(features);
  result.dataset.provenance = "file:" + path;
  result.dataset.validate();
  return result;
}

// Reads a dataset written by write_dataset_csv (last column is the target),
// picking up the normalization sidecar when present.
inline Dataset load_dataset_csv(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw DataError(path + " is empty");
  auto header = csv::split_line(line);
  if (header.size() < 2)
    throw DataError(path + ": need at least one feature column and a target column");
  std::vector<ColumnMapping> schema;
  for (std::size_t i = 0; i + 1 < header.size(); ++i)
    schema.push_back({header[i], ColumnRole::Feature, header[i]});
  schema.push_back({header.back(), ColumnRole::Target, header.back()});
  in.close();

  auto loaded = load_empirical_csv(path, schema);
  if (loaded.report.dropped > 0)
    throw DataError(path + ": " + std::to_string(loaded.report.dropped) + " malformed rows");
  Dataset ds = std::move(loaded.dataset);

  std::ifstream side(norm_sidecar_path(path));
  if (side) {
    std::vector<double> scale(ds.feature_count(), 0.0);
    std::getline(side, line); // header
    std::size_t seen = 0;
    while (std::getline(side, line)) {
      auto cells = csv::split_line(line);
      if (cells.size() != 2)
        throw DataError("malformed norm sidecar for " + path);
      auto idx = ds.feature_index(cells[0]);
      auto v = csv::parse_number(cells[1]);
      if (!idx || !v)
        throw DataError("norm sidecar names unknown feature '" + cells[0] + "'");
      scale[*idx] = *v;
      ++seen;
    }
    if (seen != ds.feature_count())
      throw DataError("norm sidecar for " + path + " does not cover every feature");
    ds.norm = std::move(scale);
  }
  ds.provenance = "file:" + path;
  ds.validate();
  return ds;
}

} // namespace autopl
