#pragma once

// Checkpoint format (line oriented, whitespace separated, floats %.17g):
//
//   autopl-kan <version>
//   shape <n_1> ... <n_L+1>
//   features <name_1> ... | features -
//   input_scale <s_1> ... | input_scale -
//   output <scale> <offset>
//   layer <l> <grid> <order> <lo> <hi>
//   edge <l> <p> <q> <active> <w_base> <w_spline> <count> <c_0> ...
//   symbolic <l> <p> <q> <family> <a> <b> <c> <d> <fit_r2>
//   end

#include "autopl/error.hpp"
#include "autopl/kan/network.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace autopl::kan
{

inline constexpr int kCheckpointVersion = 1;

namespace detail
{

inline std::string fmt17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& what)
{
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size())
      throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("checkpoint: bad number '" + s + "' in " + what);
  }
}

inline long parse_long(const std::string& s, const std::string& what)
{
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size())
      throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("checkpoint: bad integer '" + s + "' in " + what);
  }
}

inline std::vector<std::string> words(const std::string& line)
{
  std::istringstream ss(line);
  std::vector<std::string> w;
  std::string s;
  while (ss >> s)
    w.push_back(s);
  return w;
}

inline void expect_header(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("checkpoint: empty file");
  auto w = words(line);
  if (w.size() != 2 || w[0] != "autopl-kan")
    throw FormatError("checkpoint: missing 'autopl-kan' header");
  if (parse_long(w[1], "header") != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + w[1] + " (this build reads version " +
                      std::to_string(kCheckpointVersion) + ")");
}

inline std::vector<std::size_t> parse_shape(const std::vector<std::string>& w)
{
  std::vector<std::size_t> shape;
  for (std::size_t i = 1; i < w.size(); ++i) {
    const long v = parse_long(w[i], "shape");
    if (v < 1)
      throw FormatError("checkpoint: layer width must be >= 1");
    shape.push_back(static_cast<std::size_t>(v));
  }
  if (shape.size() < 2)
    throw FormatError("checkpoint: shape needs at least two widths");
  return shape;
}

} // namespace detail

inline void save_checkpoint(const KanNetwork& net, std::ostream& out)
{
  using detail::fmt17;
  out << "autopl-kan " << kCheckpointVersion << "\n";
  out << "shape";
  for (auto w : net.shape())
    out << " " << w;
  out << "\nfeatures";
  if (net.feature_names.empty())
    out << " -";
  for (const auto& n : net.feature_names)
    out << " " << n;
  out << "\ninput_scale";
  if (net.input_scale.empty())
    out << " -";
  for (double s : net.input_scale)
    out << " " << fmt17(s);
  out << "\noutput " << fmt17(net.output_scale) << " " << fmt17(net.output_offset) << "\n";
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& layer = net.layer(l);
    out << "layer " << l << " " << layer.basis.grid() << " " << layer.basis.order() << " " << fmt17(layer.basis.lo())
        << " " << fmt17(layer.basis.hi()) << "\n";
    for (std::size_t p = 0; p < layer.d_in; ++p)
      for (std::size_t q = 0; q < layer.d_out; ++q) {
        const auto& e = layer.edge(p, q);
        out << "edge " << l << " " << p << " " << q << " " << (e.active ? 1 : 0) << " " << fmt17(e.w_base) << " "
            << fmt17(e.w_spline) << " " << e.coeffs.size();
        for (double c : e.coeffs)
          out << " " << fmt17(c);
        out << "\n";
        if (e.symbolic) {
          const auto& s = *e.symbolic;
          out << "symbolic " << l << " " << p << " " << q << " " << family_name(s.family) << " " << fmt17(s.a) << " "
              << fmt17(s.b) << " " << fmt17(s.c) << " " << fmt17(s.d) << " " << fmt17(s.fit_r2) << "\n";
        }
      }
  }
  out << "end\n";
}

inline void save_checkpoint(const KanNetwork& net, const std::string& path)
{
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write checkpoint '" + path + "'");
  save_checkpoint(net, out);
  if (!out)
    throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

// Reads only the header and shape line.
inline std::vector<std::size_t> read_checkpoint_shape(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open checkpoint '" + path + "'");
  detail::expect_header(in);
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("checkpoint: missing shape line");
  auto w = detail::words(line);
  if (w.empty() || w[0] != "shape")
    throw FormatError("checkpoint: second line must be 'shape'");
  return detail::parse_shape(w);
}

inline KanNetwork load_checkpoint(std::istream& in)
{
  detail::expect_header(in);
  std::vector<std::size_t> shape;
  std::vector<std::string> features;
  std::vector<double> input_scale;
  double out_scale = 1.0, out_offset = 0.0;
  struct LayerSpec
  {
    int grid = 0, order = 0;
    double lo = 0, hi = 0;
    bool seen = false;
  };
  std::vector<LayerSpec> specs;
  std::vector<std::vector<KanEdge>> edges;
  std::vector<std::vector<bool>> seen_edge;
  bool ended = false;

  std::string line;
  while (std::getline(in, line)) {
    auto w = detail::words(line);
    if (w.empty())
      continue;
    const auto& tag = w[0];
    auto need = [&](std::size_t n) {
      if (w.size() < n)
        throw FormatError("checkpoint: truncated '" + tag + "' line");
    };
    if (tag == "shape") {
      shape = detail::parse_shape(w);
      specs.assign(shape.size() - 1, {});
      edges.resize(shape.size() - 1);
      seen_edge.resize(shape.size() - 1);
      for (std::size_t l = 0; l + 1 < shape.size(); ++l) {
        edges[l].resize(shape[l] * shape[l + 1]);
        seen_edge[l].assign(shape[l] * shape[l + 1], false);
      }
      continue;
    }
    if (tag == "end") {
      ended = true;
      break;
    }
    if (shape.empty())
      throw FormatError("checkpoint: '" + tag + "' before shape");
    if (tag == "features") {
      if (!(w.size() == 2 && w[1] == "-"))
        features.assign(w.begin() + 1, w.end());
    } else if (tag == "input_scale") {
      if (!(w.size() == 2 && w[1] == "-"))
        for (std::size_t i = 1; i < w.size(); ++i)
          input_scale.push_back(detail::parse_double(w[i], "input_scale"));
    } else if (tag == "output") {
      need(3);
      out_scale = detail::parse_double(w[1], "output");
      out_offset = detail::parse_double(w[2], "output");
    } else if (tag == "layer") {
      need(6);
      const auto l = detail::parse_long(w[1], "layer");
      if (l < 0 || static_cast<std::size_t>(l) >= specs.size())
        throw FormatError("checkpoint: layer index out of range");
      specs[l] = {static_cast<int>(detail::parse_long(w[2], "layer")), static_cast<int>(detail::parse_long(w[3], "layer")),
                  detail::parse_double(w[4], "layer"), detail::parse_double(w[5], "layer"), true};
    } else if (tag == "edge" || tag == "symbolic") {
      need(4);
      const auto l = detail::parse_long(w[1], tag), p = detail::parse_long(w[2], tag), q = detail::parse_long(w[3], tag);
      if (l < 0 || static_cast<std::size_t>(l) >= specs.size() || p < 0 || static_cast<std::size_t>(p) >= shape[l] ||
          q < 0 || static_cast<std::size_t>(q) >= shape[l + 1])
        throw FormatError("checkpoint: edge index out of range");
      auto& e = edges[l][p * shape[l + 1] + q];
      if (tag == "edge") {
        need(8);
        e.active = detail::parse_long(w[4], "edge") != 0;
        e.w_base = detail::parse_double(w[5], "edge");
        e.w_spline = detail::parse_double(w[6], "edge");
        const auto count = detail::parse_long(w[7], "edge");
        if (count < 0 || w.size() != 8 + static_cast<std::size_t>(count))
          throw FormatError("checkpoint: edge coefficient count mismatch");
        e.coeffs.clear();
        for (long i = 0; i < count; ++i)
          e.coeffs.push_back(detail::parse_double(w[8 + i], "edge"));
        seen_edge[l][p * shape[l + 1] + q] = true;
      } else {
        need(10);
        SymbolicEdge s;
        auto fam = family_from_name(w[4]);
        if (!fam)
          throw FormatError("checkpoint: unknown family '" + w[4] + "'");
        s.family = *fam;
        s.a = detail::parse_double(w[5], tag);
        s.b = detail::parse_double(w[6], tag);
        s.c = detail::parse_double(w[7], tag);
        s.d = detail::parse_double(w[8], tag);
        s.fit_r2 = detail::parse_double(w[9], tag);
        e.symbolic = s;
      }
    } else {
      throw FormatError("checkpoint: unknown record '" + tag + "'");
    }
  }
  if (!ended)
    throw FormatError("checkpoint: missing 'end' (truncated file?)");
  if (shape.empty())
    throw FormatError("checkpoint: missing shape");

  KanNetwork net = KanNetwork::create(shape, 1, 1, 0);
  for (std::size_t l = 0; l < specs.size(); ++l) {
    if (!specs[l].seen)
      throw FormatError("checkpoint: missing layer " + std::to_string(l));
    auto& layer = net.layer(l);
    try {
      layer.basis = BSplineBasis(specs[l].grid, specs[l].order, specs[l].lo, specs[l].hi);
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("checkpoint: layer ") + std::to_string(l) + ": " + e.what());
    }
    for (std::size_t i = 0; i < edges[l].size(); ++i) {
      if (!seen_edge[l][i])
        throw FormatError("checkpoint: missing edge in layer " + std::to_string(l));
      if (edges[l][i].coeffs.size() != static_cast<std::size_t>(layer.basis.size()))
        throw FormatError("checkpoint: edge in layer " + std::to_string(l) + " has the wrong coefficient count");
    }
    layer.edges = std::move(edges[l]);
  }
  if (!input_scale.empty() && input_scale.size() != shape.front())
    throw FormatError("checkpoint: input_scale length does not match the input width");
  if (!features.empty() && features.size() != shape.front())
    throw FormatError("checkpoint: feature name count does not match the input width");
  net.input_scale = std::move(input_scale);
  net.feature_names = std::move(features);
  net.output_scale = out_scale;
  net.output_offset = out_offset;
  return net;
}

inline KanNetwork load_checkpoint(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

// One row per edge: layer, endpoints, importance, state and a sampled curve
// (semicolon-separated x and y lists over the layer's spline domain).
inline void write_graph_csv(const KanNetwork& net, const Matrix& X, std::ostream& out, int samples = 21)
{
  const auto scores = edge_importance(net, X);
  out << "layer,from,to,importance,active,family,sample_x,sample_y\n";
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& layer = net.layer(l);
    for (std::size_t p = 0; p < layer.d_in; ++p)
      for (std::size_t q = 0; q < layer.d_out; ++q) {
        const auto& e = layer.edge(p, q);
        std::string xs, ys;
        for (int i = 0; i < samples; ++i) {
          const double x = layer.basis.lo() + (layer.basis.hi() - layer.basis.lo()) * i / std::max(samples - 1, 1);
          xs += (i ? ";" : "") + detail::fmt17(x);
          ys += (i ? ";" : "") + detail::fmt17(e(layer.basis, x));
        }
        out << l << "," << p << "," << q << "," << detail::fmt17(scores[l][p * layer.d_out + q]) << ","
            << (e.active ? 1 : 0) << "," << (e.symbolic ? family_name(e.symbolic->family) : (e.active ? "spline" : "pruned"))
            << "," << xs << "," << ys << "\n";
      }
  }
}

} // namespace autopl::kan
