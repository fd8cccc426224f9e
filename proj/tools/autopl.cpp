#include "cli_support.hpp"

#include "autopl/constraints.hpp"
#include "autopl/dataset.hpp"
#include "autopl/dsr/trainer.hpp"
#include "autopl/eval/baseline.hpp"
#include "autopl/eval/metrics.hpp"
#include "autopl/eval/report.hpp"
#include "autopl/eval/validity.hpp"
#include "autopl/expr_io.hpp"
#include "autopl/infix.hpp"
#include "autopl/kan/checkpoint.hpp"
#include "autopl/kan/symbolic.hpp"
#include "autopl/presets.hpp"
#include "autopl/vocabulary.hpp"

#include <iostream>
#include <optional>

namespace
{

using namespace autopl;
using cli::json;
using cli::Manifest;
using cli::Settings;
using cli::UsageError;

// Options every subcommand shares.
struct Common
{
  std::string out = "autopl-out";
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void bind(Settings& s)
  {
    s.config_option();
    s.option("out", out, "output directory");
    s.option("seed", seed, "base seed; run i uses seed + i");
    s.option("threads", threads, "worker threads (falls back to AUTOPL_THREADS)");
  }
};

std::string shape_label(const std::vector<std::size_t>& shape)
{
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i)
    s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

eval::Predictor expression_predictor(expr::ExpressionTree e)
{
  return [e = std::move(e)](const Dataset& t) { return expr::evaluate(e, t.features); };
}

void write_tables(Manifest& m, const std::vector<eval::ReportRow>& rows)
{
  auto metrics = m.output("metrics.csv");
  eval::write_metrics_csv(rows, metrics);
  auto runs = m.output("runs.csv");
  eval::write_runs_csv(rows, runs);
  auto scatter = m.output("scatter.csv");
  eval::write_scatter_csv(rows, scatter);
  auto summary = m.output("summary.txt");
  eval::write_summary(rows, summary);
  eval::write_summary(rows, std::cout);
}

json validity_json(const eval::ValidityReport& v)
{
  json roles = json::array();
  for (auto r : v.oscillatory_over)
    roles.push_back(eval::to_string(r));
  return {{"verdict", eval::to_string(v.verdict)},
          {"uses_distance", v.uses_distance},
          {"uses_frequency", v.uses_frequency},
          {"monotone_in_distance", v.monotone_in_distance},
          {"monotone_in_frequency", v.monotone_in_frequency},
          {"oscillatory_over", roles},
          {"diagnostics", v.diagnostics}};
}

void check_split(double split, std::size_t runs)
{
  if (!(split > 0.0 && split < 1.0))
    throw UsageError("--split must lie in (0, 1)");
  (void)runs;
}

// ---------------------------------------------------------------------------

struct GenData
{
  Common common;
  std::string model = "abg";
  std::size_t count = 1000;
  bool normalize = false;
  std::string input;
  std::string schema;

  void bind(Settings& s)
  {
    common.bind(s);
    s.option("model", model, "synthetic model: abg or ci");
    s.option("count", count, "rows to generate");
    s.flag("normalize", normalize, "divide each feature by its max magnitude (writes a .norm sidecar)");
    s.option("input", input, "measured CSV to ingest instead of generating");
    s.option("schema", schema, "column roles for --input, e.g. dist=feature:d,pl=target");
  }

  void run(Settings& s, Manifest& m)
  {
    Dataset ds;
    if (!input.empty()) {
      if (schema.empty())
        throw UsageError("--input needs --schema");
      std::vector<ColumnMapping> mapping;
      try {
        mapping = parse_schema(schema);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      m.input(input);
      auto loaded = load_empirical_csv(input, mapping);
      if (loaded.report.dropped)
        std::cerr << "autopl: dropped " << loaded.report.dropped << " of " << loaded.report.rows_read
                  << " rows with missing or non-numeric values\n";
      ds = std::move(loaded.dataset);
    } else {
      if (!s.unset("input") || !s.unset("schema"))
        throw UsageError("--schema only applies with --input");
      auto spec = SyntheticSpec::defaults(parse_model_kind(model));
      spec.count = count;
      spec.seed = common.seed;
      ds = generate_synthetic(spec);
    }
    if (normalize)
      ds = normalize_max(ds);
    const auto path = (m.dir() / "data.csv").string();
    write_dataset_csv(ds, path);
    m.record_output("data.csv");
    if (ds.norm) {
      write_norm_sidecar(ds, path);
      m.record_output("data.csv.norm");
    }
    std::cout << "wrote " << ds.size() << " rows x " << ds.feature_count() << " features to " << path << '\n';
  }
};

// ---------------------------------------------------------------------------

struct TrainKan
{
  Common common;
  std::string data;
  std::string preset;
  std::vector<std::size_t> shape;
  int grid = 5;
  int order = 3;
  int steps = 100;
  double lambda = 0.0;
  double learning_rate = 0.02;
  double domain_margin = 0.05;
  bool fit_hidden_domains = false;
  double prune = 0.0;
  bool no_symbolic = false;
  int retrain_iterations = 50;
  std::size_t runs = 1;
  double split = 0.8;

  void bind(Settings& s)
  {
    common.bind(s);
    s.option("data", data, "dataset CSV");
    s.option("preset", preset, "tuned settings: abg, ci, indoor or outdoor");
    s.option("shape", shape, "layer widths, e.g. 4,4,1 (default: n,n,1)");
    s.option("grid", grid, "spline grid intervals");
    s.option("order", order, "spline order k (degree k-1)");
    s.option("steps", steps, "training steps");
    s.option("lambda", lambda, "activation L1 weight");
    s.option("learning_rate", learning_rate, "Adam step size");
    s.option("domain_margin", domain_margin, "spline domain is [-1, 1 + margin]");
    s.flag("fit_hidden_domains", fit_hidden_domains, "size hidden-layer spline domains from the data");
    s.option("prune", prune, "drop edges below this importance (0 = keep all)");
    s.flag("no_symbolic", no_symbolic, "stop after spline training");
    s.option("retrain_iterations", retrain_iterations, "affine retraining iterations after auto-symbolic");
    s.option("runs", runs, "Monte-Carlo runs");
    s.option("split", split, "training fraction");
  }

  json preset_json() const
  {
    auto c = presets::kan(preset);
    return {{"shape", c.shape}, {"grid", c.grid}, {"order", c.order}, {"steps", c.steps}, {"lambda", c.lambda}};
  }

  struct RunState
  {
    std::optional<kan::KanNetwork> spline, symbolic;
    std::vector<double> loss;
    std::vector<kan::EdgeFitReport> fits;
    kan::RetrainReport retrain;
    expr::ExpressionTree expression;
    eval::ValidityReport validity;
    std::string symbolic_error;
  };

  void run(Settings&, Manifest& m)
  {
    if (data.empty())
      throw UsageError("--data is required");
    check_split(split, runs);
    m.input(data);
    const Dataset ds = load_dataset_csv(data);
    const Dataset raw = denormalize(ds);
    const Dataset work = ds.norm ? ds : normalize_max(ds);

    kan::KanTrainConfig cfg;
    cfg.shape = shape.empty() ? std::vector<std::size_t>{ds.feature_count(), ds.feature_count(), 1} : shape;
    cfg.grid = grid;
    cfg.order = order;
    cfg.steps = steps;
    cfg.lambda = lambda;
    cfg.learning_rate = learning_rate;
    cfg.domain_margin = domain_margin;
    cfg.fit_hidden_domains = fit_hidden_domains;
    cfg.validate();
    if (cfg.shape.front() != ds.feature_count())
      throw UsageError("shape starts with " + std::to_string(cfg.shape.front()) + " but the dataset has " +
                       std::to_string(ds.feature_count()) + " features");
    if (runs < 1)
      throw UsageError("--runs must be >= 1");

    const auto probe = eval::probe_from_data(raw.features);
    const auto roles = eval::roles_from_names(ds.feature_names);
    std::vector<RunState> state(runs);
    const std::uint64_t base = common.seed;

    auto fit_spline = [&](const Dataset& train, std::uint64_t seed) -> eval::Predictor {
      auto& st = state[seed - base];
      auto c = cfg;
      c.seed = seed;
      kan::TrainReport tr;
      auto net = kan::fit(train, c, &tr);
      if (prune > 0.0)
        kan::prune(net, train.features, prune);
      st.loss = std::move(tr.loss_history);
      st.spline = net;
      if (!no_symbolic) {
        try {
          auto sym = net;
          st.fits = kan::auto_symbolic(sym, train.features);
          st.retrain = kan::retrain_affine(sym, train, retrain_iterations);
          st.expression = kan::extract_expression(sym);
          st.validity = eval::check_validity(st.expression, roles, probe);
          st.symbolic = std::move(sym);
        } catch (const std::exception& e) {
          st.symbolic_error = e.what();
        }
      }
      return [net](const Dataset& t) { return net.forward(t.features); };
    };
    const std::string label = "KAN " + shape_label(cfg.shape);
    std::vector<eval::ReportRow> rows;
    rows.push_back({label, eval::monte_carlo_eval(fit_spline, work, runs, split, base, common.threads), "", "n/a"});

    const RunState* first = nullptr;
    for (const auto& st : state)
      if (st.spline) {
        first = &st;
        break;
      }

    {
      auto h = m.output("history.csv");
      h << "run,step,loss\n";
      for (std::size_t r = 0; r < runs; ++r)
        for (std::size_t k = 0; k < state[r].loss.size(); ++k)
          h << r << ',' << k << ',' << csv::format_double(state[r].loss[k]) << '\n';
    }
    kan::save_checkpoint(*first->spline, (m.dir() / "kan.ckpt").string());
    m.record_output("kan.ckpt");

    if (!no_symbolic) {
      auto fit_symbolic = [&](const Dataset&, std::uint64_t seed) -> eval::Predictor {
        const auto& st = state[seed - base];
        if (!st.symbolic)
          throw TrainingError(st.symbolic_error.empty() ? "spline training failed" : st.symbolic_error);
        return [net = *st.symbolic](const Dataset& t) { return net.forward(t.features); };
      };
      const RunState* sym = nullptr;
      for (const auto& st : state)
        if (st.symbolic) {
          sym = &st;
          break;
        }
      auto rep = eval::monte_carlo_eval(fit_symbolic, work, runs, split, base, 1);
      rows.push_back({label + " auto-symbolic", std::move(rep), expr::to_infix(sym->expression, ds.feature_names),
                      eval::to_string(sym->validity.verdict)});

      auto ex = m.output("expressions.txt");
      json vj = json::array();
      for (std::size_t r = 0; r < runs; ++r) {
        const auto& st = state[r];
        if (!st.symbolic) {
          ex << "run " << r << ": failed: " << st.symbolic_error << '\n';
          continue;
        }
        ex << "run " << r << " [" << eval::to_string(st.validity.verdict) << "]: "
           << expr::to_infix(st.expression, ds.feature_names) << '\n';
        for (const auto& f : st.fits)
          ex << "    edge " << f.layer << ':' << f.from << "->" << f.to << ' ' << kan::family_name(f.family)
             << " r2=" << csv::format_double(f.fit_r2) << '\n';
        json j = validity_json(st.validity);
        j["run"] = r;
        j["expression"] = expr::to_json(st.expression, ds.feature_names);
        vj.push_back(std::move(j));
      }
      auto vf = m.output("validity.json");
      vf << vj.dump(2) << '\n';
      kan::save_checkpoint(*sym->symbolic, (m.dir() / "kan_symbolic.ckpt").string());
      m.record_output("kan_symbolic.ckpt");
      auto g = m.output("graph.csv");
      kan::write_graph_csv(*sym->symbolic, work.features, g);
    } else {
      auto g = m.output("graph.csv");
      kan::write_graph_csv(*first->spline, work.features, g);
      auto ex = m.output("expressions.txt");
      ex << "symbolic extraction skipped (--no-symbolic)\n";
    }
    write_tables(m, rows);
  }
};

// ---------------------------------------------------------------------------

struct TrainDsr
{
  Common common;
  std::string data;
  std::string preset;
  std::string policy = "rspg";
  double epsilon = 0.05;
  double ewma_alpha = 0.25;
  std::size_t queue_k = 10;
  std::size_t batch_size = 200;
  double learning_rate = 0.002;
  double entropy_weight = 0.008;
  std::size_t sample_budget = 10000;
  std::size_t hidden = 32;
  double reward_threshold = 0.999;
  std::size_t min_len = 4;
  std::size_t max_len = 40;
  std::string repeat = "auto";
  std::string operators;
  int const_iterations = 200;
  std::size_t runs = 1;
  double split = 0.8;

  void bind(Settings& s)
  {
    common.bind(s);
    s.option("data", data, "dataset CSV");
    s.option("preset", preset, "tuned settings: abg, ci, indoor or outdoor");
    s.option("policy", policy, "rspg, vpg or pqt");
    s.option("epsilon", epsilon, "RSPG risk quantile");
    s.option("ewma_alpha", ewma_alpha, "VPG baseline coefficient");
    s.option("queue_k", queue_k, "PQT queue size");
    s.option("batch_size", batch_size, "sequences per step");
    s.option("learning_rate", learning_rate, "Adam step size");
    s.option("entropy_weight", entropy_weight, "entropy bonus weight");
    s.option("sample_budget", sample_budget, "total sequences sampled");
    s.option("hidden", hidden, "GRU hidden width");
    s.option("reward_threshold", reward_threshold, "stop once the best reward reaches this");
    s.option("min_len", min_len, "minimum expression length in tokens");
    s.option("max_len", max_len, "maximum expression length in tokens");
    s.option("repeat", repeat, "occurrence bounds token:min:max,... ('auto' = d and f 1..3, 'none' = off)");
    s.option("operators", operators, "operator tokens, e.g. add,sub,mul,div,log10");
    s.option("const_iterations", const_iterations, "Nelder-Mead iterations per constant fit");
    s.option("runs", runs, "Monte-Carlo runs");
    s.option("split", split, "training fraction");
  }

  json preset_json(dsr::PolicyKind kind) const
  {
    auto c = presets::dsr(preset, kind);
    return {{"sample_budget", c.sample_budget},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"entropy_weight", c.entropy_weight}};
  }

  static std::vector<std::string> split_list(const std::string& s)
  {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty())
        out.push_back(item);
    return out;
  }

  std::vector<expr::RepeatBound> parse_repeat(const std::vector<std::string>& names) const
  {
    std::vector<expr::RepeatBound> out;
    if (repeat == "none")
      return out;
    if (repeat == "auto") {
      for (const auto& [var, role] : eval::roles_from_names(names))
        if (role != eval::Role::Other)
          out.push_back({expr::Token::variable(var), 1, 3});
      return out;
    }
    for (const auto& item : split_list(repeat)) {
      std::stringstream ss(item);
      std::string tok, lo, hi;
      if (!std::getline(ss, tok, ':') || !std::getline(ss, lo, ':') || !std::getline(ss, hi))
        throw UsageError("repeat entry '" + item + "' is not token:min:max");
      expr::RepeatBound b;
      auto it = std::find(names.begin(), names.end(), tok);
      if (it != names.end()) {
        b.token = expr::Token::variable(static_cast<int>(it - names.begin()));
      } else if (auto op = expr::op_from_name(tok); op && *op != expr::Op::Var && *op != expr::Op::Literal) {
        b.token = expr::Token::make(*op);
      } else {
        throw UsageError("repeat entry names unknown token '" + tok + "'");
      }
      try {
        b.min = std::stoi(lo);
        b.max = std::stoi(hi);
      } catch (const std::exception&) {
        throw UsageError("repeat entry '" + item + "' has non-integer bounds");
      }
      out.push_back(b);
    }
    return out;
  }

  void run(Settings&, Manifest& m)
  {
    if (data.empty())
      throw UsageError("--data is required");
    check_split(split, runs);
    if (runs < 1)
      throw UsageError("--runs must be >= 1");
    m.input(data);
    const Dataset ds = load_dataset_csv(data);

    dsr::TrainerConfig cfg;
    cfg.policy_kind = dsr::parse_policy_kind(policy);
    cfg.epsilon = epsilon;
    cfg.ewma_alpha = ewma_alpha;
    cfg.queue_k = queue_k;
    cfg.batch_size = batch_size;
    cfg.learning_rate = learning_rate;
    cfg.entropy_weight = entropy_weight;
    cfg.sample_budget = sample_budget;
    cfg.hidden = hidden;
    cfg.reward_threshold = reward_threshold;
    cfg.threads = common.threads;
    cfg.constant_fit.max_iterations = const_iterations;
    cfg.validate();

    expr::VocabularyOptions vopt;
    if (!operators.empty()) {
      vopt.operators.clear();
      for (const auto& name : split_list(operators)) {
        auto op = expr::op_from_name(name);
        if (!op || expr::arity(*op) == 0)
          throw UsageError("'" + name + "' is not a unary or binary operator");
        vopt.operators.push_back(*op);
      }
    }
    const auto vocab = expr::Vocabulary::make(ds.feature_count(), vopt, ds.feature_names);
    expr::ConstraintSet cs;
    cs.min_len = min_len;
    cs.max_len = max_len;
    cs.repeat = parse_repeat(ds.feature_names);
    cs.validate();

    const auto probe = eval::probe_from_data(ds.features);
    const auto roles = eval::roles_from_names(ds.feature_names);
    std::vector<std::optional<dsr::TrainResult>> results(runs);
    std::vector<eval::ValidityReport> validity(runs);
    const std::uint64_t base = common.seed;
    auto fit = [&](const Dataset& train, std::uint64_t seed) -> eval::Predictor {
      auto c = cfg;
      c.seed = seed;
      auto res = dsr::train(c, train, vocab, cs);
      validity[seed - base] = eval::check_validity(res.best, roles, probe);
      results[seed - base] = res;
      return expression_predictor(res.best);
    };
    // runs go one after another; --threads parallelizes reward evaluation
    auto rep = eval::monte_carlo_eval(fit, ds, runs, split, base, 1);

    std::size_t best_run = 0;
    double best_reward = -1.0;
    for (std::size_t r = 0; r < runs; ++r)
      if (results[r] && results[r]->best_reward > best_reward) {
        best_reward = results[r]->best_reward;
        best_run = r;
      }

    {
      auto h = m.output("history.csv");
      h << "run,step,best_reward,mean_reward,best_expression\n";
      for (std::size_t r = 0; r < runs; ++r) {
        if (!results[r])
          continue;
        for (const auto& row : results[r]->history)
          h << r << ',' << row.step << ',' << csv::format_double(row.best_reward) << ','
            << csv::format_double(row.mean_reward) << ",\"" << row.best_expression_infix << "\"\n";
      }
    }
    auto ex = m.output("expressions.txt");
    json all = json::array();
    for (std::size_t r = 0; r < runs; ++r) {
      if (!results[r]) {
        ex << "run " << r << ": failed\n";
        continue;
      }
      const auto& res = *results[r];
      ex << "run " << r << " reward=" << csv::format_double(res.best_reward) << " samples=" << res.samples_used
         << " [" << eval::to_string(validity[r].verdict) << "]: " << expr::to_infix(res.best, ds.feature_names) << '\n';
      json j = validity_json(validity[r]);
      j["run"] = r;
      j["reward"] = res.best_reward;
      j["samples"] = res.samples_used;
      j["expression"] = expr::to_json(res.best, ds.feature_names);
      all.push_back(std::move(j));
    }
    auto ej = m.output("expressions.json");
    ej << all.dump(2) << '\n';
    const std::string label = "DSR-" + [&] {
      auto s = dsr::to_string(cfg.policy_kind);
      std::transform(s.begin(), s.end(), s.begin(), ::toupper);
      return s;
    }();
    std::vector<eval::ReportRow> rows{{label, std::move(rep), expr::to_infix(results[best_run]->best, ds.feature_names),
                                       eval::to_string(validity[best_run].verdict)}};
    write_tables(m, rows);
  }
};

// ---------------------------------------------------------------------------

struct Eval
{
  Common common;
  std::string data;
  std::string expression;
  std::string expr_json;
  std::string checkpoint;
  std::string label;
  std::size_t runs = 0;
  double split = 0.8;
  bool refit = false;
  std::string with_baselines;

  void bind(Settings& s)
  {
    common.bind(s);
    s.option("data", data, "dataset CSV");
    s.option("expr", expression, "infix expression over the dataset's feature names");
    s.option("expr_json", expr_json, "expression JSON (as written by train-dsr)");
    s.option("checkpoint", checkpoint, "KAN checkpoint");
    s.option("label", label, "method name in the report");
    s.option("runs", runs, "Monte-Carlo runs (0 = score the full dataset once)");
    s.option("split", split, "training fraction for Monte-Carlo runs");
    s.flag("refit", refit, "refit constant placeholders on each training split");
    s.option("with_baselines", with_baselines, "append analytical baselines: indoor or outdoor");
  }

  void run(Settings&, Manifest& m)
  {
    if (data.empty())
      throw UsageError("--data is required");
    const int sources = !expression.empty() + !expr_json.empty() + !checkpoint.empty();
    if (sources != 1)
      throw UsageError("give exactly one of --expr, --expr-json, --checkpoint");
    if (runs > 0)
      check_split(split, runs);
    std::optional<eval::Scenario> scenario;
    if (!with_baselines.empty()) {
      try {
        scenario = eval::parse_scenario(with_baselines);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    m.input(data);
    const Dataset ds = load_dataset_csv(data);

    eval::FitFn fit;
    std::optional<expr::ExpressionTree> shown;
    std::string shown_space_note;
    eval::ValidityReport validity;
    Dataset scored = ds; // feature space the model reads
    if (!checkpoint.empty()) {
      m.input(checkpoint);
      auto net = kan::load_checkpoint(checkpoint);
      if (net.shape().front() != ds.feature_count())
        throw DataError("checkpoint expects " + std::to_string(net.shape().front()) + " features, dataset has " +
                        std::to_string(ds.feature_count()));
      // the network reads features divided by its recorded input scales
      Dataset raw = denormalize(ds);
      scored = raw;
      if (!net.input_scale.empty())
        for (std::size_t r = 0; r < raw.size(); ++r)
          for (std::size_t c = 0; c < raw.feature_count(); ++c)
            scored.features(r, c) = raw.features(r, c) / net.input_scale[c];
      fit = [net](const Dataset&, std::uint64_t) -> eval::Predictor {
        return [net](const Dataset& t) { return net.forward(t.features); };
      };
      if (net.fully_symbolic()) {
        shown = kan::extract_expression(net);
        validity = eval::check_validity(*shown, eval::roles_from_names(ds.feature_names), raw.features);
      }
      if (label.empty())
        label = "KAN " + shape_label(net.shape()) + (net.fully_symbolic() ? " auto-symbolic" : "");
    } else {
      expr::ExpressionTree e;
      if (!expression.empty()) {
        try {
          e = expr::parse_infix(expression, ds.feature_names);
        } catch (const std::invalid_argument& err) {
          throw UsageError(std::string("--expr: ") + err.what());
        }
      } else {
        m.input(expr_json);
        std::ifstream in(expr_json);
        if (!in)
          throw DataError("cannot open " + expr_json);
        json j;
        try {
          j = json::parse(in);
        } catch (const json::exception& err) {
          throw FormatError(expr_json + ": " + err.what());
        }
        // accept a bare expression, a train-dsr record, or a list of records
        if (j.is_array()) {
          if (j.empty())
            throw FormatError(expr_json + " holds an empty list");
          j = j.front();
        }
        e = expr::from_json(j.contains("expression") ? j["expression"] : j);
      }
      for (const auto& t : e.tokens)
        if (t.op == expr::Op::Var && static_cast<std::size_t>(t.var) >= ds.feature_count())
          throw DataError("expression uses x" + std::to_string(t.var) + " but the dataset has " +
                          std::to_string(ds.feature_count()) + " features");
      if (refit && e.placeholder_count() > 0) {
        fit = [e](const Dataset& train, std::uint64_t) -> eval::Predictor {
          auto f = expr::optimize_constants(e, train);
          auto tuned = e;
          tuned.constants = f.constants;
          return expression_predictor(tuned);
        };
      } else {
        fit = [e](const Dataset&, std::uint64_t) { return expression_predictor(e); };
      }
      shown = e;
      validity = eval::check_validity(e, eval::roles_from_names(ds.feature_names), ds.features);
      if (label.empty())
        label = "expression";
    }

    std::vector<eval::ReportRow> rows;
    eval::MetricsReport rep;
    if (runs == 0) {
      auto pred = fit(scored, common.seed)(scored);
      rep = eval::full_dataset_report(pred, scored.target);
    } else {
      rep = eval::monte_carlo_eval(fit, scored, runs, split, common.seed, common.threads);
    }
    const std::string verdict = shown ? eval::to_string(validity.verdict) : "n/a";
    rows.push_back({label, std::move(rep), shown ? expr::to_infix(*shown, ds.feature_names) : "", verdict});
    if (scenario) {
      auto base = eval::baseline_table(ds, *scenario);
      rows.insert(rows.end(), base.begin(), base.end());
    }

    auto ex = m.output("expressions.txt");
    ex << label << " [" << verdict << "]: " << (shown ? expr::to_infix(*shown, ds.feature_names) : "(spline network)")
       << '\n';
    auto vf = m.output("validity.json");
    vf << (shown ? validity_json(validity) : json{{"verdict", "n/a"}, {"diagnostics", {"spline network"}}}).dump(2)
       << '\n';
    write_tables(m, rows);
    std::cout << "validity: " << verdict << '\n';
    for (const auto& d : validity.diagnostics)
      std::cout << "  " << d << '\n';
  }
};

// ---------------------------------------------------------------------------

struct Baseline
{
  Common common;
  std::string data;
  std::string scenario;
  eval::BaselineColumns cols;

  void bind(Settings& s)
  {
    common.bind(s);
    s.option("data", data, "measured dataset CSV");
    s.option("scenario", scenario, "indoor or outdoor");
    s.option("distance_column", cols.distance, "distance feature (m)");
    s.option("walls_column", cols.walls, "wall-count feature");
    s.option("floors_column", cols.floors, "floor-count feature");
    s.option("height_column", cols.height, "antenna-height feature (m)");
    s.option("frequency_column", cols.frequency, "frequency feature (MHz)");
    s.option("default_f_mhz", cols.default_f_mhz, "frequency when the dataset has no frequency column");
  }

  void run(Settings&, Manifest& m)
  {
    if (data.empty())
      throw UsageError("--data is required");
    eval::Scenario which;
    try {
      which = eval::parse_scenario(scenario);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    m.input(data);
    write_tables(m, eval::baseline_table(load_dataset_csv(data), which, cols));
  }
};

// ---------------------------------------------------------------------------

struct Report
{
  Common common;
  std::vector<std::string> inputs;

  void bind(Settings& s)
  {
    common.bind(s);
    s.option("inputs", inputs, "output directories (or metrics.csv files) to combine");
  }

  static double number(const std::string& cell, const std::string& where)
  {
    auto v = csv::parse_number(cell);
    if (!v)
      throw FormatError(where + ": '" + cell + "' is not a number");
    return *v;
  }

  void run(Settings&, Manifest& m)
  {
    if (inputs.empty())
      throw UsageError("--inputs needs at least one directory");
    std::vector<eval::ReportRow> rows;
    for (const auto& in : inputs) {
      cli::fs::path p = in;
      if (cli::fs::is_directory(p))
        p /= "metrics.csv";
      m.input(p.string());
      std::ifstream f(p);
      if (!f)
        throw DataError("cannot open " + p.string());
      std::string line;
      std::getline(f, line);
      const auto header = csv::split_line(line);
      if (header.size() != 12 || header[0] != "method")
        throw FormatError(p.string() + " is not a metrics.csv");
      while (std::getline(f, line)) {
        if (line.empty())
          continue;
        auto c = csv::split_line(line);
        if (c.size() != 12)
          throw FormatError(p.string() + ": row has " + std::to_string(c.size()) + " cells");
        eval::ReportRow r;
        r.method = c[0];
        r.metrics.n_runs = static_cast<std::size_t>(number(c[1], p.string()));
        eval::Stat* stats[] = {&r.metrics.mae, &r.metrics.mse, &r.metrics.mape, &r.metrics.r2};
        for (int k = 0; k < 4; ++k) {
          stats[k]->mean = number(c[2 + 2 * k], p.string());
          stats[k]->std = number(c[3 + 2 * k], p.string());
        }
        r.expression = c[10];
        r.validity = c[11];
        rows.push_back(std::move(r));
      }
    }
    auto metrics = m.output("metrics.csv");
    eval::write_metrics_csv(rows, metrics);
    auto summary = m.output("summary.txt");
    eval::write_summary(rows, summary);
    eval::write_summary(rows, std::cout);
  }
};

// ---------------------------------------------------------------------------

template <class Cmd>
struct Registered
{
  Cmd cmd;
  CLI::App* app = nullptr;
  std::unique_ptr<Settings> settings;

  void add(CLI::App& root, const std::string& name, const std::string& help)
  {
    app = root.add_subcommand(name, help);
    settings = std::make_unique<Settings>(app);
    cmd.bind(*settings);
  }
};

int fail(int code, const std::string& msg)
{
  std::string one_line = msg;
  std::replace(one_line.begin(), one_line.end(), '\n', ' ');
  std::cerr << "autopl: error: " << one_line << '\n';
  return code;
}

template <class Cmd>
int execute(Registered<Cmd>& r, const std::string& name, const std::vector<std::string>& argv,
            const std::function<void()>& presets)
{
  auto& s = *r.settings;
  s.load_config();
  presets();
  r.cmd.common.threads = cli::resolve_threads(s, r.cmd.common.threads);
  Manifest m(name, r.cmd.common.out);
  r.cmd.run(s, m);
  m.write(s.snapshot(), r.cmd.common.seed, argv);
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Automated pathloss modelling with KANs and deep symbolic regression", "autopl"};
  app.set_version_flag("--version", cli::kVersion);
  app.require_subcommand(1);

  Registered<GenData> gen;
  Registered<TrainKan> kan_cmd;
  Registered<TrainDsr> dsr_cmd;
  Registered<Eval> eval_cmd;
  Registered<Baseline> base_cmd;
  Registered<Report> report_cmd;
  gen.add(app, "gen-data", "generate a synthetic dataset or ingest a measured one");
  kan_cmd.add(app, "train-kan", "train a KAN, map it to symbolic functions and report metrics");
  dsr_cmd.add(app, "train-dsr", "search for an expression with deep symbolic regression");
  eval_cmd.add(app, "eval", "score an expression or checkpoint and check physical validity");
  base_cmd.add(app, "baseline", "score the analytical indoor/outdoor baselines on measured data");
  report_cmd.add(app, "report", "combine metrics.csv files into one summary table");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0)
      return app.exit(e);
    return fail(1, e.what());
  }

  try {
    auto none = [] {};
    if (gen.app->parsed())
      return execute(gen, "gen-data", args, none);
    if (kan_cmd.app->parsed())
      return execute(kan_cmd, "train-kan", args, [&] {
        if (!kan_cmd.cmd.preset.empty())
          kan_cmd.settings->apply_preset(kan_cmd.cmd.preset_json());
      });
    if (dsr_cmd.app->parsed())
      return execute(dsr_cmd, "train-dsr", args, [&] {
        if (!dsr_cmd.cmd.preset.empty())
          dsr_cmd.settings->apply_preset(dsr_cmd.cmd.preset_json(dsr::parse_policy_kind(dsr_cmd.cmd.policy)));
      });
    if (eval_cmd.app->parsed())
      return execute(eval_cmd, "eval", args, none);
    if (base_cmd.app->parsed())
      return execute(base_cmd, "baseline", args, none);
    if (report_cmd.app->parsed())
      return execute(report_cmd, "report", args, none);
  } catch (const UsageError& e) {
    return fail(1, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(1, e.what());
  } catch (const DataError& e) {
    return fail(2, e.what());
  } catch (const FormatError& e) {
    return fail(2, e.what());
  } catch (const std::domain_error& e) {
    return fail(2, e.what());
  } catch (const TrainingError& e) {
    return fail(3, e.what());
  } catch (const std::exception& e) {
    return fail(3, e.what());
  }
  return 1;
}
