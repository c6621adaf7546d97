#include "dspl/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dspl/distributions.hpp"
#include "dspl/inference.hpp"
#include "dspl/oracle.hpp"
#include "dspl/rng.hpp"
#include "dspl/trainer.hpp"

namespace dspl {

namespace {

struct Common {
  std::string program;
  std::string params;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::size_t depth = 512;
  std::size_t threads = 1;
  bool json = false;
  std::vector<std::string> queries;
};

void add_common(CLI::App* app, Common& c, bool with_queries = true) {
  app->add_option("program", c.program, "program file (.dspl)")->required();
  app->add_option("--params", c.params, "parameter checkpoint (JSON)");
  c.seed_opt = app->add_option("--seed", c.seed, "random seed (falls back to $DSPL_SEED, then 0)");
  app->add_option("--depth-limit", c.depth, "derivation depth bound")->check(CLI::PositiveNumber);
  app->add_option("--threads", c.threads, "evaluation threads")->check(CLI::PositiveNumber);
  app->add_flag("--json", c.json, "machine-readable output");
  if (with_queries) app->add_option("--query", c.queries, "only run queries with this predicate name or text");
}

std::uint64_t effective_seed(const Common& c) {
  if (c.seed_opt->count()) return c.seed;
  if (const char* env = std::getenv("DSPL_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::ValidationError, std::string("DSPL_SEED is not an unsigned integer: '") + env + "'");
  }
  return 0;
}

// Declared initial values, overridden by a checkpoint when given.
ParameterStore load_store(const Model& m, const std::string& path) {
  ParameterStore store = init_parameters(m.ast, 0);
  if (path.empty()) return store;
  const ParameterStore ckpt = ParameterStore::load(path);
  for (const auto& [name, t] : ckpt.tensors()) {
    if (store.contains(name)) {
      if (store.get(name).size() != t.size()) {
        fail(ErrorCode::ShapeMismatch, "checkpoint entry '" + name + "' has the wrong size");
      }
      store.get_mut(name).values = t.values;
    } else {
      store.add(name, t);
    }
  }
  return store;
}

std::vector<Term> select_queries(const Model& m, const std::vector<std::string>& wanted) {
  if (m.ast.queries.empty()) fail(ErrorCode::ValidationError, "program declares no query/1");
  if (wanted.empty()) return m.ast.queries;
  std::vector<Term> out;
  for (const auto& q : m.ast.queries) {
    for (const auto& w : wanted) {
      if (q.name == w || to_string(q) == w || predicate_key(q) == w) {
        out.push_back(q);
        break;
      }
    }
  }
  if (out.empty()) fail(ErrorCode::ValidationError, "no query matches --query");
  return out;
}

GroundConfig ground_config(const Model& m, const Common& c) {
  GroundConfig g;
  g.depth_limit = c.depth;
  g.data = &m.data;
  return g;
}

nlohmann::json error_json(const std::exception& e) {
  nlohmann::json j;
  if (const auto* d = dynamic_cast<const Error*>(&e)) {
    j["code"] = std::string(error_code_name(d->code()));
    j["message"] = d->detail();
    if (d->pos().line > 0) {
      j["line"] = d->pos().line;
      j["column"] = d->pos().column;
    }
  } else {
    j["code"] = "Error";
    j["message"] = e.what();
  }
  return {{"error", j}};
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << std::fixed << v;
  return s.str();
}

std::string circuit_dot(const CompiledQuery& q) {
  return to_dot(q.circuit, [&](std::size_t a) { return q.ground.literal_text(make_literal(a, true)); });
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  f << text;
}

// ---------------------------------------------------------------------------

struct QueryArgs {
  Common c;
  std::size_t samples = 10000;
  std::string mode = "hard";
  double beta = 50.0;
  std::string export_path;
  bool dump_formula = false;
};

int cmd_query(const QueryArgs& a, std::ostream& out) {
  const Model m = Model::load(a.c.program);
  const ParameterStore store = load_store(m, a.c.params);
  InferenceConfig cfg;
  cfg.n_samples = a.samples;
  cfg.seed = effective_seed(a.c);
  cfg.mode = mode_from_name(a.mode);
  cfg.beta = a.beta;
  cfg.threads = a.c.threads;
  nlohmann::json results = nlohmann::json::array();
  std::string dot;
  for (const auto& q : select_queries(m, a.c.queries)) {
    const CompiledQuery cq = compile_query(m, q, ground_config(m, a.c));
    nlohmann::json r = result_to_json(infer(m, cq, store, cfg));
    if (a.dump_formula) r["formula"] = formula_to_json(cq.ground);
    results.push_back(std::move(r));
    if (!a.export_path.empty()) dot += circuit_dot(cq);
  }
  if (!a.export_path.empty()) write_file(a.export_path, dot);
  if (a.c.json) {
    out << nlohmann::json{{"results", results}}.dump(2) << "\n";
    return 0;
  }
  out << "# dspl query " << a.c.program << " at " << timestamp() << "\n";
  out << std::left << std::setw(36) << "query" << std::setw(14) << "estimate" << std::setw(14) << "std_error"
      << std::setw(10) << "samples" << "mode\n";
  for (const auto& r : results) {
    out << std::left << std::setw(36) << r["query"].get<std::string>() << std::setw(14)
        << fixed(r["estimate"].get<double>()) << std::setw(14) << fixed(r["std_error"].get<double>())
        << std::setw(10) << r["n_samples"].get<std::size_t>() << r["mode"].get<std::string>()
        << (r["exact"].get<bool>() ? " (exact)" : "") << "\n";
    if (r.contains("warnings")) {
      for (const auto& w : r["warnings"]) out << "  warning: " << w.get<std::string>() << "\n";
    }
    if (r.contains("formula")) out << r["formula"].dump(2) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct LearnArgs {
  Common c;
  std::string data;
  std::size_t epochs = 1;
  double lr = 1e-3;
  std::string optimizer = "adamax";
  std::size_t batch = 10;
  std::string loss = "bce";
  std::size_t samples = 1000;
  std::string schedule = "constant:50";
  std::string mode = "st";
  std::vector<std::string> lr_mult;
  std::string checkpoint = "checkpoint.json";
  std::size_t max_steps = 0;
};

int cmd_learn(const LearnArgs& a, std::ostream& out) {
  const Model m = Model::load(a.c.program);
  ParameterStore store = load_store(m, a.c.params);
  const auto data = load_dataset(a.data);
  TrainConfig cfg;
  cfg.loss = loss_from_name(a.loss);
  cfg.optimizer.kind = optimizer_from_name(a.optimizer);
  cfg.optimizer.lr = a.lr;
  for (const auto& kv : a.lr_mult) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ValidationError, "--lr-mult expects name=factor");
    try {
      cfg.optimizer.lr_multipliers[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      fail(ErrorCode::ValidationError, "--lr-mult expects name=factor");
    }
  }
  cfg.batch = a.batch;
  cfg.epochs = a.epochs;
  cfg.max_steps = a.max_steps;
  cfg.n_samples = a.samples;
  cfg.seed = effective_seed(a.c);
  cfg.schedule = parse_schedule(a.schedule);
  cfg.mode = mode_from_name(a.mode);
  cfg.threads = a.c.threads;
  const TrainReport rep = train(m, data, cfg, store);
  store.save(a.checkpoint);
  nlohmann::json j = report_to_json(rep, cfg, m, store);
  j["checkpoint"] = a.checkpoint;
  if (a.c.json) {
    out << j.dump(2) << "\n";
    return 0;
  }
  out << "# dspl learn " << a.c.program << " at " << timestamp() << "\n";
  for (std::size_t e = 0; e < rep.epoch_losses.size(); ++e) {
    out << "epoch " << e + 1 << "  beta " << rep.betas[e] << "  mean loss " << fixed(rep.epoch_losses[e]) << "\n";
  }
  out << j.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct CheckArgs {
  Common c;
  std::size_t samples = 100000;
  double oracle_tol = 1e-5;
  std::size_t oracle_budget = 250000;
};

bool oracle_limit(const Error& e) {
  switch (e.code()) {
    case ErrorCode::TooLarge:
    case ErrorCode::NotFinite:
    case ErrorCode::NonConvergent:
    case ErrorCode::NotSupported:
      return true;
    default: return false;
  }
}

int cmd_check(const CheckArgs& a, std::ostream& out) {
  const Model m = Model::load(a.c.program);
  const ParameterStore store = load_store(m, a.c.params);
  InferenceConfig cfg;
  cfg.n_samples = a.samples;
  cfg.seed = effective_seed(a.c);
  cfg.threads = a.c.threads;
  oracle::Options opt;
  opt.store = &store;
  opt.data = &m.data;
  opt.depth_limit = a.c.depth;
  opt.tol = a.oracle_tol;
  opt.max_evals = a.oracle_budget;

  nlohmann::json rows = nlohmann::json::array();
  bool failed = false, unavailable = false;
  for (const auto& q : select_queries(m, a.c.queries)) {
    const CompiledQuery cq = compile_query(m, q, ground_config(m, a.c));
    const QueryResult r = infer(m, cq, store, cfg);
    nlohmann::json row{{"query", r.query}, {"engine", r.estimate}, {"std_error", r.std_error}, {"exact", r.exact}};
    try {
      const oracle::Result o = oracle::probability(m.ast, q, opt);
      const double gap = std::abs(r.estimate - o.value);
      const double tol = r.exact && o.exact ? 1e-9 : 4 * r.std_error + o.error;
      const bool ok = gap <= tol;
      row["oracle"] = o.value;
      row["oracle_error"] = o.error;
      row["gap"] = gap;
      row["tolerance"] = tol;
      row["status"] = ok ? "pass" : "fail";
      failed = failed || !ok;
    } catch (const Error& e) {
      if (!oracle_limit(e)) throw;
      row["status"] = "oracle unavailable";
      row["reason"] = e.detail();
      unavailable = true;
    }
    rows.push_back(std::move(row));
  }
  if (a.c.json) {
    out << nlohmann::json{{"checks", rows}}.dump(2) << "\n";
  } else {
    out << std::left << std::setw(36) << "query" << std::setw(14) << "engine" << std::setw(14) << "oracle"
        << std::setw(14) << "gap" << std::setw(14) << "tolerance" << "status\n";
    for (const auto& r : rows) {
      out << std::left << std::setw(36) << r["query"].get<std::string>() << std::setw(14)
          << fixed(r["engine"].get<double>(), 8);
      if (r.contains("oracle")) {
        out << std::setw(14) << fixed(r["oracle"].get<double>(), 8) << std::setw(14)
            << std::scientific << std::setprecision(2) << r["gap"].get<double>() << std::setw(14)
            << r["tolerance"].get<double>() << std::defaultfloat;
      } else {
        out << std::setw(42) << "-";
      }
      out << r["status"].get<std::string>() << "\n";
    }
  }
  if (failed) return 1;
  return unavailable ? 2 : 0;
}

// ---------------------------------------------------------------------------

struct SampleArgs {
  Common c;
  std::size_t n = 10;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  const Model m = Model::load(a.c.program);
  const ParameterStore store = load_store(m, a.c.params);
  const std::uint64_t seed = effective_seed(a.c);
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& q : select_queries(m, a.c.queries)) {
    const CompiledQuery cq = compile_query(m, q, ground_config(m, a.c));
    const auto dists = resolve_distributions(m, cq, store);
    nlohmann::json vars = nlohmann::json::object();
    for (std::size_t r = 0; r < dists.size(); ++r) {
      const auto& rv = cq.ground.rvs[r];
      const CounterRng rng(seed, hash_string(rv.id));
      std::vector<double> xs;
      if (is_discrete(rv.family)) {
        const auto support = enumerate_support(dists[r]);
        for (std::size_t i = 0; i < a.n; ++i) {
          const double u = rng.uniform(i);
          double acc = 0.0;
          double x = support.back().value;
          for (const auto& sp : support) {
            acc += sp.prob;
            if (u < acc) {
              x = sp.value;
              break;
            }
          }
          xs.push_back(x);
        }
      } else {
        for (std::size_t i = 0; i < a.n; ++i) xs.push_back(reparam(dists[r], base_draw(rv.family, rng, i)));
      }
      vars[rv.id] = xs;
    }
    samples.push_back({{"query", to_string(cq.ground.query)}, {"seed", seed}, {"variables", vars}});
  }
  if (a.c.json) {
    out << nlohmann::json{{"samples", samples}}.dump(2) << "\n";
    return 0;
  }
  for (const auto& s : samples) {
    out << s["query"].get<std::string>() << "\n";
    for (const auto& [id, xs] : s["variables"].items()) {
      out << "  " << id << ":";
      for (const auto& x : xs) out << " " << x.get<double>();
      out << "\n";
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ExportArgs {
  Common c;
  std::string output;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const Model m = Model::load(a.c.program);
  std::string dot;
  for (const auto& q : select_queries(m, a.c.queries)) dot += circuit_dot(compile_query(m, q, ground_config(m, a.c)));
  if (a.output.empty()) {
    out << dot;
  } else {
    write_file(a.output, dot);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"dspl: neural probabilistic logic programs with discrete and continuous random variables", "dspl"};
  app.require_subcommand(1);

  QueryArgs qa;
  auto* query = app.add_subcommand("query", "estimate the probability of each query");
  add_common(query, qa.c);
  query->add_option("--samples", qa.samples, "Monte-Carlo samples")->check(CLI::PositiveNumber);
  query->add_option("--mode", qa.mode, "indicator mode: hard, soft, st");
  query->add_option("--beta", qa.beta, "coolness of the relaxation")->check(CLI::PositiveNumber);
  query->add_option("--export-circuit", qa.export_path, "write the compiled circuits as DOT");
  query->add_flag("--dump-formula", qa.dump_formula, "include the ground proof formula");

  LearnArgs la;
  auto* learn = app.add_subcommand("learn", "fit parameters to a JSONL dataset");
  add_common(learn, la.c, false);
  learn->add_option("data", la.data, "dataset (JSONL)")->required();
  learn->add_option("--epochs", la.epochs, "passes over the data");
  learn->add_option("--lr", la.lr, "learning rate")->check(CLI::PositiveNumber);
  learn->add_option("--optimizer", la.optimizer, "sgd, adam, adamax");
  learn->add_option("--batch", la.batch, "batch size")->check(CLI::PositiveNumber);
  learn->add_option("--loss", la.loss, "bce or mse");
  learn->add_option("--samples", la.samples, "samples per query evaluation")->check(CLI::PositiveNumber);
  learn->add_option("--beta-schedule", la.schedule, "constant:B, linear:B:R or exponential:B:R");
  learn->add_option("--mode", la.mode, "indicator mode for gradients: soft or st");
  learn->add_option("--lr-mult", la.lr_mult, "per-parameter learning-rate factor, name=factor");
  learn->add_option("--checkpoint", la.checkpoint, "where to write the trained parameters");
  learn->add_option("--max-steps", la.max_steps, "stop after this many optimizer steps");

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "compare the engine with the reference oracles");
  add_common(check, ca.c);
  check->add_option("--samples", ca.samples, "Monte-Carlo samples")->check(CLI::PositiveNumber);
  check->add_option("--oracle-tol", ca.oracle_tol, "quadrature tolerance of the reference")->check(CLI::PositiveNumber);
  check->add_option("--oracle-budget", ca.oracle_budget, "continuous points the reference may visit (0: no limit)");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "draw the random variables of each query");
  add_common(sample, sa.c);
  sample->add_option("-n,--n", sa.n, "draws per variable")->check(CLI::PositiveNumber);

  ExportArgs ea;
  auto* exp = app.add_subcommand("export-circuit", "print the compiled circuit of each query as DOT");
  add_common(exp, ea.c);
  exp->add_option("-o,--output", ea.output, "output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  bool json = false;
  try {
    if (*query) {
      json = qa.c.json;
      return cmd_query(qa, out);
    }
    if (*learn) {
      json = la.c.json;
      return cmd_learn(la, out);
    }
    if (*check) {
      json = ca.c.json;
      return cmd_check(ca, out);
    }
    if (*sample) {
      json = sa.c.json;
      return cmd_sample(sa, out);
    }
    json = ea.c.json;
    return cmd_export(ea, out);
  } catch (const std::exception& e) {
    if (json) {
      out << error_json(e).dump(2) << "\n";
    } else {
      const auto* d = dynamic_cast<const Error*>(&e);
      err << "error";
      if (d) err << " [" << error_code_name(d->code()) << "]";
      if (d && d->pos().line > 0) err << " at " << d->pos().line << ":" << d->pos().column;
      err << ": " << (d ? d->detail() : std::string(e.what())) << "\n";
    }
    return 1;
  }
}

}  // namespace dspl
