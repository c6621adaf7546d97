#include "dspl/inference.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "dspl/distributions.hpp"
#include "dspl/rng.hpp"

namespace dspl {

// ---------------------------------------------------------------------------
// Model

Model Model::from_ast(ProgramAst ast, DataMap data) {
  Model m;
  m.ast = std::move(ast);
  m.lp = desugar(m.ast);
  m.learnables = collect_learnable_params(m.ast);
  m.data = std::move(data);
  return m;
}

Model Model::from_source(std::string_view source, const std::string& base_dir) {
  ProgramAst ast = parse(source);
  DataMap data = load_data_bindings(ast, base_dir);
  return from_ast(std::move(ast), std::move(data));
}

Model Model::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_source(ss.str(), std::filesystem::path(path).parent_path().string());
}

RelaxationSpec InferenceConfig::spec_for(const GroundPcfAtom& atom) const {
  double b = beta;
  if (auto it = atom_beta.find(atom.key); it != atom_beta.end()) b = it->second;
  return {atom.op, b, beta_prime > 0 ? beta_prime : b};
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

bool has_random_variable(const Term& t, const LogicProgram& lp) {
  if (t.is_callable() && lp.is_dist_predicate(t)) return true;
  for (const auto& a : t.args) {
    if (has_random_variable(a, lp)) return true;
  }
  return false;
}

class GCompiler {
 public:
  GCompiler(const LogicProgram& lp, CompiledQuery& q) : lp_(lp), q_(q) {}

  GExpr compile(const Term& t) {
    GExpr e;
    if (t.is_number()) {
      e.kind = GExpr::Kind::Const;
      e.constant = t.number;
      return e;
    }
    if (t.is_callable() && lp_.is_dist_predicate(t)) {
      e.kind = GExpr::Kind::Rv;
      e.rvs = q_.ground.rv_by_term.at(to_string(t));
      return e;
    }
    if (!has_random_variable(t, lp_)) {
      e.kind = GExpr::Kind::Pool;
      const std::string key = to_string(t);
      auto it = pool_index_.find(key);
      if (it == pool_index_.end()) {
        it = pool_index_.emplace(key, q_.pool_terms.size()).first;
        q_.pool_terms.push_back(t);
      }
      e.pool = it->second;
      return e;
    }
    if (t.is_list()) {
      e.kind = GExpr::Kind::List;
    } else if (auto b = builtin_from_name(t.name, t.args.size())) {
      e.kind = GExpr::Kind::Op;
      e.op = *b;
    } else {
      fail(ErrorCode::NotSupported, "random variables cannot appear inside '" + predicate_key(t) + "'");
    }
    for (const auto& a : t.args) e.args.push_back(compile(a));
    return e;
  }

 private:
  const LogicProgram& lp_;
  CompiledQuery& q_;
  std::map<std::string, std::size_t> pool_index_;
};

}  // namespace

CompiledQuery compile_query(const Model& model, const Term& query, const GroundConfig& cfg_in, std::size_t node_cap) {
  GroundConfig cfg = cfg_in;
  if (!cfg.data) cfg.data = &model.data;
  CompiledQuery q;
  q.ground = ground_query(model.ast, model.lp, query, cfg);
  const auto& atoms = q.ground.atoms;
  const auto& rvs = q.ground.rvs;

  std::vector<std::size_t> parent(rvs.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& a : atoms) {
    std::optional<std::size_t> first;
    for (auto r : a.owners) {
      if (!is_discrete(rvs[r].family)) continue;
      if (!first) {
        first = r;
      } else {
        parent[find(r)] = find(*first);
      }
    }
  }

  q.atom_block.assign(atoms.size(), -1);
  q.atom_local.assign(atoms.size(), -1);
  std::map<std::size_t, long> block_of_root;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    std::optional<std::size_t> disc;
    bool cont = false;
    for (auto r : atoms[i].owners) {
      if (is_discrete(rvs[r].family)) {
        disc = r;
      } else {
        cont = true;
      }
    }
    if (!disc) {
      (cont ? q.sampled_atoms : q.context_atoms).push_back(i);
      continue;
    }
    const std::size_t root = find(*disc);
    auto it = block_of_root.find(root);
    if (it == block_of_root.end()) {
      it = block_of_root.emplace(root, static_cast<long>(q.blocks.size())).first;
      q.blocks.emplace_back();
      for (std::size_t r = 0; r < rvs.size(); ++r) {
        if (is_discrete(rvs[r].family) && find(r) == root) q.blocks.back().rvs.push_back(r);
      }
    }
    auto& blk = q.blocks[static_cast<std::size_t>(it->second)];
    q.atom_block[i] = it->second;
    q.atom_local[i] = static_cast<long>(blk.atoms.size());
    blk.atoms.push_back(i);
    if (cont) blk.mixed = true;
  }
  for (std::size_t r = 0; r < rvs.size(); ++r) {
    if (!is_discrete(rvs[r].family)) q.continuous_rvs.push_back(r);
  }

  GCompiler gc(model.lp, q);
  for (const auto& a : atoms) q.g.push_back(gc.compile(a.g));

  const auto order = default_order(q.ground.formula, atoms.size(), q.atom_block);
  q.circuit = compile(q.ground.formula, order, node_cap);
  return q;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

// Where each resolved quantity lives in the flat value vector.
struct Layout {
  std::vector<std::size_t> pool_offset, pool_width;
  struct Cont {
    std::size_t rv;
    Family family;
    double shape;
    std::vector<std::size_t> params;
  };
  std::vector<Cont> cont;  // aligned with CompiledQuery::continuous_rvs
  struct Rows {
    std::vector<std::size_t> prob;
    std::vector<std::vector<double>> rv_values;    // [row][block rv]
    std::vector<std::vector<signed char>> truth;  // [row][block atom], -1 = per sample
  };
  std::vector<Rows> blocks;
};

template <class T>
struct GEnv {
  const std::vector<T>& rv;
  const std::vector<T>& vals;
  const Layout& layout;
};

template <class T>
void eval_vector(const GExpr& e, const GEnv<T>& env, std::vector<T>& out);

template <class T>
T eval_scalar(const GExpr& e, const GEnv<T>& env) {
  switch (e.kind) {
    case GExpr::Kind::Const: return T(e.constant);
    case GExpr::Kind::Rv:
      if (e.rvs.size() == 1) return env.rv[e.rvs[0]];
      break;
    case GExpr::Kind::Pool:
      if (env.layout.pool_width[e.pool] == 1) return env.vals[env.layout.pool_offset[e.pool]];
      break;
    case GExpr::Kind::List:
      if (e.args.size() == 1) return eval_scalar(e.args[0], env);
      break;
    case GExpr::Kind::Op:
      if (e.op == Builtin::SquaredDistance || e.op == Builtin::Distance) {
        std::vector<std::vector<T>> args(2);
        eval_vector(e.args[0], env, args[0]);
        eval_vector(e.args[1], env, args[1]);
        return apply_builtin<T>(e.op, args, false)[0];
      }
      if (e.args.size() == 1) {
        const T a = eval_scalar(e.args[0], env);
        return apply_scalar(e.op, a, a, false);
      }
      return apply_scalar(e.op, eval_scalar(e.args[0], env), eval_scalar(e.args[1], env), false);
  }
  std::vector<T> v;
  eval_vector(e, env, v);
  if (v.size() != 1) fail(ErrorCode::ShapeMismatch, "comparison operand has " + std::to_string(v.size()) + " components");
  return v[0];
}

template <class T>
void eval_vector(const GExpr& e, const GEnv<T>& env, std::vector<T>& out) {
  switch (e.kind) {
    case GExpr::Kind::Const: out.push_back(T(e.constant)); return;
    case GExpr::Kind::Rv:
      for (auto r : e.rvs) out.push_back(env.rv[r]);
      return;
    case GExpr::Kind::Pool: {
      const auto off = env.layout.pool_offset[e.pool];
      for (std::size_t i = 0; i < env.layout.pool_width[e.pool]; ++i) out.push_back(env.vals[off + i]);
      return;
    }
    case GExpr::Kind::List:
      for (const auto& a : e.args) eval_vector(a, env, out);
      return;
    case GExpr::Kind::Op: {
      std::vector<std::vector<T>> args(e.args.size());
      for (std::size_t i = 0; i < e.args.size(); ++i) eval_vector(e.args[i], env, args[i]);
      auto r = apply_builtin<T>(e.op, args, false);
      out.insert(out.end(), r.begin(), r.end());
      return;
    }
  }
}

bool is_network_call(const Term& t, const ProgramAst& ast) {
  return (t.kind == Term::Kind::NumericFunc || t.kind == Term::Kind::Compound) && ast.find_network(t.name);
}

template <class S>
std::vector<DistributionInstance<S>> resolve_group(const Model& m, const GroundRandomVariable& rv,
                                                   const NumericContext<S>& ctx) {
  const std::size_t n = rv.n_components;
  std::vector<DistributionInstance<S>> out(n);
  for (auto& d : out) {
    d.family = rv.family;
    d.shape = rv.shape;
  }
  if (rv.family == Family::Categorical) {
    auto probs = evaluate_numeric(rv.params.at(0), ctx);
    if (is_network_call(rv.params[0], m.ast) &&
        m.ast.find_network(rv.params[0].name)->out == OutputActivation::Linear) {
      for (auto& p : probs) p = softplus(p);
    }
    std::vector<double> values;
    if (rv.params.size() > 1) {
      for (const auto& v : rv.params[1].args) values.push_back(v.number);
    } else {
      for (std::size_t i = 0; i < probs.size(); ++i) values.push_back(static_cast<double>(i));
    }
    if (values.size() != probs.size()) {
      fail(ErrorCode::ShapeMismatch, "categorical '" + rv.id + "' has " + std::to_string(probs.size()) +
                                         " probabilities for " + std::to_string(values.size()) + " values");
    }
    out[0].params = std::move(probs);
    out[0].values = std::move(values);
    return out;
  }
  std::vector<std::vector<S>> slots;
  for (const auto& p : rv.params) {
    if (is_network_call(p, m.ast)) {
      const NetworkDecl* net = m.ast.find_network(p.name);
      for (auto& v : evaluate_numeric(p, ctx)) {
        const std::size_t slot = slots.size();
        slots.push_back({net->out == OutputActivation::Linear ? constrain_value<S>(v, slot_constraint(rv.family, slot))
                                                              : v});
      }
    } else {
      slots.push_back(evaluate_numeric(p, ctx));
    }
  }
  if (slots.size() != family_arity(rv.family)) {
    fail(ErrorCode::ShapeMismatch, "'" + rv.id + "' resolves to " + std::to_string(slots.size()) + " parameters");
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto& s : slots) {
      if (s.size() == 1) {
        out[j].params.push_back(s[0]);
      } else if (s.size() == n) {
        out[j].params.push_back(s[j]);
      } else {
        fail(ErrorCode::ShapeMismatch, "parameter of '" + to_string(rv.head) + "' has " + std::to_string(s.size()) +
                                           " components, expected 1 or " + std::to_string(n));
      }
    }
  }
  return out;
}

template <class S>
void resolve(const Model& m, const CompiledQuery& q, ParamResolver<S>& res, Layout& L, std::vector<S>& vals) {
  NumericContext<S> ctx;
  ctx.data = &m.data;
  ctx.params = &res;
  for (const auto& t : q.pool_terms) {
    auto v = evaluate_numeric(t, ctx);
    L.pool_offset.push_back(vals.size());
    L.pool_width.push_back(v.size());
    vals.insert(vals.end(), v.begin(), v.end());
  }

  const auto& rvs = q.ground.rvs;
  std::vector<std::optional<DistributionInstance<S>>> inst(rvs.size());
  for (const auto& [key, ids] : q.ground.rv_by_term) {
    auto group = resolve_group<S>(m, rvs[ids.front()], ctx);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      check_params(group[j]);
      inst[ids[j]] = std::move(group[j]);
    }
  }

  for (auto r : q.continuous_rvs) {
    Layout::Cont c{r, rvs[r].family, rvs[r].shape, {}};
    for (const auto& p : inst[r]->params) {
      c.params.push_back(vals.size());
      vals.push_back(p);
    }
    L.cont.push_back(std::move(c));
  }

  std::vector<double> dvals;
  for (const auto& v : vals) dvals.push_back(value_of(v));
  std::vector<double> rv_d(rvs.size(), 0.0);
  const GEnv<double> denv{rv_d, dvals, L};

  for (const auto& blk : q.blocks) {
    std::vector<std::vector<SupportPoint<S>>> supports;
    std::size_t rows = 1;
    for (auto r : blk.rvs) {
      supports.push_back(enumerate_support(*inst[r]));
      rows *= supports.back().size();
      if (rows > kMaxJointRows) {
        fail(blk.mixed ? ErrorCode::MixedAtomUnsupported : ErrorCode::TooLarge,
             "jointly enumerating " + std::to_string(blk.rvs.size()) + " discrete variables exceeds " +
                 std::to_string(kMaxJointRows) + " combinations");
      }
    }
    Layout::Rows out;
    std::vector<std::size_t> digit(blk.rvs.size(), 0);
    for (std::size_t row = 0; row < rows; ++row) {
      S p = 1.0;
      std::vector<double> values;
      for (std::size_t k = 0; k < blk.rvs.size(); ++k) {
        const auto& sp = supports[k][digit[k]];
        p = k == 0 ? sp.prob : p * sp.prob;
        values.push_back(sp.value);
        rv_d[blk.rvs[k]] = sp.value;
      }
      out.prob.push_back(vals.size());
      vals.push_back(p);
      std::vector<signed char> truth;
      for (auto a : blk.atoms) {
        const auto& atom = q.ground.atoms[a];
        const bool pure = std::all_of(atom.owners.begin(), atom.owners.end(),
                                      [&](std::size_t r) { return is_discrete(rvs[r].family); });
        if (!pure) {
          truth.push_back(-1);
          continue;
        }
        const double g = eval_scalar(q.g[a], denv);
        if (std::isnan(g)) fail(ErrorCode::NumericError, "NaN in '" + atom.key + "'");
        truth.push_back(hard_indicator(g, atom.op) ? 1 : 0);
      }
      out.rv_values.push_back(std::move(values));
      out.truth.push_back(std::move(truth));
      for (std::size_t k = blk.rvs.size(); k-- > 0;) {
        if (++digit[k] < supports[k].size()) break;
        digit[k] = 0;
      }
    }
    L.blocks.push_back(std::move(out));
  }
}

template <class T>
bool is_constant_value(const T& v) {
  if constexpr (std::is_same_v<T, Var>) {
    return v.is_constant();
  } else {
    (void)v;
    return true;
  }
}

// Bottom-up weighted circuit evaluation. Discrete blocks are marginalized
// at their first node on each path; nodes outside blocks are memoized.
template <class T>
class Walker {
 public:
  Walker(const Circuit& c, const std::vector<long>& block, const std::vector<long>& local,
         const std::vector<std::vector<T>>& row_prob, const std::vector<std::vector<std::vector<T>>>& row_val,
         const std::vector<T>& atom_val)
      : c_(c),
        block_(block),
        local_(local),
        row_prob_(row_prob),
        row_val_(row_val),
        atom_val_(atom_val),
        memo_(c.nodes.size()),
        stamp_(c.nodes.size(), 0),
        bmemo_(c.nodes.size()),
        bstamp_(c.nodes.size(), 0) {}

  T run() {
    ++gen_;
    return outer(c_.root);
  }

 private:
  template <class Hi, class Lo>
  T mix(const T& v, Hi&& hi, Lo&& lo) {
    if (is_constant_value(v)) {
      const double x = value_of(v);
      if (x == 1.0) return hi();
      if (x == 0.0) return lo();
    }
    const T h = hi();
    const T l = lo();
    return v * h + (T(1.0) - v) * l;
  }

  T outer(std::uint32_t n) {
    if (n == kBddFalse) return T(0.0);
    if (n == kBddTrue) return T(1.0);
    if (stamp_[n] == gen_) return memo_[n];
    const std::size_t a = c_.atom_at(n);
    const long b = block_[a];
    T r(0.0);
    if (b < 0) {
      r = mix(atom_val_[a], [&] { return outer(c_.nodes[n].hi); }, [&] { return outer(c_.nodes[n].lo); });
    } else {
      const auto& probs = row_prob_[static_cast<std::size_t>(b)];
      for (std::size_t row = 0; row < probs.size(); ++row) {
        if (is_constant_value(probs[row]) && value_of(probs[row]) == 0.0) continue;
        ++bgen_;
        r = r + probs[row] * inner(n, b, row);
      }
    }
    stamp_[n] = gen_;
    memo_[n] = r;
    return r;
  }

  T inner(std::uint32_t n, long b, std::size_t row) {
    if (Circuit::is_terminal(n) || block_[c_.atom_at(n)] != b) return outer(n);
    if (bstamp_[n] == bgen_) return bmemo_[n];
    const std::size_t a = c_.atom_at(n);
    const T& v = row_val_[static_cast<std::size_t>(b)][row][static_cast<std::size_t>(local_[a])];
    T r = mix(v, [&] { return inner(c_.nodes[n].hi, b, row); }, [&] { return inner(c_.nodes[n].lo, b, row); });
    bstamp_[n] = bgen_;
    bmemo_[n] = r;
    return r;
  }

  const Circuit& c_;
  const std::vector<long>& block_;
  const std::vector<long>& local_;
  const std::vector<std::vector<T>>& row_prob_;
  const std::vector<std::vector<std::vector<T>>>& row_val_;
  const std::vector<T>& atom_val_;
  std::vector<T> memo_;
  std::vector<std::uint64_t> stamp_;
  std::vector<T> bmemo_;
  std::vector<std::uint64_t> bstamp_;
  std::uint64_t gen_ = 0;
  std::uint64_t bgen_ = 0;
};

struct ChunkOut {
  double sum = 0.0;
  double sumsq = 0.0;
  std::vector<double> grad;  // d(sum) / d(value k)
};

template <class T>
T atom_indicator(const CompiledQuery& q, std::size_t a, const GEnv<T>& env, const RelaxationSpec& spec,
                 IndicatorMode mode) {
  const T g = eval_scalar(q.g[a], env);
  if (std::isnan(value_of(g))) fail(ErrorCode::NumericError, "NaN in '" + q.ground.atoms[a].key + "'");
  return indicator(g, spec, mode);
}

template <class T>
ChunkOut run_chunk(const CompiledQuery& q, const Layout& L, const std::vector<double>& values,
                   const InferenceConfig& cfg, std::size_t begin, std::size_t end) {
  constexpr bool taped = std::is_same_v<T, Var>;
  Tape tape;
  std::vector<T> vals;
  vals.reserve(values.size());
  for (double v : values) {
    if constexpr (taped) {
      vals.push_back(tape.variable(v));
    } else {
      vals.push_back(v);
    }
  }
  const auto& rvs = q.ground.rvs;
  const auto& atoms = q.ground.atoms;
  std::vector<T> rv_values(rvs.size(), T(0.0));
  const GEnv<T> env{rv_values, vals, L};

  std::vector<DistributionInstance<T>> dists;
  std::vector<CounterRng> rngs;
  for (const auto& c : L.cont) {
    DistributionInstance<T> d;
    d.family = c.family;
    d.shape = c.shape;
    for (auto idx : c.params) d.params.push_back(vals[idx]);
    dists.push_back(std::move(d));
    rngs.emplace_back(cfg.seed, hash_string(rvs[c.rv].id));
  }

  std::vector<RelaxationSpec> specs;
  for (const auto& a : atoms) specs.push_back(cfg.spec_for(a));
  std::vector<T> atom_val(atoms.size(), T(0.0));
  for (auto a : q.context_atoms) atom_val[a] = atom_indicator(q, a, env, specs[a], cfg.mode);

  std::vector<std::vector<T>> row_prob(q.blocks.size());
  std::vector<std::vector<std::vector<T>>> row_val(q.blocks.size());
  std::vector<std::size_t> mixed_blocks;
  for (std::size_t b = 0; b < q.blocks.size(); ++b) {
    const auto& rows = L.blocks[b];
    for (std::size_t r = 0; r < rows.prob.size(); ++r) {
      row_prob[b].push_back(vals[rows.prob[r]]);
      std::vector<T> tv;
      for (auto t : rows.truth[r]) tv.push_back(T(t > 0 ? 1.0 : 0.0));
      row_val[b].push_back(std::move(tv));
    }
    if (q.blocks[b].mixed) mixed_blocks.push_back(b);
  }

  Walker<T> walker(q.circuit, q.atom_block, q.atom_local, row_prob, row_val, atom_val);
  T sum(0.0);
  double sumsq = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    for (std::size_t k = 0; k < dists.size(); ++k) {
      rv_values[L.cont[k].rv] = reparam(dists[k], base_draw(dists[k].family, rngs[k], i));
    }
    for (auto a : q.sampled_atoms) atom_val[a] = atom_indicator(q, a, env, specs[a], cfg.mode);
    for (auto b : mixed_blocks) {
      const auto& blk = q.blocks[b];
      const auto& rows = L.blocks[b];
      for (std::size_t r = 0; r < rows.prob.size(); ++r) {
        for (std::size_t k = 0; k < blk.rvs.size(); ++k) rv_values[blk.rvs[k]] = T(rows.rv_values[r][k]);
        for (std::size_t j = 0; j < blk.atoms.size(); ++j) {
          if (rows.truth[r][j] >= 0) continue;
          row_val[b][r][j] = atom_indicator(q, blk.atoms[j], env, specs[blk.atoms[j]], cfg.mode);
        }
      }
    }
    const T v = walker.run();
    sum = sum + v;
    sumsq += value_of(v) * value_of(v);
  }

  ChunkOut out;
  out.sum = value_of(sum);
  out.sumsq = sumsq;
  if constexpr (taped) {
    const auto adj = tape.backward(sum);
    out.grad.resize(values.size(), 0.0);
    for (std::size_t k = 0; k < vals.size(); ++k) {
      if (vals[k].index() < adj.size()) out.grad[k] = adj[vals[k].index()];
    }
  }
  return out;
}

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Pairwise reduction in a fixed shape, independent of thread count.
ChunkOut tree_reduce(std::vector<ChunkOut>& outs, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return std::move(outs[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  ChunkOut a = tree_reduce(outs, lo, mid);
  ChunkOut b = tree_reduce(outs, mid, hi);
  a.sum += b.sum;
  a.sumsq += b.sumsq;
  for (std::size_t k = 0; k < a.grad.size(); ++k) a.grad[k] += b.grad[k];
  return a;
}

struct Totals {
  ChunkOut out;
  std::size_t n = 0;
};

Totals evaluate(const CompiledQuery& q, const Layout& L, const std::vector<double>& values,
                const InferenceConfig& cfg, bool taped) {
  if (cfg.n_samples == 0) fail(ErrorCode::ValidationError, "n_samples must be at least 1");
  if (!(cfg.beta > 0)) fail(ErrorCode::ValidationError, "coolness must be positive");
  const std::size_t n = q.exact() ? 1 : cfg.n_samples;
  const std::size_t chunk = std::max<std::size_t>(1, cfg.chunk_size);
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<ChunkOut> outs(n_chunks);
  parallel_for(n_chunks, cfg.threads, [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    outs[c] = taped ? run_chunk<Var>(q, L, values, cfg, begin, end) : run_chunk<double>(q, L, values, cfg, begin, end);
  });
  return {tree_reduce(outs, 0, n_chunks), n};
}

QueryResult make_result(const CompiledQuery& q, const InferenceConfig& cfg, const Totals& t) {
  QueryResult r;
  r.query = to_string(q.ground.query);
  const double n = static_cast<double>(t.n);
  r.estimate = t.out.sum / n;
  if (t.n > 1) {
    const double var = std::max(0.0, (t.out.sumsq - t.out.sum * t.out.sum / n) / (n - 1.0));
    r.std_error = std::sqrt(var / n);
  }
  r.n_samples = cfg.n_samples;
  r.mode = cfg.mode;
  r.seed = cfg.seed;
  r.exact = q.exact();
  const auto& atoms = q.ground.atoms;
  std::size_t exact_atoms = 0;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    bool cont = false;
    for (auto o : atoms[a].owners) cont = cont || !is_discrete(q.ground.rvs[o].family);
    if (q.atom_block[a] >= 0 && !cont) ++exact_atoms;
    if (cont && atoms[a].op == CmpOp::Eq) {
      r.warnings.push_back("'" + atoms[a].key +
                           "' tests a continuous variable for equality; hard mode gives it probability 0");
    }
  }
  r.discrete_exact_fraction = atoms.empty() ? 1.0 : static_cast<double>(exact_atoms) / static_cast<double>(atoms.size());
  return r;
}

}  // namespace

QueryResult infer(const Model& model, const CompiledQuery& q, const ParameterStore& store,
                  const InferenceConfig& cfg) {
  ParamResolver<double> res(model.ast, model.learnables, store);
  Layout L;
  std::vector<double> vals;
  resolve(model, q, res, L, vals);
  return make_result(q, cfg, evaluate(q, L, vals, cfg, false));
}

GradResult grad_query(const Model& model, const CompiledQuery& q, const ParameterStore& store,
                      const InferenceConfig& cfg) {
  Tape outer;
  ParamResolver<Var> res(model.ast, model.learnables, store, &outer);
  Layout L;
  std::vector<Var> vals;
  resolve(model, q, res, L, vals);
  std::vector<double> values;
  values.reserve(vals.size());
  for (const auto& v : vals) values.push_back(v.value());
  const Totals t = evaluate(q, L, values, cfg, true);

  GradResult out;
  out.result = make_result(q, cfg, t);
  std::vector<std::pair<Var, double>> seeds;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    if (!vals[k].is_constant() && t.out.grad[k] != 0.0) {
      seeds.emplace_back(vals[k], t.out.grad[k] / static_cast<double>(t.n));
    }
  }
  const auto adj = outer.backward(seeds);
  out.gradients = res.gradients(adj);
  for (const auto& [name, tensor] : store.tensors()) {
    auto& g = out.gradients[name];
    if (g.empty()) g.assign(tensor.size(), 0.0);
  }
  return out;
}

std::vector<DistributionInstance<double>> resolve_distributions(const Model& model, const CompiledQuery& q,
                                                                const ParameterStore& store) {
  ParamResolver<double> res(model.ast, model.learnables, store);
  NumericContext<double> ctx;
  ctx.data = &model.data;
  ctx.params = &res;
  std::vector<DistributionInstance<double>> out(q.ground.rvs.size());
  for (const auto& [key, ids] : q.ground.rv_by_term) {
    auto group = resolve_group<double>(model, q.ground.rvs[ids.front()], ctx);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      check_params(group[j]);
      out[ids[j]] = std::move(group[j]);
    }
  }
  return out;
}

nlohmann::json result_to_json(const QueryResult& r) {
  nlohmann::json j;
  j["query"] = r.query;
  j["estimate"] = r.estimate;
  j["std_error"] = r.std_error;
  j["n_samples"] = r.n_samples;
  j["mode"] = mode_name(r.mode);
  j["seed"] = r.seed;
  j["exact"] = r.exact;
  j["discrete_exact_fraction"] = r.discrete_exact_fraction;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

double evaluate_circuit_weighted(const Circuit& c, const std::vector<DiscreteTable>& tables,
                                 const std::map<std::size_t, double>& atom_values) {
  std::size_t n_atoms = 0;
  for (auto a : c.order) n_atoms = std::max(n_atoms, a + 1);
  for (const auto& t : tables) {
    for (auto a : t.atoms) n_atoms = std::max(n_atoms, a + 1);
  }
  for (const auto& [a, v] : atom_values) n_atoms = std::max(n_atoms, a + 1);

  std::vector<long> block(n_atoms, -1), local(n_atoms, -1);
  std::vector<long> level(n_atoms, -1);
  for (std::size_t i = 0; i < c.order.size(); ++i) level[c.order[i]] = static_cast<long>(i);

  std::vector<std::vector<double>> row_prob;
  std::vector<std::vector<std::vector<double>>> row_val;
  for (std::size_t b = 0; b < tables.size(); ++b) {
    const auto& t = tables[b];
    if (t.probs.size() != t.truth.size()) fail(ErrorCode::InconsistentEncoding, "table rows and probabilities differ");
    double total = 0.0;
    for (double p : t.probs) {
      if (p < 0) fail(ErrorCode::InconsistentEncoding, "negative row probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      fail(ErrorCode::InconsistentEncoding, "row probabilities sum to " + format_number(total));
    }
    std::vector<long> levels;
    for (std::size_t j = 0; j < t.atoms.size(); ++j) {
      const auto a = t.atoms[j];
      if (block[a] >= 0) fail(ErrorCode::InconsistentEncoding, "atom " + std::to_string(a) + " is in two tables");
      block[a] = static_cast<long>(b);
      local[a] = static_cast<long>(j);
      if (level[a] >= 0) levels.push_back(level[a]);
    }
    std::sort(levels.begin(), levels.end());
    for (std::size_t i = 1; i < levels.size(); ++i) {
      if (levels[i] != levels[i - 1] + 1) {
        fail(ErrorCode::InconsistentEncoding, "table atoms are not adjacent in the variable order");
      }
    }
    std::vector<std::vector<double>> rv;
    for (const auto& row : t.truth) {
      if (row.size() != t.atoms.size()) fail(ErrorCode::InconsistentEncoding, "row width differs from table width");
      std::vector<double> r;
      for (bool x : row) r.push_back(x ? 1.0 : 0.0);
      rv.push_back(std::move(r));
    }
    row_prob.push_back(t.probs);
    row_val.push_back(std::move(rv));
  }
  std::vector<double> atom_val(n_atoms, 0.0);
  for (auto a : c.order) {
    if (block[a] >= 0) continue;
    auto it = atom_values.find(a);
    if (it == atom_values.end()) {
      fail(ErrorCode::InconsistentEncoding, "atom " + std::to_string(a) + " has neither a table nor a value");
    }
    if (!(it->second >= 0.0 && it->second <= 1.0)) {
      fail(ErrorCode::InconsistentEncoding, "atom value outside [0, 1]");
    }
    atom_val[a] = it->second;
  }
  Walker<double> w(c, block, local, row_prob, row_val, atom_val);
  return w.run();
}

}  // namespace dspl
