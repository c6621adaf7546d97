#include "dspl/grounder.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "dspl/numeric.hpp"

namespace dspl {

bool ProofFormula::is_true() const {
  return std::any_of(dnf.begin(), dnf.end(), [](const Conjunction& c) { return c.empty(); });
}

bool ProofFormula::evaluate(const std::vector<bool>& assignment) const {
  for (const auto& c : dnf) {
    bool ok = true;
    for (auto l : c) {
      if (assignment.at(literal_atom(l)) != literal_positive(l)) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

bool conjoin(const Conjunction& a, const Conjunction& b, Conjunction& out) {
  out.clear();
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const auto ai = literal_atom(a[i]);
    const auto bj = literal_atom(b[j]);
    if (ai < bj) {
      out.push_back(a[i++]);
    } else if (bj < ai) {
      out.push_back(b[j++]);
    } else {
      if (a[i] != b[j]) return false;
      out.push_back(a[i]);
      ++i;
      ++j;
    }
  }
  out.insert(out.end(), a.begin() + static_cast<std::ptrdiff_t>(i), a.end());
  out.insert(out.end(), b.begin() + static_cast<std::ptrdiff_t>(j), b.end());
  return true;
}

namespace {

// Both sorted by atom.
bool subset_of(const Conjunction& small, const Conjunction& big) {
  if (small.size() > big.size()) return false;
  return std::includes(big.begin(), big.end(), small.begin(), small.end(),
                       [](int x, int y) { return literal_atom(x) < literal_atom(y) || (literal_atom(x) == literal_atom(y) && x < y); });
}

}  // namespace

bool add_absorbing(std::vector<Conjunction>& dnf, Conjunction c) {
  for (const auto& d : dnf) {
    if (subset_of(d, c)) return false;
  }
  std::erase_if(dnf, [&](const Conjunction& d) { return subset_of(c, d); });
  dnf.push_back(std::move(c));
  return true;
}

std::vector<Conjunction> negate_dnf(const std::vector<Conjunction>& dnf) {
  std::vector<Conjunction> result{Conjunction{}};
  Conjunction merged;
  for (const auto& c : dnf) {
    if (c.empty()) return {};
    std::vector<Conjunction> next;
    for (const auto& r : result) {
      for (auto l : c) {
        if (conjoin(r, Conjunction{-l}, merged)) add_absorbing(next, merged);
      }
    }
    result = std::move(next);
    if (result.empty()) break;
  }
  return result;
}

std::string GroundResult::literal_text(SignedLiteral l) const {
  const auto& a = atoms.at(literal_atom(l));
  const CmpOp op = literal_positive(l) ? a.op : complement(a.op);
  return to_string(a.g) + " " + std::string(cmp_op_text(op)) + " 0";
}

namespace {

constexpr std::size_t kNoDependency = std::numeric_limits<std::size_t>::max();

struct Answer {
  Term instance;
  std::vector<Conjunction> dnf;
};

struct Table {
  std::vector<Answer> answers;
  std::unordered_map<std::string, std::size_t> index;
  bool complete = false;
  bool in_progress = false;
  std::size_t stack_pos = 0;
};

// Outcome of turning a ground comparison into a literal.
struct ComparisonOutcome {
  enum class Kind { True, False, Literal } kind = Kind::True;
  SignedLiteral literal = 0;
};

struct NumericInfo {
  bool has_rv = false;
  bool needs_context = false;
  std::set<std::size_t> owners;
};

void check_stratified(const LogicProgram& lp, const std::string& root) {
  // Tarjan over predicates reachable from the query.
  struct Edge {
    std::string to;
    bool negative;
  };
  std::map<std::string, std::vector<Edge>> graph;
  for (const auto& r : lp.rules) {
    auto& out = graph[predicate_key(r.head)];
    for (const auto& l : r.body) {
      if (l.kind == Literal::Kind::Comparison) continue;
      out.push_back({predicate_key(l.atom), l.kind == Literal::Kind::Negated});
    }
  }
  std::map<std::string, int> index, low, comp;
  std::vector<std::string> stack;
  std::set<std::string> on_stack;
  int counter = 0, comp_counter = 0;
  std::function<void(const std::string&)> visit = [&](const std::string& v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    for (const auto& e : graph[v]) {
      if (!index.count(e.to)) {
        visit(e.to);
        low[v] = std::min(low[v], low[e.to]);
      } else if (on_stack.count(e.to)) {
        low[v] = std::min(low[v], index[e.to]);
      }
    }
    if (low[v] == index[v]) {
      for (;;) {
        auto w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        comp[w] = comp_counter;
        if (w == v) break;
      }
      ++comp_counter;
    }
  };
  visit(root);
  for (const auto& [v, edges] : graph) {
    if (!comp.count(v)) continue;
    for (const auto& e : edges) {
      if (e.negative && comp.count(e.to) && comp[e.to] == comp[v]) {
        fail(ErrorCode::NonStratifiedNegation, "'" + v + "' depends negatively on itself through '" + e.to + "'");
      }
    }
  }
}

class Solver {
 public:
  Solver(const ProgramAst& ast, const LogicProgram& lp, const GroundConfig& cfg) : ast_(ast), lp_(lp), cfg_(cfg) {}

  GroundResult run(const Term& query) {
    if (!query.is_callable()) fail(ErrorCode::ValidationError, "query must be an atom");
    if (lp_.is_dist_predicate(query)) {
      fail(ErrorCode::UnboundComparison, "random variable '" + to_string(query) + "' queried as an atom");
    }
    check_stratified(lp_, predicate_key(query));
    std::size_t low = kNoDependency;
    auto answers = solve_call(query, low);
    GroundResult out;
    out.query = query;
    if (!answers.empty()) {
      out.query = answers.front().instance;
      out.formula.dnf = answers.front().dnf;
    }
    compact(out);
    return out;
  }

 private:
  // -------------------------------------------------------------------------
  // Tabled resolution

  std::vector<Answer> solve_call(const Term& call, std::size_t& low) {
    const std::string key = to_string(canonical_variant(call));
    Table& t = tables_[key];
    if (t.complete) return t.answers;
    if (t.in_progress) {
      low = std::min(low, t.stack_pos);
      return t.answers;
    }
    if (stack_depth_ >= cfg_.depth_limit) {
      fail(ErrorCode::DepthExceeded, "derivation depth exceeded " + std::to_string(cfg_.depth_limit) + " at '" +
                                         to_string(call) + "'");
    }
    t.in_progress = true;
    t.stack_pos = stack_depth_++;
    std::size_t passes = 0;
    std::size_t my_low = kNoDependency;
    for (;;) {
      const std::size_t before = answers_added_;
      my_low = kNoDependency;
      resolve_rules(call, key, my_low);
      if (my_low < t.stack_pos) break;  // part of an enclosing fixpoint
      if (my_low == t.stack_pos && answers_added_ != before) {
        if (++passes > cfg_.depth_limit) {
          fail(ErrorCode::DepthExceeded, "recursive derivation of '" + to_string(call) + "' does not converge");
        }
        continue;
      }
      t.complete = true;
      break;
    }
    --stack_depth_;
    Table& done = tables_[key];
    done.in_progress = false;
    if (!done.complete) low = std::min(low, my_low);
    return done.answers;
  }

  void resolve_rules(const Term& call, const std::string& key, std::size_t& low) {
    auto it = lp_.rules_by_pred.find(predicate_key(call));
    if (it == lp_.rules_by_pred.end()) return;
    for (std::size_t ri : it->second) {
      const Clause& rule = lp_.rules[ri];
      const std::string suffix = "_" + std::to_string(rename_counter_++);
      Term head = rename_variables(rule.head, suffix);
      Bindings b;
      if (!unify(call, head, b)) continue;
      std::vector<Literal> body;
      body.reserve(rule.body.size());
      for (const auto& l : rule.body) {
        Literal r = l;
        r.atom = rename_variables(l.atom, suffix);
        r.lhs = rename_variables(l.lhs, suffix);
        r.rhs = rename_variables(l.rhs, suffix);
        body.push_back(std::move(r));
      }
      solve_body(std::move(body), std::move(b), Conjunction{}, low, [&](const Bindings& fb, const Conjunction& c) {
        add_answer(key, substitute(call, fb), c);
      });
    }
  }

  void add_answer(const std::string& key, Term instance, const Conjunction& c) {
    Table& t = tables_[key];
    const std::string ak = to_string(canonical_variant(instance));
    auto it = t.index.find(ak);
    if (it == t.index.end()) {
      t.index.emplace(ak, t.answers.size());
      t.answers.push_back({std::move(instance), {c}});
      ++answers_added_;
      return;
    }
    if (add_absorbing(t.answers[it->second].dnf, c)) ++answers_added_;
  }

  using ProofCallback = std::function<void(const Bindings&, const Conjunction&)>;

  static bool literal_ground(const Literal& l, const Bindings& b) {
    if (l.kind == Literal::Kind::Comparison) return is_ground(substitute(l.lhs, b)) && is_ground(substitute(l.rhs, b));
    return is_ground(substitute(l.atom, b));
  }

  void solve_body(std::vector<Literal> goals, Bindings b, Conjunction conj, std::size_t& low,
                  const ProofCallback& on_proof) {
    if (goals.empty()) {
      on_proof(b, conj);
      return;
    }
    std::size_t pick = goals.size();
    for (std::size_t i = 0; i < goals.size(); ++i) {
      if (goals[i].kind == Literal::Kind::Positive || literal_ground(goals[i], b)) {
        pick = i;
        break;
      }
    }
    if (pick == goals.size()) {
      const Literal& l = goals.front();
      fail(ErrorCode::UnboundComparison,
           "'" + to_string(substitute_literal(l, b)) + "' is reached with unbound logic variables");
    }
    Literal lit = std::move(goals[pick]);
    goals.erase(goals.begin() + static_cast<std::ptrdiff_t>(pick));
    Conjunction merged;

    switch (lit.kind) {
      case Literal::Kind::Positive: {
        Term a = substitute(lit.atom, b);
        if (a.is_symbol() && a.name == "true") {
          solve_body(std::move(goals), std::move(b), std::move(conj), low, on_proof);
          return;
        }
        if (a.is_symbol() && (a.name == "fail" || a.name == "false")) return;
        if (lp_.is_dist_predicate(a)) {
          fail(ErrorCode::UnboundComparison,
               "random variable '" + to_string(a) + "' is used as a logic atom; compare it instead");
        }
        if (!a.is_callable()) fail(ErrorCode::ValidationError, "'" + to_string(a) + "' is not callable");
        auto answers = solve_call(a, low);
        for (const auto& ans : answers) {
          Bindings b2 = b;
          Term inst = rename_variables(ans.instance, "_a" + std::to_string(rename_counter_++));
          if (!unify(a, inst, b2)) continue;
          for (const auto& c : ans.dnf) {
            if (conjoin(conj, c, merged)) solve_body(goals, b2, merged, low, on_proof);
          }
        }
        return;
      }
      case Literal::Kind::Negated: {
        Term a = substitute(lit.atom, b);
        if (lp_.is_dist_predicate(a)) {
          fail(ErrorCode::UnboundComparison, "random variable '" + to_string(a) + "' is negated as a logic atom");
        }
        const auto& neg = negation_of(a);
        for (const auto& c : neg) {
          if (conjoin(conj, c, merged)) solve_body(goals, b, merged, low, on_proof);
        }
        return;
      }
      case Literal::Kind::Comparison: {
        auto outcome = comparison_literal(substitute(lit.lhs, b), lit.op, substitute(lit.rhs, b));
        if (outcome.kind == ComparisonOutcome::Kind::False) return;
        if (outcome.kind == ComparisonOutcome::Kind::True) {
          solve_body(std::move(goals), std::move(b), std::move(conj), low, on_proof);
          return;
        }
        if (conjoin(conj, Conjunction{outcome.literal}, merged)) {
          solve_body(std::move(goals), std::move(b), std::move(merged), low, on_proof);
        }
        return;
      }
    }
  }

  static Literal substitute_literal(const Literal& l, const Bindings& b) {
    Literal r = l;
    r.atom = substitute(l.atom, b);
    r.lhs = substitute(l.lhs, b);
    r.rhs = substitute(l.rhs, b);
    return r;
  }

  const std::vector<Conjunction>& negation_of(const Term& a) {
    const std::string key = to_string(a);
    auto it = negations_.find(key);
    if (it != negations_.end()) return it->second;
    std::size_t low = kNoDependency;
    auto answers = solve_call(a, low);
    if (low != kNoDependency) {
      fail(ErrorCode::NonStratifiedNegation, "'" + key + "' is negated while it is being derived");
    }
    std::vector<Conjunction> dnf;
    for (const auto& ans : answers) {
      for (const auto& c : ans.dnf) add_absorbing(dnf, c);
    }
    return negations_.emplace(key, negate_dnf(dnf)).first->second;
  }

  // -------------------------------------------------------------------------
  // Comparisons and random variables

  std::size_t slot_width(const Term& t) const {
    if (const NetworkDecl* net = ast_.find_network(t.name); net && t.kind == Term::Kind::NumericFunc) {
      return net->output_size();
    }
    return 1;
  }

  const std::vector<std::size_t>& random_variable(const Term& ref) {
    const std::string key = to_string(ref);
    if (auto it = rv_by_term_.find(key); it != rv_by_term_.end()) return it->second;
    auto it = lp_.dist_by_pred.find(predicate_key(ref));
    for (std::size_t di : it->second) {
      const DistFactDecl& d = lp_.dist_facts[di];
      const std::string suffix = "_d" + std::to_string(rename_counter_++);
      Bindings b;
      if (!unify(ref, rename_variables(d.head, suffix), b)) continue;
      std::vector<Term> params;
      for (const auto& p : d.params) {
        Term t = substitute(rename_variables(p, suffix), b);
        if (!is_ground(t)) {
          fail(ErrorCode::UnboundComparison, "parameters of '" + key + "' are not ground: " + to_string(t));
        }
        NumericInfo info;
        analyze(t, info, false);
        if (info.has_rv) {
          fail(ErrorCode::NotSupported, "parameters of '" + key + "' depend on another random variable");
        }
        params.push_back(std::move(t));
      }
      const Family fam = *family_from_name(d.family);
      double shape = kDefaultGenNormalShape;
      if (fam == Family::GeneralizedNormal && !params.empty() && params.back().is_number()) {
        std::size_t slots = 0;
        for (const auto& p : params) slots += slot_width(p);
        if (slots == 3) {
          shape = params.back().number;
          params.pop_back();
        }
      }
      std::size_t n = 1;
      if (fam != Family::Categorical) {
        for (const auto& p : params) {
          if (p.is_list()) n = std::max(n, p.args.size());
        }
      }
      std::vector<std::size_t> ids;
      for (std::size_t j = 0; j < n; ++j) {
        GroundRandomVariable rv;
        rv.id = n == 1 ? key : key + "[" + std::to_string(j) + "]";
        rv.head = ref;
        rv.family = fam;
        rv.params = params;
        rv.shape = shape;
        rv.component = j;
        rv.n_components = n;
        ids.push_back(rvs_.size());
        rvs_.push_back(std::move(rv));
      }
      return rv_by_term_.emplace(key, std::move(ids)).first->second;
    }
    fail(ErrorCode::UnboundComparison, "no distributional fact defines '" + key + "'");
  }

  bool is_rv_reference(const Term& t) const {
    return (t.is_symbol() || t.kind == Term::Kind::Compound || t.kind == Term::Kind::NumericFunc) &&
           lp_.is_dist_predicate(t);
  }

  void analyze(const Term& t, NumericInfo& info, bool register_rvs) {
    switch (t.kind) {
      case Term::Kind::Number: return;
      case Term::Kind::Variable:
        fail(ErrorCode::UnboundComparison, "unbound variable " + t.name + " in a comparison");
      case Term::Kind::List:
        for (const auto& a : t.args) analyze(a, info, register_rvs);
        return;
      default: break;
    }
    if (is_rv_reference(t)) {
      info.has_rv = true;
      if (register_rvs) {
        for (auto i : random_variable(t)) info.owners.insert(i);
      }
      return;
    }
    if (t.is_symbol()) {
      for (const auto& d : ast_.data) {
        if (d.name == t.name) {
          if (!cfg_.data || !cfg_.data->count(t.name)) info.needs_context = true;
          return;
        }
      }
      fail(ErrorCode::UnknownFunction, "'" + t.name + "' is not a random variable or numeric value");
    }
    if (t.name == "t" && t.args.size() == 1) {
      info.needs_context = true;
      return;
    }
    if (builtin_from_name(t.name, t.args.size())) {
      for (const auto& a : t.args) analyze(a, info, register_rvs);
      return;
    }
    if (ast_.find_network(t.name)) {
      info.needs_context = true;
      NumericInfo inner;
      for (const auto& a : t.args) analyze(a, inner, false);
      if (inner.has_rv) fail(ErrorCode::NotSupported, "random variables cannot feed a network: " + to_string(t));
      return;
    }
    fail(ErrorCode::UnknownFunction, "unknown numeric function '" + predicate_key(t) + "'");
  }

  static bool compare(double g, CmpOp op) {
    switch (op) {
      case CmpOp::Gt: return g > 0;
      case CmpOp::Ge: return g >= 0;
      case CmpOp::Eq: return g == 0;
      case CmpOp::Lt: return g < 0;
      case CmpOp::Le: return g <= 0;
      case CmpOp::Ne: return g != 0;
    }
    return false;
  }

  double evaluate_constant(const Term& g, const std::map<std::string, double>& rv_values) {
    NumericContext<double> ctx;
    ctx.data = cfg_.data;
    ctx.random_variable = [&](const Term& t) -> std::optional<std::vector<double>> {
      if (!is_rv_reference(t)) return std::nullopt;
      return std::vector<double>{rv_values.at(to_string(t))};
    };
    return evaluate_scalar(g, ctx);
  }

  ComparisonOutcome comparison_literal(const Term& lhs, CmpOp op, const Term& rhs) {
    Term g = rhs.is_number() && rhs.number == 0.0 ? lhs : Term::numeric_func("sub", {lhs, rhs});
    NumericInfo info;
    analyze(g, info, true);
    using K = ComparisonOutcome::Kind;
    if (!info.has_rv && !info.needs_context) {
      return {compare(evaluate_constant(g, {}), op) ? K::True : K::False, 0};
    }

    // Comparisons over a single Bernoulli variable become literals of
    // `x = 1`, so complementary tests share one atom.
    if (!info.needs_context && info.owners.size() == 1) {
      const auto& rv = rvs_[*info.owners.begin()];
      if (rv.family == Family::Bernoulli) {
        try {
          const bool at0 = compare(evaluate_constant(g, {{rv.id, 0.0}}), op);
          const bool at1 = compare(evaluate_constant(g, {{rv.id, 1.0}}), op);
          if (at0 && at1) return {K::True, 0};
          if (!at0 && !at1) return {K::False, 0};
          Term canon = Term::numeric_func("sub", {rv.head, Term::num(1.0)});
          const std::size_t a = intern_atom(std::move(canon), CmpOp::Eq, info);
          return {K::Literal, make_literal(a, at1)};
        } catch (const Error&) {
          // fall through to a plain atom
        }
      }
    }

    bool positive = true;
    CmpOp canon = op;
    switch (op) {
      case CmpOp::Lt: canon = CmpOp::Ge; positive = false; break;
      case CmpOp::Le: canon = CmpOp::Gt; positive = false; break;
      case CmpOp::Ne: canon = CmpOp::Eq; positive = false; break;
      default: break;
    }
    const std::size_t a = intern_atom(std::move(g), canon, info);
    return {K::Literal, make_literal(a, positive)};
  }

  std::size_t intern_atom(Term g, CmpOp op, const NumericInfo& info) {
    std::string key = to_string(g) + " " + std::string(cmp_op_text(op)) + " 0";
    if (auto it = atom_index_.find(key); it != atom_index_.end()) return it->second;
    GroundPcfAtom atom;
    atom.g = std::move(g);
    atom.op = op;
    atom.owners.assign(info.owners.begin(), info.owners.end());
    atom.needs_context = info.needs_context;
    atom.key = key;
    atom_index_.emplace(key, atoms_.size());
    atoms_.push_back(std::move(atom));
    return atoms_.size() - 1;
  }

  // Keeps only atoms in the formula and the random variables they own.
  void compact(GroundResult& out) {
    std::vector<long> atom_map(atoms_.size(), -1);
    std::vector<std::size_t> used;
    for (const auto& c : out.formula.dnf) {
      for (auto l : c) {
        const auto a = literal_atom(l);
        if (atom_map[a] < 0) {
          atom_map[a] = 0;
          used.push_back(a);
        }
      }
    }
    std::sort(used.begin(), used.end());
    std::vector<long> rv_map(rvs_.size(), -1);
    // Random variables that share a declaration stay together.
    for (std::size_t a : used) {
      for (auto r : atoms_[a].owners) {
        for (auto comp : rv_by_term_.at(to_string(rvs_[r].head))) {
          if (rv_map[comp] < 0) rv_map[comp] = 0;
        }
      }
    }
    for (std::size_t r = 0; r < rvs_.size(); ++r) {
      if (rv_map[r] < 0) continue;
      rv_map[r] = static_cast<long>(out.rvs.size());
      out.rvs.push_back(rvs_[r]);
    }
    for (const auto& [key, ids] : rv_by_term_) {
      if (rv_map[ids.front()] < 0) continue;
      auto& dst = out.rv_by_term[key];
      for (auto i : ids) dst.push_back(static_cast<std::size_t>(rv_map[i]));
    }
    for (std::size_t i = 0; i < used.size(); ++i) {
      atom_map[used[i]] = static_cast<long>(i);
      GroundPcfAtom a = atoms_[used[i]];
      for (auto& o : a.owners) o = static_cast<std::size_t>(rv_map[o]);
      std::sort(a.owners.begin(), a.owners.end());
      out.atoms.push_back(std::move(a));
    }
    for (auto& c : out.formula.dnf) {
      for (auto& l : c) l = make_literal(static_cast<std::size_t>(atom_map[literal_atom(l)]), literal_positive(l));
      std::sort(c.begin(), c.end(), [](int x, int y) { return literal_atom(x) < literal_atom(y); });
    }
  }

  const ProgramAst& ast_;
  const LogicProgram& lp_;
  const GroundConfig& cfg_;
  std::unordered_map<std::string, Table> tables_;
  std::unordered_map<std::string, std::vector<Conjunction>> negations_;
  std::size_t stack_depth_ = 0;
  std::size_t answers_added_ = 0;
  std::size_t rename_counter_ = 0;

  std::vector<GroundPcfAtom> atoms_;
  std::unordered_map<std::string, std::size_t> atom_index_;
  std::vector<GroundRandomVariable> rvs_;
  std::map<std::string, std::vector<std::size_t>> rv_by_term_;
};

}  // namespace

GroundResult ground_query(const ProgramAst& ast, const LogicProgram& lp, const Term& query,
                          const GroundConfig& cfg) {
  Solver s(ast, lp, cfg);
  return s.run(query);
}

GroundResult ground_query(const ProgramAst& ast, const Term& query, const GroundConfig& cfg) {
  const LogicProgram lp = desugar(ast);
  return ground_query(ast, lp, query, cfg);
}

nlohmann::json formula_to_json(const GroundResult& g) {
  nlohmann::json j;
  j["query"] = to_string(g.query);
  auto& rvs = j["random_variables"] = nlohmann::json::array();
  for (const auto& rv : g.rvs) {
    nlohmann::json r;
    r["id"] = rv.id;
    r["family"] = std::string(family_name(rv.family));
    auto& ps = r["params"] = nlohmann::json::array();
    for (const auto& p : rv.params) ps.push_back(to_string(p));
    rvs.push_back(std::move(r));
  }
  auto& atoms = j["atoms"] = nlohmann::json::array();
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    const auto& a = g.atoms[i];
    nlohmann::json o;
    o["id"] = i;
    o["expr"] = a.key;
    auto& owners = o["owners"] = nlohmann::json::array();
    for (auto r : a.owners) owners.push_back(g.rvs[r].id);
    atoms.push_back(std::move(o));
  }
  auto& dnf = j["dnf"] = nlohmann::json::array();
  for (const auto& c : g.formula.dnf) {
    auto conj = nlohmann::json::array();
    for (auto l : c) conj.push_back({{"atom", literal_atom(l)}, {"positive", literal_positive(l)}, {"text", g.literal_text(l)}});
    dnf.push_back(std::move(conj));
  }
  return j;
}

}  // namespace dspl
