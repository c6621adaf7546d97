#include "dspl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>

#include "dspl/error.hpp"
#include "dspl/family.hpp"

namespace dspl::oracle {

namespace {

struct VarInfo {
  std::string key;
  Family family = Family::Bernoulli;
  std::vector<double> params;
  std::vector<double> values;  // categorical outcomes
  double shape = kDefaultGenNormalShape;
};

// Thrown when evaluation reaches a variable the current world leaves open.
struct NeedVar {
  VarInfo info;
};

using World = std::map<std::string, double>;
// Resolved parameters of each random variable, shared across worlds.
using ResolveCache = std::map<std::string, std::vector<VarInfo>>;

double softplus_ref(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double constrain_ref(double raw, ParamConstraint c) {
  switch (c) {
    case ParamConstraint::Positive: return softplus_ref(raw);
    case ParamConstraint::Unit: return sigmoid_ref(raw);
    case ParamConstraint::None: break;
  }
  return raw;
}

std::vector<std::pair<double, double>> discrete_support(const VarInfo& v) {
  std::vector<std::pair<double, double>> out;
  switch (v.family) {
    case Family::Bernoulli: {
      const double p = v.params.at(0);
      if (!(p >= 0 && p <= 1)) fail(ErrorCode::DomainError, "bernoulli probability outside [0, 1]");
      out = {{0.0, 1.0 - p}, {1.0, p}};
      break;
    }
    case Family::Categorical: {
      double total = 0.0;
      for (double p : v.params) {
        if (!(p >= 0)) fail(ErrorCode::DomainError, "negative categorical weight");
        total += p;
      }
      if (!(total > 0)) fail(ErrorCode::DomainError, "categorical weights sum to zero");
      for (std::size_t i = 0; i < v.params.size(); ++i) out.emplace_back(v.values.at(i), v.params[i] / total);
      break;
    }
    case Family::Poisson: {
      const double rate = v.params.at(0);
      if (!(rate > 0)) fail(ErrorCode::DomainError, "poisson rate must be positive");
      double p = std::exp(-rate);
      if (!(p > 0)) fail(ErrorCode::NotFinite, "poisson rate too large for the enumeration oracle");
      double cdf = 0.0;
      for (std::size_t k = 0;; ++k) {
        if (k > 0) p *= rate / static_cast<double>(k);
        out.emplace_back(static_cast<double>(k), p);
        cdf += p;
        if (cdf >= 1.0 - 1e-9) break;
        if (k > 100000) fail(ErrorCode::NotFinite, "poisson support too long");
      }
      for (auto& [x, q] : out) q /= cdf;
      break;
    }
    default: fail(ErrorCode::NotFinite, "'" + v.key + "' is continuous");
  }
  return out;
}

// Top-down evaluation of one world. Tables hold the answers of each call
// variant; rounds repeat until no table grows, negation waits for a nested
// fixpoint of its subgoal.
class Evaluator {
 public:
  Evaluator(const ProgramAst& ast, const Options& opt, const std::map<std::string, LearnableParam>& learnables,
            const World& world, ResolveCache& cache)
      : ast_(ast), opt_(opt), learnables_(learnables), world_(world), cache_(cache) {
    for (const auto& d : ast.dist_facts) dist_preds_.insert(predicate_key(d.head));
  }

  bool holds(const Term& query) { return !complete(query).empty(); }

 private:
  struct Table {
    std::vector<Term> answers;
    std::set<std::string> seen;
  };

  std::vector<Term> complete(const Term& goal) {
    const std::string key = to_string(canonical_variant(goal));
    if (std::find(neg_stack_.begin(), neg_stack_.end(), key) != neg_stack_.end()) {
      fail(ErrorCode::NonStratifiedNegation, "'" + to_string(goal) + "' depends negatively on itself");
    }
    neg_stack_.push_back(key);
    const bool outer_changed = changed_;
    auto outer_visited = std::move(visited_);
    std::vector<Term> answers;
    bool any = false;
    do {
      changed_ = false;
      visited_.clear();
      answers = call(goal, 0);
      any = any || changed_;
    } while (changed_);
    changed_ = outer_changed || any;
    visited_ = std::move(outer_visited);
    neg_stack_.pop_back();
    return answers;
  }

  std::vector<Term> call(const Term& goal, std::size_t depth) {
    if (depth > opt_.depth_limit) fail(ErrorCode::DepthExceeded, "derivation deeper than the limit");
    const std::string key = to_string(canonical_variant(goal));
    Table& table = tables_[key];
    if (!visited_.insert(key).second) return table.answers;
    for (std::size_t ci = 0; ci < ast_.clauses.size(); ++ci) {
      const Clause& c = ast_.clauses[ci];
      if (c.head.name != goal.name || c.head.arity() != goal.arity()) continue;
      const std::string suffix = "#o" + std::to_string(++rename_counter_);
      Clause r;
      r.head = rename_variables(c.head, suffix);
      for (const auto& l : c.body) {
        Literal x = l;
        x.atom = rename_variables(l.atom, suffix);
        x.lhs = rename_variables(l.lhs, suffix);
        x.rhs = rename_variables(l.rhs, suffix);
        r.body.push_back(std::move(x));
      }
      Bindings b;
      if (!unify(r.head, goal, b)) continue;
      std::vector<bool> done(r.body.size(), false);
      solve(r.body, done, b, depth, [&](const Bindings& sol) {
        if (c.probability) {
          if (!annotation_holds(ci, c, suffix, sol)) return;
        }
        Term ans = substitute(goal, sol);
        const std::string ak = to_string(ans);
        Table& t = tables_[key];
        if (t.seen.insert(ak).second) {
          t.answers.push_back(std::move(ans));
          changed_ = true;
        }
      });
    }
    return tables_[key].answers;
  }

  bool annotation_holds(std::size_t ci, const Clause& c, const std::string& suffix, const Bindings& sol) {
    std::vector<std::string> vars;
    collect_variables(c.head, vars);
    for (const auto& l : c.body) {
      collect_variables(l.atom, vars);
      collect_variables(l.lhs, vars);
      collect_variables(l.rhs, vars);
    }
    collect_variables(*c.probability, vars);
    std::string key = "clause" + std::to_string(ci) + "(";
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const Term v = substitute(Term::variable(vars[i] + suffix), sol);
      if (!is_ground(v)) fail(ErrorCode::UnboundComparison, "annotated clause instance is not ground");
      key += (i ? "," : "") + to_string(v);
    }
    key += ")";
    auto it = world_.find(key);
    if (it == world_.end()) {
      VarInfo info;
      info.key = key;
      info.family = Family::Bernoulli;
      info.params = {scalar(substitute(rename_variables(*c.probability, suffix), sol))};
      throw NeedVar{info};
    }
    return it->second == 1.0;
  }

  template <class K>
  void solve(const std::vector<Literal>& body, std::vector<bool>& done, const Bindings& b, std::size_t depth, K&& k) {
    std::optional<std::size_t> pick;
    bool all_done = true;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (done[i]) continue;
      all_done = false;
      const Literal& l = body[i];
      if (l.kind == Literal::Kind::Positive) {
        pick = i;
        break;
      }
      const bool ground = l.kind == Literal::Kind::Negated
                              ? is_ground(substitute(l.atom, b))
                              : is_ground(substitute(l.lhs, b)) && is_ground(substitute(l.rhs, b));
      if (ground) {
        pick = i;
        break;
      }
    }
    if (all_done) {
      k(b);
      return;
    }
    if (!pick) fail(ErrorCode::UnboundComparison, "no literal can be selected: comparison or negation not ground");
    const Literal& l = body[*pick];
    done[*pick] = true;
    switch (l.kind) {
      case Literal::Kind::Positive: {
        const Term atom = substitute(l.atom, b);
        if (atom.is_symbol() && atom.name == "true") {
          solve(body, done, b, depth, k);
        } else if (atom.is_symbol() && (atom.name == "fail" || atom.name == "false")) {
          // no solutions
        } else if (dist_preds_.count(predicate_key(atom))) {
          fail(ErrorCode::UnboundComparison, "random variable '" + to_string(atom) + "' used as a logic atom");
        } else {
          for (const Term& ans : call(atom, depth + 1)) {
            Bindings nb = b;
            if (unify(atom, ans, nb)) solve(body, done, nb, depth, k);
          }
        }
        break;
      }
      case Literal::Kind::Negated: {
        if (complete(substitute(l.atom, b)).empty()) solve(body, done, b, depth, k);
        break;
      }
      case Literal::Kind::Comparison: {
        const double x = scalar(substitute(l.lhs, b));
        const double y = scalar(substitute(l.rhs, b));
        if (std::isnan(x) || std::isnan(y)) fail(ErrorCode::NumericError, "NaN in comparison");
        bool ok = false;
        switch (l.op) {
          case CmpOp::Lt: ok = x < y; break;
          case CmpOp::Le: ok = x <= y; break;
          case CmpOp::Gt: ok = x > y; break;
          case CmpOp::Ge: ok = x >= y; break;
          case CmpOp::Eq: ok = x == y; break;
          case CmpOp::Ne: ok = x != y; break;
        }
        if (ok) solve(body, done, b, depth, k);
        break;
      }
    }
    done[*pick] = false;
  }

  // ---- numbers

  double scalar(const Term& t) {
    auto v = numeric(t);
    if (v.size() != 1) fail(ErrorCode::ShapeMismatch, "'" + to_string(t) + "' is not a scalar");
    return v[0];
  }

  bool is_network_call(const Term& t) const {
    return (t.kind == Term::Kind::NumericFunc || t.kind == Term::Kind::Compound) && ast_.find_network(t.name);
  }

  std::vector<double> numeric(const Term& t) {
    switch (t.kind) {
      case Term::Kind::Number: return {t.number};
      case Term::Kind::Variable: fail(ErrorCode::UnboundComparison, "unbound variable " + t.name);
      case Term::Kind::List: {
        std::vector<double> out;
        for (const auto& a : t.args) {
          auto v = numeric(a);
          out.insert(out.end(), v.begin(), v.end());
        }
        return out;
      }
      default: break;
    }
    if (dist_preds_.count(predicate_key(t))) return random_variable(t);
    if (t.is_symbol() && opt_.data) {
      auto it = opt_.data->find(t.name);
      if (it != opt_.data->end()) return it->second;
    }
    if (t.name == "t" && t.args.size() == 1) return learnable(t.args[0].name);
    if (is_network_call(t)) {
      std::vector<double> in;
      for (const auto& a : t.args) {
        auto v = numeric(a);
        in.insert(in.end(), v.begin(), v.end());
      }
      return network(*ast_.find_network(t.name), in);
    }
    std::vector<std::vector<double>> args;
    for (const auto& a : t.args) args.push_back(numeric(a));
    return builtin(t.name, args);
  }

  std::vector<double> learnable(const std::string& name) {
    if (!opt_.store || !opt_.store->contains(name)) fail(ErrorCode::UnknownParam, "no value for t(" + name + ")");
    auto it = learnables_.find(name);
    const ParamConstraint c = it == learnables_.end() ? ParamConstraint::None : it->second.constraint;
    std::vector<double> out;
    for (double r : opt_.store->get(name).values) out.push_back(constrain_ref(r, c));
    return out;
  }

  std::vector<double> network(const NetworkDecl& net, std::vector<double> x) {
    if (!opt_.store) fail(ErrorCode::UnknownParam, "network '" + net.name + "' needs a parameter store");
    if (x.size() != net.arch.front()) fail(ErrorCode::ShapeMismatch, "network input width");
    for (std::size_t l = 0; l + 1 < net.arch.size(); ++l) {
      const auto& w = opt_.store->get(net.name + ".W" + std::to_string(l)).values;
      const auto& bias = opt_.store->get(net.name + ".b" + std::to_string(l)).values;
      std::vector<double> y(bias.size());
      for (std::size_t o = 0; o < y.size(); ++o) {
        double acc = bias[o];
        for (std::size_t i = 0; i < x.size(); ++i) acc += w[o * x.size() + i] * x[i];
        y[o] = acc;
      }
      if (l + 2 < net.arch.size()) {
        for (auto& v : y) {
          if (net.act == Activation::Relu) v = std::max(0.0, v);
          if (net.act == Activation::Tanh) v = std::tanh(v);
          if (net.act == Activation::Sigmoid) v = sigmoid_ref(v);
        }
      }
      x = std::move(y);
    }
    if (net.out == OutputActivation::Sigmoid) {
      for (auto& v : x) v = sigmoid_ref(v);
    } else if (net.out == OutputActivation::Softmax) {
      const double mx = *std::max_element(x.begin(), x.end());
      double total = 0.0;
      for (auto& v : x) total += (v = std::exp(v - mx));
      for (auto& v : x) v /= total;
    }
    return x;
  }

  static std::vector<double> builtin(const std::string& name, const std::vector<std::vector<double>>& a) {
    auto at = [](const std::vector<double>& v, std::size_t i) { return v.size() == 1 ? v[0] : v.at(i); };
    if (name == "squared_distance" || name == "distance") {
      const std::size_t n = std::max(a[0].size(), a[1].size());
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (at(a[0], i) - at(a[1], i)) * (at(a[0], i) - at(a[1], i));
      return {name == "distance" ? std::sqrt(s) : s};
    }
    std::size_t n = 0;
    for (const auto& v : a) n = std::max(n, v.size());
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = at(a[0], i);
      const double y = a.size() > 1 ? at(a[1], i) : 0.0;
      if (name == "add") out.push_back(x + y);
      else if (name == "sub") out.push_back(x - y);
      else if (name == "mul") out.push_back(x * y);
      else if (name == "div") out.push_back(x / y);
      else if (name == "neg") out.push_back(-x);
      else if (name == "abs") out.push_back(std::fabs(x));
      else if (name == "exp") out.push_back(std::exp(x));
      else if (name == "log") out.push_back(x > 0 ? std::log(x) : std::nan(""));
      else fail(ErrorCode::UnknownFunction, "unknown numeric function '" + name + "'");
    }
    return out;
  }

  std::vector<double> random_variable(const Term& ref) {
    if (!is_ground(ref)) fail(ErrorCode::UnboundComparison, "random variable '" + to_string(ref) + "' is not ground");
    const std::string ref_key = to_string(ref);
    if (auto hit = cache_.find(ref_key); hit != cache_.end()) return lookup(hit->second);
    for (const auto& d : ast_.dist_facts) {
      Bindings b;
      const Term head = rename_variables(d.head, "#d");
      if (!unify(head, ref, b)) continue;
      const Family fam = *family_from_name(d.family);
      std::vector<Term> params;
      for (const auto& p : d.params) params.push_back(substitute(rename_variables(p, "#d"), b));
      const std::size_t reads = reads_;
      std::vector<VarInfo> comps = resolve(ref_key, fam, params);
      // parameters that read the world cannot be shared
      if (reads == reads_) cache_[ref_key] = comps;
      return lookup(comps);
    }
    fail(ErrorCode::UnknownFunction, "no distribution for '" + to_string(ref) + "'");
  }

  std::vector<double> lookup(const std::vector<VarInfo>& comps) {
    std::vector<double> out;
    for (const auto& c : comps) {
      auto it = world_.find(c.key);
      if (it == world_.end()) throw NeedVar{c};
      out.push_back(it->second);
      ++reads_;
    }
    return out;
  }

  std::vector<VarInfo> resolve(const std::string& key, Family fam, std::vector<Term> params) {
    if (fam == Family::Categorical) {
      VarInfo v{key, fam, numeric(params.at(0)), {}, kDefaultGenNormalShape};
      if (is_network_call(params[0]) && ast_.find_network(params[0].name)->out == OutputActivation::Linear) {
        for (auto& p : v.params) p = softplus_ref(p);
      }
      if (params.size() > 1) {
        for (const auto& x : params[1].args) v.values.push_back(x.number);
      } else {
        for (std::size_t i = 0; i < v.params.size(); ++i) v.values.push_back(static_cast<double>(i));
      }
      return {v};
    }
    double shape = kDefaultGenNormalShape;
    if (fam == Family::GeneralizedNormal && params.size() == 3) {
      shape = params.back().number;
      params.pop_back();
    }
    std::vector<std::vector<double>> slots;
    for (const auto& p : params) {
      if (is_network_call(p)) {
        const bool linear = ast_.find_network(p.name)->out == OutputActivation::Linear;
        for (double x : numeric(p)) {
          slots.push_back({linear ? constrain_ref(x, slot_constraint(fam, slots.size())) : x});
        }
      } else {
        slots.push_back(numeric(p));
      }
    }
    std::size_t n = 1;
    for (const auto& s : slots) n = std::max(n, s.size());
    std::vector<VarInfo> out;
    for (std::size_t j = 0; j < n; ++j) {
      VarInfo v{n == 1 ? key : key + "[" + std::to_string(j) + "]", fam, {}, {}, shape};
      for (const auto& s : slots) v.params.push_back(s.size() == 1 ? s[0] : s.at(j));
      out.push_back(std::move(v));
    }
    return out;
  }

  const ProgramAst& ast_;
  const Options& opt_;
  const std::map<std::string, LearnableParam>& learnables_;
  const World& world_;
  ResolveCache& cache_;
  std::size_t reads_ = 0;
  std::set<std::string> dist_preds_;
  std::map<std::string, Table> tables_;
  std::set<std::string> visited_;
  std::vector<std::string> neg_stack_;
  bool changed_ = false;
  std::size_t rename_counter_ = 0;
};

struct NeedContinuous {
  VarInfo info;
};

class Explorer {
 public:
  Explorer(const ProgramAst& ast, const Term& query, const Options& opt)
      : ast_(ast), query_(query), opt_(opt), learnables_(collect_learnable_params(ast)) {}

  // Probability of the query with the given continuous values fixed.
  double run(const World& continuous) {
    World w = continuous;
    return explore(w, 0);
  }

 private:
  double explore(World& w, std::size_t assigned) {
    try {
      Evaluator ev(ast_, opt_, learnables_, w, cache_);
      return ev.holds(query_) ? 1.0 : 0.0;
    } catch (const NeedVar& need) {
      if (!is_discrete(need.info.family)) throw NeedContinuous{need.info};
      if (assigned >= opt_.max_vars) {
        fail(ErrorCode::TooLarge, "more than " + std::to_string(opt_.max_vars) + " discrete variables");
      }
      double total = 0.0;
      for (const auto& [value, p] : discrete_support(need.info)) {
        if (p == 0.0) continue;
        w[need.info.key] = value;
        total += p * explore(w, assigned + 1);
      }
      w.erase(need.info.key);
      return total;
    }
  }

  const ProgramAst& ast_;
  const Term& query_;
  const Options& opt_;
  std::map<std::string, LearnableParam> learnables_;
  ResolveCache cache_;
};

// Adaptive Simpson with a floor on the local tolerance; panels that shrink
// below min_width are accepted and their discrepancy is added to the error.
class Simpson {
 public:
  Simpson(const std::function<double(double)>& f, double tol) : f_(f), tol_(tol), floor_(std::max(tol * 1e-4, 1e-18)) {}

  double integrate(double a, double b) {
    min_width_ = (b - a) * 1e-12;
    const int panels = 64;
    double total = 0.0;
    const double w = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
      const double lo = a + w * i;
      const double hi = i + 1 == panels ? b : lo + w;
      const double fa = eval(lo), fm = eval(0.5 * (lo + hi)), fb = eval(hi);
      total += rec(lo, hi, fa, fm, fb, (hi - lo) / 6 * (fa + 4 * fm + fb), tol_ / panels);
    }
    return total;
  }

  double error() const { return err_; }

 private:
  double eval(double x) {
    if (++evals_ > 20'000'000) fail(ErrorCode::NonConvergent, "quadrature exceeded its evaluation budget");
    const double v = f_(x);
    if (!std::isfinite(v)) fail(ErrorCode::NonConvergent, "integrand is not finite at " + format_number(x));
    return v;
  }

  double rec(double a, double b, double fa, double fm, double fb, double whole, double tol) {
    const double m = 0.5 * (a + b);
    const double flm = eval(0.5 * (a + m)), frm = eval(0.5 * (m + b));
    const double left = (m - a) / 6 * (fa + 4 * flm + fm);
    const double right = (b - m) / 6 * (fm + 4 * frm + fb);
    const double delta = left + right - whole;
    if (std::fabs(delta) <= 15 * tol) {
      err_ += std::fabs(delta) / 15;
      return left + right + delta / 15;
    }
    if (b - a < min_width_) {
      err_ += std::fabs(delta);
      return left + right;
    }
    // past the floor a jump keeps its panel instead of halving forever
    const double sub = std::max(tol / 2, floor_);
    return rec(a, m, fa, flm, fm, left, sub) + rec(m, b, fm, frm, fb, right, sub);
  }

  const std::function<double(double)>& f_;
  double tol_;
  double floor_;
  double err_ = 0.0;
  double min_width_ = 0.0;
  std::size_t evals_ = 0;
};

double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2 * std::numbers::pi));
}

}  // namespace

Axis density_axis(Family family, std::span<const double> p, double shape) {
  Axis ax;
  switch (family) {
    case Family::Normal: {
      const double mu = p[0], sigma = p[1];
      if (!(sigma > 0)) fail(ErrorCode::DomainError, "normal scale must be positive");
      ax.density = [=](double x) { return normal_pdf(x, mu, sigma); };
      ax.lo = mu - 10 * sigma;
      ax.hi = mu + 10 * sigma;
      ax.outside_mass = std::erfc(10 / std::sqrt(2.0));
      return ax;
    }
    case Family::Uniform: {
      const double a = p[0], b = p[1];
      if (!(b > a)) fail(ErrorCode::DomainError, "uniform needs lo < hi");
      ax.density = [=](double) { return 1.0 / (b - a); };
      ax.lo = a;
      ax.hi = b;
      return ax;
    }
    case Family::Beta: {
      const double a = p[0], b = p[1];
      if (!(a > 0 && b > 0)) fail(ErrorCode::DomainError, "beta shapes must be positive");
      const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
      ax.density = [=](double x) {
        if (x <= 0 || x >= 1) {
          if ((x <= 0 && a == 1) || (x >= 1 && b == 1)) return std::exp(log_norm);
          return (x <= 0 ? a : b) > 1 ? 0.0 : std::numeric_limits<double>::infinity();
        }
        return std::exp(log_norm + (a - 1) * std::log(x) + (b - 1) * std::log1p(-x));
      };
      ax.lo = 0.0;
      ax.hi = 1.0;
      return ax;
    }
    case Family::GeneralizedNormal: {
      const double mu = p[0], scale = p[1];
      if (!(scale > 0 && shape > 0)) fail(ErrorCode::DomainError, "generalized normal scale and shape must be positive");
      const double norm = shape / (2 * scale * std::tgamma(1 / shape));
      ax.density = [=](double x) { return norm * std::exp(-std::pow(std::fabs(x - mu) / scale, shape)); };
      ax.lo = mu - 10 * scale;
      ax.hi = mu + 10 * scale;
      // upper incomplete gamma tail, bounded by the density at the cut
      ax.outside_mass = 2 * scale * norm * std::exp(-std::pow(10.0, shape));
      return ax;
    }
    default: fail(ErrorCode::NotSupported, std::string(family_name(family)) + " has no density");
  }
}

Result quadrature_prob(std::span<const Axis> axes, const std::function<double(std::span<const double>)>& region,
                       double tol) {
  Result r;
  r.exact = false;
  if (axes.size() == 1) {
    const Axis& ax = axes[0];
    std::function<double(double)> f = [&](double x) {
      const double xs[1] = {x};
      return ax.density(x) * region(xs);
    };
    Simpson s(f, tol);
    r.value = s.integrate(ax.lo, ax.hi);
    r.error = s.error() + ax.outside_mass;
    return r;
  }
  if (axes.size() == 2) {
    double inner_err = 0.0;
    std::function<double(double)> outer = [&](double x0) {
      const double d0 = axes[0].density(x0);
      if (d0 == 0.0) return 0.0;
      std::function<double(double)> inner = [&](double x1) {
        const double xs[2] = {x0, x1};
        return axes[1].density(x1) * region(xs);
      };
      Simpson s(inner, tol / 10);
      const double v = s.integrate(axes[1].lo, axes[1].hi);
      inner_err = std::max(inner_err, s.error());
      return d0 * v;
    };
    Simpson s(outer, tol);
    r.value = s.integrate(axes[0].lo, axes[0].hi);
    r.error = s.error() + inner_err + axes[0].outside_mass + axes[1].outside_mass;
    return r;
  }
  fail(ErrorCode::TooLarge, "quadrature supports one or two dimensions");
}

double enumerate_worlds(const ProgramAst& ast, const Term& query, const Options& opt) {
  Explorer ex(ast, query, opt);
  try {
    return ex.run({});
  } catch (const NeedContinuous& c) {
    fail(ErrorCode::NotFinite, "'" + c.info.key + "' is continuous");
  }
}

Result probability(const ProgramAst& ast, const Term& query, const Options& opt) {
  Explorer ex(ast, query, opt);
  std::vector<VarInfo> cont;
  std::size_t evals = 0;
  for (;;) {
    try {
      if (cont.empty()) return {ex.run({}), 0.0, true};
      std::vector<Axis> axes;
      for (const auto& c : cont) axes.push_back(density_axis(c.family, c.params, c.shape));
      return quadrature_prob(
          axes,
          [&](std::span<const double> xs) {
            if (opt.max_evals && ++evals > opt.max_evals) {
              fail(ErrorCode::NonConvergent, "oracle exceeded " + std::to_string(opt.max_evals) + " evaluations");
            }
            World w;
            for (std::size_t i = 0; i < cont.size(); ++i) w[cont[i].key] = xs[i];
            return ex.run(w);
          },
          opt.tol);
    } catch (const NeedContinuous& c) {
      if (cont.size() == 2) fail(ErrorCode::TooLarge, "more than two continuous variables");
      cont.push_back(c.info);
    }
  }
}

double fd_gradient(const Model& model, const CompiledQuery& q, const ParameterStore& store, const std::string& name,
                   std::size_t index, double h, const InferenceConfig& cfg) {
  if (!store.contains(name)) fail(ErrorCode::UnknownParam, "no parameter named '" + name + "'");
  ParameterStore plus = store;
  ParameterStore minus = store;
  plus.get_mut(name).values.at(index) += h;
  minus.get_mut(name).values.at(index) -= h;
  return (infer(model, q, plus, cfg).estimate - infer(model, q, minus, cfg).estimate) / (2 * h);
}

}  // namespace dspl::oracle
