#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dspl/autodiff.hpp"
#include "dspl/error.hpp"
#include "dspl/program.hpp"
#include "dspl/term.hpp"

namespace dspl {

enum class Builtin { Add, Sub, Mul, Div, Neg, Abs, SquaredDistance, Distance, Exp, Log };

std::optional<Builtin> builtin_from_name(const std::string& name, std::size_t arity);
std::string_view builtin_name(Builtin b);
std::size_t builtin_arity(Builtin b);

// Elementwise with broadcasting of width-1 operands. `strict` turns log of a
// non-positive value and division by zero into DomainError; otherwise they
// propagate as NaN / inf.
template <class S>
S apply_scalar(Builtin b, const S& x, const S& y, bool strict) {
  switch (b) {
    case Builtin::Add: return x + y;
    case Builtin::Sub: return x - y;
    case Builtin::Mul: return x * y;
    case Builtin::Div:
      if (strict && value_of(y) == 0.0) fail(ErrorCode::DomainError, "division by zero");
      return x / y;
    case Builtin::Neg: return -x;
    case Builtin::Abs: return abs(x);
    case Builtin::Exp: return exp(x);
    case Builtin::Log:
      if (value_of(x) <= 0.0) {
        if (strict) fail(ErrorCode::DomainError, "log of non-positive value " + format_number(value_of(x)));
        return S(std::numeric_limits<double>::quiet_NaN());
      }
      return log(x);
    default: break;
  }
  fail(ErrorCode::UnknownFunction, "not an elementwise builtin");
}

template <class S>
std::vector<S> apply_builtin(Builtin b, std::span<const std::vector<S>> args, bool strict) {
  if (b == Builtin::SquaredDistance || b == Builtin::Distance) {
    const auto& a = args[0];
    const auto& c = args[1];
    const std::size_t n = std::max(a.size(), c.size());
    if ((a.size() != n && a.size() != 1) || (c.size() != n && c.size() != 1)) {
      fail(ErrorCode::ShapeMismatch, std::string(builtin_name(b)) + " of vectors with different lengths");
    }
    S acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      S d = a[a.size() == 1 ? 0 : i] - c[c.size() == 1 ? 0 : i];
      acc = acc + d * d;
    }
    if (b == Builtin::Distance) acc = sqrt(acc);
    return {acc};
  }
  if (args.size() == 1) {
    std::vector<S> out;
    out.reserve(args[0].size());
    for (const auto& x : args[0]) out.push_back(apply_scalar(b, x, x, strict));
    return out;
  }
  const auto& a = args[0];
  const auto& c = args[1];
  const std::size_t n = std::max(a.size(), c.size());
  if ((a.size() != n && a.size() != 1) || (c.size() != n && c.size() != 1)) {
    fail(ErrorCode::ShapeMismatch, std::string(builtin_name(b)) + " of vectors with different lengths");
  }
  std::vector<S> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(apply_scalar(b, a[a.size() == 1 ? 0 : i], c[c.size() == 1 ? 0 : i], strict));
  }
  return out;
}

// Constrained learnable values and network outputs, read from a store. With
// S = Var every store entry touched becomes a leaf on `tape`.
template <class S>
class ParamResolver {
 public:
  ParamResolver(const ProgramAst& ast, const std::map<std::string, LearnableParam>& learnables,
                const ParameterStore& store, Tape* tape = nullptr)
      : ast_(ast), learnables_(learnables), store_(store) {
    if constexpr (std::is_same_v<S, Var>) {
      if (!tape) fail(ErrorCode::NotSupported, "taped parameter resolution needs a tape");
      binding_.emplace(store, *tape);
    }
  }

  const ProgramAst& ast() const { return ast_; }
  const ParameterStore& store() const { return store_; }

  std::span<const S> raw(const std::string& name) {
    if (!store_.contains(name)) fail(ErrorCode::UnknownParam, "no parameter named '" + name + "'");
    if constexpr (std::is_same_v<S, Var>) {
      return binding_->get(name);
    } else {
      return store_.get(name).values;
    }
  }

  const std::vector<S>& learnable(const std::string& name) {
    auto it = constrained_.find(name);
    if (it != constrained_.end()) return it->second;
    auto lp = learnables_.find(name);
    const ParamConstraint c = lp == learnables_.end() ? ParamConstraint::None : lp->second.constraint;
    std::vector<S> out;
    for (const auto& r : raw(name)) out.push_back(constrain_value<S>(r, c));
    return constrained_.emplace(name, std::move(out)).first->second;
  }

  const std::vector<S>& network(const std::string& key, const NetworkDecl& net, std::span<const S> input) {
    auto it = outputs_.find(key);
    if (it != outputs_.end()) return it->second;
    auto out = network_forward<S>(net, [&](const std::string& n) { return raw(n); }, input);
    return outputs_.emplace(key, std::move(out)).first->second;
  }

  // Gradients of every store entry touched, from adjoints of the tape.
  Gradients gradients(const std::vector<double>& adjoints) const {
    if constexpr (std::is_same_v<S, Var>) {
      return binding_->gradients(adjoints);
    } else {
      (void)adjoints;
      return {};
    }
  }

 private:
  const ProgramAst& ast_;
  const std::map<std::string, LearnableParam>& learnables_;
  const ParameterStore& store_;
  std::optional<ParamBinding> binding_;
  std::map<std::string, std::vector<S>> constrained_;
  std::map<std::string, std::vector<S>> outputs_;
};

template <class S>
struct NumericContext {
  const DataMap* data = nullptr;
  ParamResolver<S>* params = nullptr;
  // Values of a random-variable reference, or nullopt if `t` is not one.
  std::function<std::optional<std::vector<S>>(const Term&)> random_variable;
};

// Evaluates a ground numeric term to a vector (width 1 for scalars).
// Errors: UnknownFunction, DomainError, UnboundComparison for variables,
// ShapeMismatch.
template <class S>
std::vector<S> evaluate_numeric(const Term& t, const NumericContext<S>& ctx) {
  switch (t.kind) {
    case Term::Kind::Number: return {S(t.number)};
    case Term::Kind::Variable:
      fail(ErrorCode::UnboundComparison, "unbound variable " + t.name + " in numeric term");
    case Term::Kind::List: {
      std::vector<S> out;
      for (const auto& a : t.args) {
        auto v = evaluate_numeric(a, ctx);
        out.insert(out.end(), v.begin(), v.end());
      }
      return out;
    }
    default: break;
  }
  if (ctx.random_variable) {
    if (auto v = ctx.random_variable(t)) return *v;
  }
  if (t.is_symbol() && ctx.data) {
    auto it = ctx.data->find(t.name);
    if (it != ctx.data->end()) return std::vector<S>(it->second.begin(), it->second.end());
  }
  if (t.name == "t" && t.args.size() == 1 && ctx.params) {
    return ctx.params->learnable(t.args[0].name);
  }
  if (auto b = builtin_from_name(t.name, t.args.size())) {
    std::vector<std::vector<S>> args;
    args.reserve(t.args.size());
    for (const auto& a : t.args) args.push_back(evaluate_numeric(a, ctx));
    return apply_builtin<S>(*b, args, true);
  }
  if (ctx.params) {
    if (const NetworkDecl* net = ctx.params->ast().find_network(t.name)) {
      std::vector<S> input;
      for (const auto& a : t.args) {
        auto v = evaluate_numeric(a, ctx);
        input.insert(input.end(), v.begin(), v.end());
      }
      return ctx.params->network(to_string(t), *net, input);
    }
  }
  if (t.is_symbol() && ctx.data == nullptr) {
    fail(ErrorCode::UnknownFunction, "'" + t.name + "' has no numeric value (no #data loaded)");
  }
  fail(ErrorCode::UnknownFunction, "unknown numeric function '" + predicate_key(t) + "'");
}

template <class S>
S evaluate_scalar(const Term& t, const NumericContext<S>& ctx) {
  auto v = evaluate_numeric(t, ctx);
  if (v.size() != 1) {
    fail(ErrorCode::ShapeMismatch, "'" + to_string(t) + "' has " + std::to_string(v.size()) + " components");
  }
  return v[0];
}

}  // namespace dspl
