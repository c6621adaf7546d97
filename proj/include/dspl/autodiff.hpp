#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dspl/program.hpp"

namespace dspl {

class Tape;

// Scalar handle on a Tape. A Var without a tape is a constant.
class Var {
 public:
  Var() = default;
  Var(double value) : value_(value) {}  // NOLINT(google-explicit-constructor)

  double value() const { return value_; }
  Tape* tape() const { return tape_; }
  std::uint32_t index() const { return index_; }
  bool is_constant() const { return tape_ == nullptr; }

 private:
  friend class Tape;
  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
  double value_ = 0.0;
};

// Append-only Wengert list. Each node keeps at most two parents with their
// local partials; adjoints accumulate additively in backward().
class Tape {
 public:
  Var variable(double value);
  Var unary(double value, const Var& a, double da);
  Var binary(double value, const Var& a, double da, const Var& b, double db);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  std::vector<double> backward(const Var& output, double seed = 1.0) const;
  std::vector<double> backward(std::span<const std::pair<Var, double>> seeds) const;

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  struct Node {
    std::uint32_t a, b;
    double da, db;
  };
  std::vector<Node> nodes_;
};

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

// Node with an explicit local derivative (straight-through estimators,
// numerically differentiated quantiles).
Var make_unary(double value, const Var& a, double da);
Var make_binary(double value, const Var& a, double da, const Var& b, double db);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var abs(const Var& a);
Var tanh(const Var& a);

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
inline double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }
inline double relu(double x) { return x > 0 ? x : 0.0; }
using std::abs;
using std::exp;
using std::log;
using std::sqrt;
using std::tanh;
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var relu(const Var& a);

// Applies a learnable-parameter constraint (identity, softplus, sigmoid).
template <class S>
S constrain_value(const S& raw, ParamConstraint c) {
  switch (c) {
    case ParamConstraint::Positive: return softplus(raw);
    case ParamConstraint::Unit: return sigmoid(raw);
    case ParamConstraint::None: break;
  }
  return raw;
}

// ---------------------------------------------------------------------------
// Layers

template <class S>
std::vector<S> softmax(std::span<const S> xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& x : xs) mx = std::max(mx, value_of(x));
  std::vector<S> e;
  e.reserve(xs.size());
  S total = 0.0;
  for (const auto& x : xs) {
    using std::exp;
    e.push_back(exp(x - mx));
    total = total + e.back();
  }
  for (auto& v : e) v = v / total;
  return e;
}

// y = W x + b, W row-major [out, in].
template <class S>
std::vector<S> dense(std::span<const S> weights, std::span<const S> bias, std::span<const S> x) {
  const std::size_t out = bias.size();
  const std::size_t in = x.size();
  std::vector<S> y(out);
  for (std::size_t o = 0; o < out; ++o) {
    S acc = bias[o];
    for (std::size_t i = 0; i < in; ++i) acc = acc + weights[o * in + i] * x[i];
    y[o] = acc;
  }
  return y;
}

// ---------------------------------------------------------------------------
// Parameters

struct Tensor {
  std::vector<std::size_t> shape;  // empty for scalars
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

struct MomentState {
  std::vector<double> m;
  std::vector<double> v;
};

using Gradients = std::map<std::string, std::vector<double>>;

class ParameterStore {
 public:
  void add(const std::string& name, Tensor t);
  bool contains(const std::string& name) const { return tensors_.count(name) > 0; }
  const Tensor& get(const std::string& name) const;
  Tensor& get_mut(const std::string& name);
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  // Bumped on every optimizer step; moments live alongside the values.
  std::uint64_t version() const { return version_; }
  MomentState& moments(const std::string& name);
  void bump_version() { ++version_; }

  nlohmann::json to_json() const;
  static ParameterStore from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static ParameterStore load(const std::string& path);

  friend bool operator==(const ParameterStore& a, const ParameterStore& b);

 private:
  std::map<std::string, Tensor> tensors_;
  std::map<std::string, MomentState> moments_;
  std::uint64_t version_ = 0;
};

// Leaves for store entries on one tape, created on first use.
class ParamBinding {
 public:
  ParamBinding(const ParameterStore& store, Tape& tape) : store_(store), tape_(tape) {}

  std::span<const Var> get(const std::string& name);
  Tape& tape() const { return tape_; }
  const ParameterStore& store() const { return store_; }
  // Gradients of every bound entry from tape adjoints.
  Gradients gradients(const std::vector<double>& adjoints) const;

 private:
  const ParameterStore& store_;
  Tape& tape_;
  std::map<std::string, std::vector<Var>> leaves_;
};

// Store entries for a network: "<name>.W<l>" [out, in] and "<name>.b<l>" [out].
std::string network_weight_name(const std::string& net, std::size_t layer);
std::string network_bias_name(const std::string& net, std::size_t layer);
// Xavier-uniform weights and zero biases, seeded.
void init_network_params(ParameterStore& store, const NetworkDecl& net, std::uint64_t seed);

// `weights(name)` returns the flat values of a store entry as a span of S.
template <class S, class Weights>
std::vector<S> network_forward(const NetworkDecl& net, Weights&& weights, std::span<const S> input) {
  if (input.size() != net.input_size()) {
    fail(ErrorCode::ShapeMismatch, "network '" + net.name + "' expects " + std::to_string(net.input_size()) +
                                       " inputs, got " + std::to_string(input.size()));
  }
  std::vector<S> x(input.begin(), input.end());
  const std::size_t layers = net.arch.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    std::span<const S> w = weights(network_weight_name(net.name, l));
    std::span<const S> b = weights(network_bias_name(net.name, l));
    if (w.size() != b.size() * x.size()) {
      fail(ErrorCode::ShapeMismatch, "layer " + std::to_string(l) + " of '" + net.name + "' has wrong shape");
    }
    x = dense<S>(w, b, x);
    if (l + 1 < layers) {
      for (auto& v : x) {
        switch (net.act) {
          case Activation::Relu: v = relu(v); break;
          case Activation::Tanh: v = tanh(v); break;
          case Activation::Sigmoid: v = sigmoid(v); break;
        }
      }
    }
  }
  switch (net.out) {
    case OutputActivation::Linear: break;
    case OutputActivation::Sigmoid:
      for (auto& v : x) v = sigmoid(v);
      break;
    case OutputActivation::Softmax: x = softmax<S>(x); break;
  }
  return x;
}

// Raw (unconstrained) values for every learnable parameter and network.
ParameterStore init_parameters(const ProgramAst& ast, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { Sgd, Adam, Adamax };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Sgd;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Keyed by parameter name or by network name (applies to "<net>.*").
  std::map<std::string, double> lr_multipliers;

  double multiplier(const std::string& param) const;
};

OptimizerKind optimizer_from_name(const std::string& name);
std::string optimizer_name(OptimizerKind k);

// One update. Gradients must be keyed by store names (UnknownParam otherwise).
void step(const OptimizerConfig& cfg, ParameterStore& store, const Gradients& grads);

}  // namespace dspl
