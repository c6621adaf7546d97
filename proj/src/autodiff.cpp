#include "dspl/autodiff.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

namespace dspl {

Var Tape::variable(double value) {
  Var v(value);
  v.tape_ = this;
  v.index_ = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({kNone, kNone, 0.0, 0.0});
  return v;
}

Var Tape::unary(double value, const Var& a, double da) {
  Var v(value);
  v.tape_ = this;
  v.index_ = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({a.is_constant() ? kNone : a.index(), kNone, da, 0.0});
  return v;
}

Var Tape::binary(double value, const Var& a, double da, const Var& b, double db) {
  Var v(value);
  v.tape_ = this;
  v.index_ = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({a.is_constant() ? kNone : a.index(), b.is_constant() ? kNone : b.index(), da, db});
  return v;
}

std::vector<double> Tape::backward(const Var& output, double seed) const {
  std::pair<Var, double> s{output, seed};
  return backward(std::span<const std::pair<Var, double>>(&s, 1));
}

std::vector<double> Tape::backward(std::span<const std::pair<Var, double>> seeds) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  std::size_t top = 0;
  for (const auto& [v, s] : seeds) {
    if (v.is_constant()) continue;
    adj[v.index()] += s;
    top = std::max<std::size_t>(top, v.index() + 1);
  }
  for (std::size_t i = top; i-- > 0;) {
    const double g = adj[i];
    if (g == 0.0) continue;
    const Node& n = nodes_[i];
    if (n.a != kNone) adj[n.a] += g * n.da;
    if (n.b != kNone) adj[n.b] += g * n.db;
  }
  return adj;
}

Var make_unary(double value, const Var& a, double da) {
  if (a.is_constant()) return Var(value);
  return a.tape()->unary(value, a, da);
}

Var make_binary(double value, const Var& a, double da, const Var& b, double db) {
  if (a.is_constant() && b.is_constant()) return Var(value);
  if (a.is_constant()) return b.tape()->unary(value, b, db);
  if (b.is_constant()) return a.tape()->unary(value, a, da);
  return a.tape()->binary(value, a, da, b, db);
}

Var operator+(const Var& a, const Var& b) { return make_binary(a.value() + b.value(), a, 1.0, b, 1.0); }
Var operator-(const Var& a, const Var& b) { return make_binary(a.value() - b.value(), a, 1.0, b, -1.0); }
Var operator*(const Var& a, const Var& b) {
  return make_binary(a.value() * b.value(), a, b.value(), b, a.value());
}
Var operator/(const Var& a, const Var& b) {
  const double q = a.value() / b.value();
  return make_binary(q, a, 1.0 / b.value(), b, -q / b.value());
}
Var operator-(const Var& a) { return make_unary(-a.value(), a, -1.0); }

Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return make_unary(e, a, e);
}
Var log(const Var& a) { return make_unary(std::log(a.value()), a, 1.0 / a.value()); }
Var sqrt(const Var& a) {
  const double s = std::sqrt(a.value());
  return make_unary(s, a, s > 0 ? 0.5 / s : 0.0);
}
Var abs(const Var& a) {
  const double x = a.value();
  return make_unary(std::abs(x), a, x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0));
}
Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return make_unary(t, a, 1.0 - t * t);
}
Var sigmoid(const Var& a) {
  const double s = sigmoid(a.value());
  return make_unary(s, a, s * (1.0 - s));
}
Var softplus(const Var& a) { return make_unary(softplus(a.value()), a, sigmoid(a.value())); }
Var relu(const Var& a) { return make_unary(relu(a.value()), a, a.value() > 0 ? 1.0 : 0.0); }

// ---------------------------------------------------------------------------

void ParameterStore::add(const std::string& name, Tensor t) {
  std::size_t expect = 1;
  for (auto d : t.shape) expect *= d;
  if (expect != t.values.size()) fail(ErrorCode::ShapeMismatch, "tensor '" + name + "' shape/value mismatch");
  if (!tensors_.emplace(name, std::move(t)).second) {
    fail(ErrorCode::ValidationError, "duplicate parameter '" + name + "'");
  }
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) fail(ErrorCode::UnknownParam, "unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParameterStore::get_mut(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) fail(ErrorCode::UnknownParam, "unknown parameter '" + name + "'");
  return it->second;
}

MomentState& ParameterStore::moments(const std::string& name) {
  auto& m = moments_[name];
  const std::size_t n = get(name).size();
  if (m.m.size() != n) {
    m.m.assign(n, 0.0);
    m.v.assign(n, 0.0);
  }
  return m;
}

nlohmann::json ParameterStore::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, t] : tensors_) {
    j[name] = {{"shape", t.shape}, {"values", t.values}};
  }
  return j;
}

ParameterStore ParameterStore::from_json(const nlohmann::json& j) {
  ParameterStore s;
  if (!j.is_object()) fail(ErrorCode::IoError, "checkpoint must be a JSON object");
  try {
    for (const auto& [name, entry] : j.items()) {
      Tensor t;
      t.shape = entry.at("shape").get<std::vector<std::size_t>>();
      t.values = entry.at("values").get<std::vector<double>>();
      s.add(name, std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoError, std::string("malformed checkpoint: ") + e.what());
  }
  return s;
}

void ParameterStore::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write checkpoint '" + path + "'");
  out << to_json().dump(2) << "\n";
}

ParameterStore ParameterStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoError, "checkpoint '" + path + "': " + e.what());
  }
  return from_json(j);
}

bool operator==(const ParameterStore& a, const ParameterStore& b) {
  if (a.tensors_.size() != b.tensors_.size()) return false;
  for (const auto& [name, t] : a.tensors_) {
    auto it = b.tensors_.find(name);
    if (it == b.tensors_.end() || it->second.shape != t.shape || it->second.values != t.values) return false;
  }
  return true;
}

std::span<const Var> ParamBinding::get(const std::string& name) {
  auto it = leaves_.find(name);
  if (it == leaves_.end()) {
    const Tensor& t = store_.get(name);
    std::vector<Var> vs;
    vs.reserve(t.size());
    for (double v : t.values) vs.push_back(tape_.variable(v));
    it = leaves_.emplace(name, std::move(vs)).first;
  }
  return it->second;
}

Gradients ParamBinding::gradients(const std::vector<double>& adjoints) const {
  Gradients g;
  for (const auto& [name, vars] : leaves_) {
    auto& out = g[name];
    out.reserve(vars.size());
    for (const auto& v : vars) out.push_back(v.index() < adjoints.size() ? adjoints[v.index()] : 0.0);
  }
  return g;
}

std::string network_weight_name(const std::string& net, std::size_t layer) {
  return net + ".W" + std::to_string(layer);
}

std::string network_bias_name(const std::string& net, std::size_t layer) {
  return net + ".b" + std::to_string(layer);
}

void init_network_params(ParameterStore& store, const NetworkDecl& net, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(std::hash<std::string>{}(net.name))};
  std::mt19937_64 rng(seq);
  for (std::size_t l = 0; l + 1 < net.arch.size(); ++l) {
    const std::size_t in = net.arch[l];
    const std::size_t out = net.arch[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-a, a);
    Tensor w{{out, in}, std::vector<double>(in * out)};
    for (auto& v : w.values) v = u(rng);
    store.add(network_weight_name(net.name, l), std::move(w));
    store.add(network_bias_name(net.name, l), Tensor{{out}, std::vector<double>(out, 0.0)});
  }
}

ParameterStore init_parameters(const ProgramAst& ast, std::uint64_t seed) {
  ParameterStore store;
  for (const auto& [name, p] : collect_learnable_params(ast)) {
    Tensor t;
    t.shape = p.shape;
    for (double v : p.init) t.values.push_back(unconstrain(v, p.constraint));
    store.add(name, std::move(t));
  }
  for (const auto& net : ast.networks) init_network_params(store, net, seed);
  return store;
}

// ---------------------------------------------------------------------------

double OptimizerConfig::multiplier(const std::string& param) const {
  if (auto it = lr_multipliers.find(param); it != lr_multipliers.end()) return it->second;
  auto dot = param.find('.');
  if (dot != std::string::npos) {
    if (auto it = lr_multipliers.find(param.substr(0, dot)); it != lr_multipliers.end()) return it->second;
  }
  return 1.0;
}

OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "adamax") return OptimizerKind::Adamax;
  fail(ErrorCode::ValidationError, "unknown optimizer '" + name + "'");
}

std::string optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Adamax: return "adamax";
  }
  return "sgd";
}

void step(const OptimizerConfig& cfg, ParameterStore& store, const Gradients& grads) {
  for (const auto& [name, g] : grads) {
    if (store.get(name).size() != g.size()) {
      fail(ErrorCode::ShapeMismatch, "gradient for '" + name + "' has wrong size");
    }
  }
  const double t = static_cast<double>(store.version() + 1);
  for (const auto& [name, g] : grads) {
    Tensor& p = store.get_mut(name);
    const double lr = cfg.lr * cfg.multiplier(name);
    switch (cfg.kind) {
      case OptimizerKind::Sgd:
        for (std::size_t i = 0; i < g.size(); ++i) p.values[i] -= lr * g[i];
        break;
      case OptimizerKind::Adam: {
        auto& st = store.moments(name);
        const double c1 = 1.0 - std::pow(cfg.beta1, t);
        const double c2 = 1.0 - std::pow(cfg.beta2, t);
        for (std::size_t i = 0; i < g.size(); ++i) {
          st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g[i];
          st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
          const double mhat = st.m[i] / c1;
          const double vhat = st.v[i] / c2;
          p.values[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        break;
      }
      case OptimizerKind::Adamax: {
        auto& st = store.moments(name);
        const double c1 = 1.0 - std::pow(cfg.beta1, t);
        for (std::size_t i = 0; i < g.size(); ++i) {
          st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g[i];
          st.v[i] = std::max(cfg.beta2 * st.v[i], std::abs(g[i]));
          p.values[i] -= (lr / c1) * st.m[i] / (st.v[i] + cfg.eps);
        }
        break;
      }
    }
  }
  store.bump_version();
}

}  // namespace dspl
