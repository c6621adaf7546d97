#include "dspl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "dspl/rng.hpp"

namespace dspl {

namespace {

Term binding_term(const nlohmann::json& v) {
  if (v.is_number()) return Term::num(v.get<double>());
  if (v.is_string()) return parse_term(v.get<std::string>());
  if (v.is_array()) {
    std::vector<Term> items;
    for (const auto& x : v) items.push_back(binding_term(x));
    return Term::list(std::move(items));
  }
  fail(ErrorCode::ValidationError, "binding must be a number, a term or an array");
}

}  // namespace

TrainingExample parse_example(const nlohmann::json& line) {
  if (!line.is_object() || !line.contains("query") || !line.contains("target")) {
    fail(ErrorCode::ValidationError, "example needs \"query\" and \"target\"");
  }
  Term q = parse_term(line.at("query").get<std::string>());
  if (line.contains("bindings")) {
    Bindings b;
    for (const auto& [name, v] : line.at("bindings").items()) b[name] = binding_term(v);
    q = substitute(q, b);
  }
  if (!is_ground(q)) fail(ErrorCode::ValidationError, "query '" + to_string(q) + "' is not ground after bindings");
  const double y = line.at("target").get<double>();
  if (!(y >= 0.0 && y <= 1.0)) fail(ErrorCode::ValidationError, "target outside [0, 1]");
  return {std::move(q), y};
}

std::vector<TrainingExample> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::vector<TrainingExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_example(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::SyntaxError, path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.code(), path + ":" + std::to_string(lineno) + ": " + e.detail());
    }
  }
  return out;
}

LossKind loss_from_name(const std::string& name) {
  if (name == "bce") return LossKind::Bce;
  if (name == "mse") return LossKind::Mse;
  fail(ErrorCode::ValidationError, "unknown loss '" + name + "' (bce, mse)");
}

std::string loss_name(LossKind k) { return k == LossKind::Bce ? "bce" : "mse"; }

LossValue loss(double p, double y, LossKind kind) {
  if (kind == LossKind::Mse) return {(p - y) * (p - y), 2 * (p - y)};
  const double q = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
  const bool clamped = q != p;
  return {-y * std::log(q) - (1 - y) * std::log(1 - q), clamped ? 0.0 : -y / q + (1 - y) / (1 - q)};
}

TrainReport train(const Model& model, const std::vector<TrainingExample>& data, const TrainConfig& cfg,
                  ParameterStore& store) {
  if (!(cfg.optimizer.lr > 0)) fail(ErrorCode::ValidationError, "learning rate must be positive");
  if (cfg.batch == 0) fail(ErrorCode::ValidationError, "batch size must be at least 1");
  TrainReport report;
  if (data.empty()) return report;

  std::map<std::string, CompiledQuery> cache;
  auto compiled = [&](const Term& q) -> const CompiledQuery& {
    const std::string key = to_string(q);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, compile_query(model, q)).first;
    return it->second;
  };

  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.max_steps && report.steps >= cfg.max_steps) break;
    std::iota(order.begin(), order.end(), 0);
    if (cfg.shuffle) {
      std::mt19937_64 gen(hash_combine(cfg.seed, epoch));
      std::shuffle(order.begin(), order.end(), gen);
    }
    const double beta = anneal(cfg.schedule, epoch);
    double total = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      if (cfg.max_steps && report.steps >= cfg.max_steps) break;
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      Gradients acc;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        InferenceConfig ic;
        ic.n_samples = cfg.n_samples;
        ic.seed = hash_combine(hash_combine(cfg.seed, report.steps), idx);
        ic.mode = cfg.mode;
        ic.beta = beta;
        ic.threads = cfg.threads;
        GradResult g;
        try {
          g = grad_query(model, compiled(data[idx].query), store, ic);
        } catch (const Error& e) {
          fail(e.code(), "example " + std::to_string(idx) + ": " + e.detail());
        }
        const LossValue l = loss(g.result.estimate, data[idx].target, cfg.loss);
        total += l.value;
        ++seen;
        const double scale = l.dp / static_cast<double>(end - start);
        for (const auto& [name, grad] : g.gradients) {
          auto& a = acc[name];
          if (a.empty()) a.assign(grad.size(), 0.0);
          for (std::size_t i = 0; i < grad.size(); ++i) a[i] += scale * grad[i];
        }
      }
      step(cfg.optimizer, store, acc);
      ++report.steps;
    }
    report.epoch_losses.push_back(seen ? total / static_cast<double>(seen) : 0.0);
    report.betas.push_back(beta);
    ++report.epochs_run;
  }
  return report;
}

nlohmann::json report_to_json(const TrainReport& r, const TrainConfig& cfg, const Model& model,
                              const ParameterStore& store) {
  nlohmann::json j;
  j["epochs_run"] = r.epochs_run;
  j["steps"] = r.steps;
  j["epoch_losses"] = r.epoch_losses;
  j["betas"] = r.betas;
  j["loss"] = loss_name(cfg.loss);
  j["optimizer"] = optimizer_name(cfg.optimizer.kind);
  j["lr"] = cfg.optimizer.lr;
  j["batch"] = cfg.batch;
  j["n_samples"] = cfg.n_samples;
  j["seed"] = cfg.seed;
  j["mode"] = mode_name(cfg.mode);
  j["beta_schedule"] = cfg.schedule.to_string();
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, lp] : model.learnables) {
    if (!store.contains(name)) continue;
    std::vector<double> v;
    for (double raw : store.get(name).values) v.push_back(constrain(raw, lp.constraint));
    params[name] = v.size() == 1 && lp.shape.empty() ? nlohmann::json(v[0]) : nlohmann::json(v);
  }
  j["params"] = params;
  return j;
}

}  // namespace dspl
