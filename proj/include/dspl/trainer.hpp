#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dspl/autodiff.hpp"
#include "dspl/inference.hpp"
#include "dspl/relax.hpp"

namespace dspl {

struct TrainingExample {
  Term query;  // ground after substitution
  double target = 0.0;
};

// One JSON object per line: {"query": "q(X)", "bindings": {"X": ...}, "target": 0.8}.
// A binding is a number, a term in source syntax, or an array of either.
TrainingExample parse_example(const nlohmann::json& line);
std::vector<TrainingExample> load_dataset(const std::string& path);

enum class LossKind { Bce, Mse };
LossKind loss_from_name(const std::string& name);
std::string loss_name(LossKind k);

struct LossValue {
  double value = 0.0;
  double dp = 0.0;  // d value / d p
};

inline constexpr double kBceClamp = 1e-7;
LossValue loss(double p, double y, LossKind kind);

struct TrainConfig {
  LossKind loss = LossKind::Bce;
  OptimizerConfig optimizer;
  std::size_t batch = 10;
  std::size_t epochs = 1;
  std::size_t max_steps = 0;  // 0: no limit
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  CoolnessSchedule schedule;
  IndicatorMode mode = IndicatorMode::StraightThrough;
  std::size_t threads = 1;
  bool shuffle = true;
};

struct TrainReport {
  std::size_t epochs_run = 0;
  std::size_t steps = 0;
  std::vector<double> epoch_losses;  // mean loss over the examples seen in each epoch
  std::vector<double> betas;         // coolness used in each epoch
};

// Errors from inference are rethrown with the example index in the message.
TrainReport train(const Model& model, const std::vector<TrainingExample>& data, const TrainConfig& cfg,
                  ParameterStore& store);

nlohmann::json report_to_json(const TrainReport& r, const TrainConfig& cfg, const Model& model,
                              const ParameterStore& store);

}  // namespace dspl
