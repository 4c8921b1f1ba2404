#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgrasp/dataset.hpp"
#include "stgrasp/params.hpp"
#include "stgrasp/tensor.hpp"

namespace stgrasp {

enum class Task { Slip, Outcome, Fruit };
std::string_view to_string(Task t);
Task parse_task(std::string_view s);
std::size_t num_classes(Task t);

struct TrainConfig {
  Task task = Task::Slip;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 8;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  std::optional<double> clip_norm;  // global-norm clipping, off by default
  // Stop once an epoch's running training accuracy reaches this value.
  std::optional<double> stop_at_train_accuracy;
  std::size_t eval_threads = 1;

  void validate() const;
  nlohmann::json to_json() const;
  // Applies the keys present in `j` on top of `base`; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
  static TrainConfig from_json(const nlohmann::json& j);
};

// Mean negative log-softmax of the true class over the rows of [b, k] logits.
Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels);

struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update from the parameters' accumulated gradients
// (missing gradients count as zero). Gradients are zeroed afterwards.
void adam_step(const ParamList& params, AdamState& state, const TrainConfig& cfg);

// Global L2 norm over all present gradients.
double grad_norm(const ParamList& params);
void clip_grad_norm(const ParamList& params, double max_norm);

struct Metrics {
  double loss = 0;
  double accuracy = 0;
  std::size_t total = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]

  explicit Metrics(std::size_t classes = 0) : confusion(classes, std::vector<std::size_t>(classes, 0)) {}
  nlohmann::json to_json() const;
};

struct SplitSummary {
  std::vector<Metrics> per_split;
  double accuracy_mean = 0;
  double accuracy_variance = 0;  // population variance across splits
  double loss_mean = 0;
  double loss_variance = 0;

  nlohmann::json to_json() const;
};

SplitSummary average_over_splits(const std::vector<Metrics>& per_split);

// Adapter between a model/dataset pair and the generic loops.
struct TaskBinding {
  std::size_t classes = 0;
  std::function<Tensor(std::size_t)> forward;  // [1, classes] logits for sample i
  std::function<std::size_t(std::size_t)> label;
  ParamList trainable;
};

// Read-only pass; shards samples over `threads` workers.
Metrics evaluate(const TaskBinding& task, const std::vector<std::size_t>& indices, std::size_t threads = 1);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0;
  double train_accuracy = 0;
  std::optional<Metrics> val;
};

struct TrainResult {
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::optional<Metrics> best_val;
  Metrics train;  // clean evaluation of the selected weights
  Metrics test;
  std::vector<EpochLog> history;
};

// Seeded shuffled minibatches, best-epoch selection on validation accuracy
// (ties: lower validation loss), restoration of the selected weights, then
// train/test evaluation. Writes one JSON line per epoch and split to `log`.
TrainResult train(const TaskBinding& task, const Split& split, const TrainConfig& cfg, std::ostream* log = nullptr,
                  const std::string& run_label = {});

}  // namespace stgrasp
