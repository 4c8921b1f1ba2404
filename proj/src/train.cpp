#include "stgrasp/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "stgrasp/error.hpp"

namespace stgrasp {

using nlohmann::json;

std::string_view to_string(Task t) {
  switch (t) {
    case Task::Slip: return "slip";
    case Task::Outcome: return "outcome";
    case Task::Fruit: return "fruit";
  }
  return "?";
}

Task parse_task(std::string_view s) {
  if (s == "slip") return Task::Slip;
  if (s == "outcome") return Task::Outcome;
  if (s == "fruit") return Task::Fruit;
  throw ConfigError("unknown task '" + std::string(s) + "' (expected slip|outcome|fruit)");
}

std::size_t num_classes(Task t) {
  switch (t) {
    case Task::Slip: return 2;
    case Task::Outcome: return kNumOutcomes;
    case Task::Fruit: return kNumFruits;
  }
  return 0;
}

void TrainConfig::validate() const {
  if (!(lr > 0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("betas must lie in [0, 1)");
  if (!(eps > 0)) throw ConfigError("eps must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (clip_norm && !(*clip_norm > 0)) throw ConfigError("clip_norm must be positive");
  if (stop_at_train_accuracy && !(*stop_at_train_accuracy > 0 && *stop_at_train_accuracy <= 1)) {
    throw ConfigError("stop_at_train_accuracy must lie in (0, 1]");
  }
  if (eval_threads == 0) throw ConfigError("eval_threads must be positive");
}

json TrainConfig::to_json() const {
  json j{{"task", to_string(task)}, {"lr", lr},         {"beta1", beta1},   {"beta2", beta2},
         {"eps", eps},              {"batch_size", batch_size}, {"epochs", epochs}, {"seed", seed},
         {"eval_threads", eval_threads}};
  j["clip_norm"] = clip_norm ? json(*clip_norm) : json(nullptr);
  j["stop_at_train_accuracy"] = stop_at_train_accuracy ? json(*stop_at_train_accuracy) : json(nullptr);
  return j;
}

TrainConfig TrainConfig::from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "task") c.task = parse_task(v.get<std::string>());
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "beta1") c.beta1 = v.get<double>();
      else if (key == "beta2") c.beta2 = v.get<double>();
      else if (key == "eps") c.eps = v.get<double>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "eval_threads") c.eval_threads = v.get<std::size_t>();
      else if (key == "clip_norm") c.clip_norm = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      else if (key == "stop_at_train_accuracy")
        c.stop_at_train_accuracy = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      else throw ConfigError("unknown train key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad train config value: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::from_json(const json& j) { return from_json(j, TrainConfig{}); }

// ---------------------------------------------------------------- loss

Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels) {
  if (logits.rank() != 2) throw ShapeError("cross_entropy: logits must be [batch, classes], got " + shape_str(logits.shape()));
  const std::size_t b = logits.dim(0), k = logits.dim(1);
  if (labels.size() != b) throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(b) + " rows");
  if (b == 0 || k == 0) throw ShapeError("cross_entropy: empty logits");
  const auto x = logits.data();
  std::vector<float> probs(b * k);
  double total = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    if (labels[r] >= k) throw InputError("cross_entropy: label " + std::to_string(labels[r]) + " out of range [0, " + std::to_string(k) + ")");
    const float* row = x.data() + r * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    total += lse - row[labels[r]];
    for (std::size_t j = 0; j < k; ++j) probs[r * k + j] = static_cast<float>(std::exp(row[j] - lse));
  }
  Tensor out = Tensor::scalar(static_cast<float>(total / static_cast<double>(b)));
  record_op(out, {logits}, [logits, labels, probs = std::move(probs), b, k](const Tensor& o) {
    const float g = o.grad()[0] / static_cast<float>(b);
    auto gx = logits.grad_buffer();
    for (std::size_t r = 0; r < b; ++r) {
      for (std::size_t j = 0; j < k; ++j) {
        gx[r * k + j] += g * (probs[r * k + j] - (j == labels[r] ? 1.0f : 0.0f));
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------- optimizer

double grad_norm(const ParamList& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (float g : p.tensor.grad()) sq += static_cast<double>(g) * g;
  }
  return std::sqrt(sq);
}

void clip_grad_norm(const ParamList& params, double max_norm) {
  const double norm = grad_norm(params);
  if (!(norm > max_norm)) return;
  const auto factor = static_cast<float>(max_norm / norm);
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (float& g : p.tensor.grad_buffer()) g *= factor;
  }
}

void adam_step(const ParamList& params, AdamState& s, const TrainConfig& cfg) {
  if (s.m.empty() && s.step == 0) {
    for (const auto& p : params) {
      s.m.emplace_back(p.tensor.numel(), 0.0f);
      s.v.emplace_back(p.tensor.numel(), 0.0f);
    }
  }
  if (s.m.size() != params.size() || s.v.size() != params.size()) throw ShapeError("adam_step: optimizer state does not match parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (s.m[i].size() != params[i].tensor.numel() || s.v[i].size() != params[i].tensor.numel()) {
      throw ShapeError("adam_step: state for '" + params[i].name + "' does not match its shape " + shape_str(params[i].tensor.shape()));
    }
  }
  ++s.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    if (!t.requires_grad()) continue;
    auto w = t.mutable_data();
    const bool has = t.has_grad();
    const auto g = has ? t.grad() : std::span<const float>();
    auto& m = s.m[i];
    auto& v = s.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = has ? g[j] : 0.0;
      m[j] = static_cast<float>(cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj);
      v[j] = static_cast<float>(cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj);
      const double mhat = m[j] / bc1, vhat = v[j] / bc2;
      w[j] = static_cast<float>(w[j] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
    if (has) t.zero_grad();
  }
}

// ---------------------------------------------------------------- metrics

json Metrics::to_json() const {
  return json{{"loss", loss}, {"accuracy", accuracy}, {"total", total}, {"confusion", confusion}};
}

json SplitSummary::to_json() const {
  json splits = json::array();
  for (const auto& m : per_split) splits.push_back(m.to_json());
  return json{{"accuracy_mean", accuracy_mean}, {"accuracy_variance", accuracy_variance}, {"loss_mean", loss_mean},
              {"loss_variance", loss_variance}, {"per_split", splits}};
}

SplitSummary average_over_splits(const std::vector<Metrics>& per_split) {
  if (per_split.empty()) throw InputError("average_over_splits: no splits");
  SplitSummary s;
  s.per_split = per_split;
  const double n = static_cast<double>(per_split.size());
  for (const auto& m : per_split) {
    s.accuracy_mean += m.accuracy;
    s.loss_mean += m.loss;
  }
  s.accuracy_mean /= n;
  s.loss_mean /= n;
  for (const auto& m : per_split) {
    s.accuracy_variance += (m.accuracy - s.accuracy_mean) * (m.accuracy - s.accuracy_mean);
    s.loss_variance += (m.loss - s.loss_mean) * (m.loss - s.loss_mean);
  }
  s.accuracy_variance /= n;
  s.loss_variance /= n;
  return s;
}

namespace {

std::size_t argmax_row(std::span<const float> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

double nll(std::span<const float> row, std::size_t label) {
  const double mx = *std::max_element(row.begin(), row.end());
  double z = 0.0;
  for (float v : row) z += std::exp(v - mx);
  return mx + std::log(z) - row[label];
}

struct Partial {
  double loss = 0;
  std::size_t correct = 0;
  std::vector<std::vector<std::size_t>> confusion;
};

void check_logits(const Tensor& logits, std::size_t classes) {
  if (logits.numel() != classes) throw ShapeError("task forward returned " + shape_str(logits.shape()) + " for " + std::to_string(classes) + " classes");
  if (!all_finite(logits)) throw NumericError("non-finite logits");
}

}  // namespace

Metrics evaluate(const TaskBinding& task, const std::vector<std::size_t>& indices, std::size_t threads) {
  if (indices.empty()) throw InputError("evaluate: empty split");
  const std::size_t k = task.classes;
  threads = std::max<std::size_t>(1, std::min(threads, indices.size()));
  std::vector<Partial> parts(threads);
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](std::size_t w) {
    try {
      Partial& p = parts[w];
      p.confusion.assign(k, std::vector<std::size_t>(k, 0));
      const std::size_t begin = indices.size() * w / threads, end = indices.size() * (w + 1) / threads;
      for (std::size_t i = begin; i < end; ++i) {
        const Tensor logits = task.forward(indices[i]);
        check_logits(logits, k);
        const std::size_t y = task.label(indices[i]);
        const std::size_t pred = argmax_row(logits.data());
        p.loss += nll(logits.data(), y);
        p.correct += pred == y;
        ++p.confusion[y][pred];
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  Metrics m(k);
  double loss = 0;
  std::size_t correct = 0;
  for (const auto& p : parts) {
    loss += p.loss;
    correct += p.correct;
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) m.confusion[a][b] += p.confusion[a][b];
  }
  m.total = indices.size();
  m.loss = loss / static_cast<double>(m.total);
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);
  return m;
}

// ---------------------------------------------------------------- training loop

namespace {

void log_line(std::ostream* log, const std::string& run, std::size_t epoch, const char* split, double loss, double acc) {
  if (!log) return;
  json j{{"epoch", epoch}, {"split", split}, {"loss", loss}, {"accuracy", acc}};
  if (!run.empty()) j["run"] = run;
  *log << j.dump() << '\n';
}

bool better(const Metrics& a, const Metrics& b) {
  if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
  return a.loss < b.loss;
}

}  // namespace

TrainResult train(const TaskBinding& task, const Split& split, const TrainConfig& cfg, std::ostream* log, const std::string& run) {
  cfg.validate();
  if (split.train.empty()) throw InputError("train: empty training split");
  if (task.trainable.empty()) throw InputError("train: no trainable parameters");
  std::mt19937_64 rng(cfg.seed);
  AdamState state;
  TrainResult result;
  std::vector<std::vector<float>> best_values;
  std::vector<std::size_t> order = split.train;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::size_t> labels;
      {
        Tape tape;
        std::vector<Tensor> rows;
        for (std::size_t i = start; i < stop; ++i) {
          rows.push_back(reshape(task.forward(order[i]), {1, task.classes}));
          labels.push_back(task.label(order[i]));
        }
        const Tensor logits = rows.size() == 1 ? rows.front() : concat(rows, 0);
        const Tensor loss = cross_entropy(logits, labels);
        if (!std::isfinite(loss.item())) throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
        tape.backward(loss);
        loss_sum += static_cast<double>(loss.item()) * static_cast<double>(stop - start);
        for (std::size_t r = 0; r < rows.size(); ++r) correct += argmax_row(rows[r].data()) == labels[r];
      }
      if (cfg.clip_norm) clip_grad_norm(task.trainable, *cfg.clip_norm);
      adam_step(task.trainable, state, cfg);
    }
    EpochLog e;
    e.epoch = epoch;
    e.train_loss = loss_sum / static_cast<double>(order.size());
    e.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    log_line(log, run, epoch, "train", e.train_loss, e.train_accuracy);
    if (!split.val.empty()) {
      e.val = evaluate(task, split.val, cfg.eval_threads);
      log_line(log, run, epoch, "val", e.val->loss, e.val->accuracy);
      if (!result.best_val || better(*e.val, *result.best_val)) {
        result.best_val = e.val;
        result.best_epoch = epoch;
        best_values = snapshot_values(task.trainable);
      }
    } else {
      result.best_epoch = epoch;
    }
    result.history.push_back(e);
    result.epochs_run = epoch;
    if (cfg.stop_at_train_accuracy && e.train_accuracy >= *cfg.stop_at_train_accuracy) break;
  }
  if (!best_values.empty()) {
    ParamList params = task.trainable;
    restore_values(params, best_values);
  }
  result.train = evaluate(task, split.train, cfg.eval_threads);
  log_line(log, run, result.best_epoch, "train_final", result.train.loss, result.train.accuracy);
  if (!split.test.empty()) {
    result.test = evaluate(task, split.test, cfg.eval_threads);
    log_line(log, run, result.best_epoch, "test", result.test.loss, result.test.accuracy);
  }
  return result;
}

}  // namespace stgrasp
