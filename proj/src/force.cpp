#include "stgrasp/force.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "stgrasp/error.hpp"

namespace stgrasp {

void CandidateSet::validate() const {
  if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step)) throw ConfigError("candidate bounds must be finite");
  if (min < 0) throw ConfigError("candidate thresholds must be >= 0");
  if (min > max) throw ConfigError("candidate min must not exceed max");
  if (random_seed) {
    if (random_count == 0) throw ConfigError("random candidate count must be positive");
  } else if (step <= 0) {
    throw ConfigError("candidate step must be positive");
  }
}

std::vector<double> CandidateSet::values() const {
  validate();
  std::vector<double> out;
  if (random_seed) {
    std::mt19937_64 rng(*random_seed);
    std::uniform_real_distribution<double> u(min, max);
    for (std::size_t i = 0; i < random_count; ++i) out.push_back(min == max ? min : u(rng));
    std::sort(out.begin(), out.end());
    return out;
  }
  // index-based stepping avoids drift from repeated addition
  const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) out.push_back(min + static_cast<double>(i) * step);
  return out;
}

nlohmann::json InferenceResult::to_json() const {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : candidates) {
    cands.push_back({{"threshold", c.threshold}, {"outcome", to_string(c.outcome)}, {"probabilities", c.probabilities}});
  }
  nlohmann::json j{{"candidates", cands}, {"safe_set", safe_set}};
  if (chosen_threshold) {
    j["chosen_threshold"] = *chosen_threshold;
  } else {
    j["chosen_threshold"] = nullptr;
    j["fallback_threshold"] = fallback_threshold;
    j["fallback_is_unsafe"] = true;
  }
  return j;
}

InferenceResult evaluate_candidates(const PhysicalEmbedding& e, const Mlp& predictor, const CandidateSet& candidates) {
  InferenceResult r;
  double best_safe = -1.0;
  for (double thr : candidates.values()) {
    const Tensor logits = predict_outcome(e, thr, predictor);
    const Tensor probs = softmax_lastdim(logits);
    CandidateOutcome c;
    c.threshold = thr;
    c.probabilities.assign(probs.data().begin(), probs.data().end());
    const auto arg = std::max_element(logits.data().begin(), logits.data().end()) - logits.data().begin();
    c.outcome = static_cast<GraspOutcome>(arg);
    if (c.outcome == GraspOutcome::SafeGrasping) r.safe_set.push_back(thr);
    const double p_safe = c.probabilities[static_cast<std::size_t>(GraspOutcome::SafeGrasping)];
    if (p_safe > best_safe) {
      best_safe = p_safe;
      r.fallback_threshold = thr;
    }
    r.candidates.push_back(std::move(c));
  }
  if (!r.safe_set.empty()) {
    double sum = 0.0;
    for (double v : r.safe_set) sum += v;
    r.chosen_threshold = sum / static_cast<double>(r.safe_set.size());
  }
  return r;
}

InferenceResult select_safe_threshold(const PhysicalEmbedding& e, const Mlp& predictor, const CandidateSet& candidates) {
  InferenceResult r = evaluate_candidates(e, predictor, candidates);
  if (!r.chosen_threshold) throw NoSafeThreshold(std::move(r));
  return r;
}

std::optional<std::size_t> trigger_grasp(const std::vector<double>& depth, double threshold) {
  std::size_t run = 0;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    run = depth[i] > threshold ? run + 1 : 0;
    if (run >= 3) return i;
  }
  return std::nullopt;
}

}  // namespace stgrasp
