#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "stgrasp/heads.hpp"
#include "stgrasp/types.hpp"

namespace stgrasp {

// Threshold candidates in depth-pixel units.
struct CandidateSet {
  double min = 4;
  double max = 16;
  double step = 1;
  // When set, `random_count` values are drawn uniformly from [min, max]
  // (sorted) instead of the regular grid.
  std::optional<std::uint64_t> random_seed;
  std::size_t random_count = 13;

  void validate() const;
  std::vector<double> values() const;
};

struct CandidateOutcome {
  double threshold = 0;
  GraspOutcome outcome = GraspOutcome::SafeGrasping;
  std::vector<double> probabilities;  // softmax over the three outcomes
};

struct InferenceResult {
  std::vector<CandidateOutcome> candidates;
  std::vector<double> safe_set;
  std::optional<double> chosen_threshold;  // mean of safe_set
  double fallback_threshold = 0;           // highest Safe probability; not itself predicted safe when safe_set is empty

  nlohmann::json to_json() const;
};

class NoSafeThreshold : public std::runtime_error {
 public:
  explicit NoSafeThreshold(InferenceResult r)
      : std::runtime_error("no candidate threshold is predicted safe"), result_(std::move(r)) {}
  const InferenceResult& result() const noexcept { return result_; }

 private:
  InferenceResult result_;
};

// Runs the predictor once per candidate with the same embedding. Never throws
// for an empty safe set.
InferenceResult evaluate_candidates(const PhysicalEmbedding& e, const Mlp& predictor, const CandidateSet& candidates);

// As evaluate_candidates, but throws NoSafeThreshold when nothing is predicted safe.
InferenceResult select_safe_threshold(const PhysicalEmbedding& e, const Mlp& predictor, const CandidateSet& candidates);

// Smallest index i with depth[i-2], depth[i-1], depth[i] all above threshold.
std::optional<std::size_t> trigger_grasp(const std::vector<double>& depth_stream, double threshold);

}  // namespace stgrasp
