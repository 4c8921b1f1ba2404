#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgrasp/types.hpp"

namespace stgrasp {

inline constexpr std::size_t kSlipWindow = 14;
inline constexpr std::size_t kSubsampledFrames = 8;
inline constexpr std::size_t kMinFramesForSubsample = 22;

// Hidden physical parameters behind a synthetic grasp. The safe force
// interval [safe_lo, safe_hi] is a closed range of integer thresholds.
struct PlantedParams {
  double hardness = 0.0;  // [0, 1]
  double texture = 0.0;   // [0, 1], normalized surface texture frequency
  int safe_lo = 4;
  int safe_hi = 16;
};

struct GraspSample {
  std::string id;
  ImageSequence pinch_tactile;
  ImageSequence pinch_visual;
  ImageSequence slide_tactile;
  ImageSequence slide_visual;
  double force_threshold = 0.0;
  GraspOutcome outcome = GraspOutcome::SafeGrasping;
  FruitLabel fruit = FruitLabel::Plum;
  std::optional<PlantedParams> planted;

  const ImageSequence& sequence(Action a, Modality m) const;
  void validate() const;
};

struct SlipSample {
  std::string id;
  ImageSequence visual;
  ImageSequence tactile;
  SlipLabel label = SlipLabel::Stable;

  // Both sequences must hold exactly kSlipWindow frames.
  void validate() const;
};

struct GraspDataset {
  std::vector<GraspSample> samples;
};

struct SlipDataset {
  std::vector<SlipSample> samples;
};

// ---- frame subsampling ----

// Zero-based frame indices 0, 3, ..., 21 (every third frame, eight in total).
std::array<std::size_t, kSubsampledFrames> subsample_indices();
ImageSequence subsample_frames(const ImageSequence& seq);

// ---- splits ----

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// `num_splits` independent shuffles of [0, n), each cut into disjoint
// train/val/test parts. Deterministic in `seed`.
std::vector<Split> make_splits(std::size_t n, const SplitRatios& ratios, std::size_t num_splits, std::uint64_t seed);

// ---- synthetic data with planted ground truth ----

struct ImageDims {
  std::size_t height = 64;
  std::size_t width = 48;
  std::size_t channels = 1;
};

struct SyntheticSpec {
  std::size_t count = 256;
  ImageDims tactile{64, 48, 1};
  ImageDims visual{64, 48, 3};
  std::size_t raw_frames = 24;  // grasp sequences are rendered at this length, then subsampled to 8
  double noise = 0.02;          // stddev of additive pixel noise
  double cell_margin = 0.2;     // fraction of each (hardness, texture) cell kept clear at its edges
  double slip_fraction = 0.5;   // slip datasets only
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

// Integer thresholds drawn for synthetic grasps, and the default inference candidates.
inline constexpr int kMinThreshold = 4;
inline constexpr int kMaxThreshold = 16;

PlantedParams plant_params(double hardness, double texture);
FruitLabel fruit_cell(double hardness, double texture);
GraspOutcome outcome_for_threshold(const PlantedParams& p, double threshold);

// Label-level draw for one synthetic grasp, before any rendering.
struct GraspPlan {
  PlantedParams planted;
  FruitLabel fruit = FruitLabel::Plum;
  double threshold = 0.0;
  GraspOutcome outcome = GraspOutcome::SafeGrasping;
  std::uint64_t render_seed = 0;
  double hue = 0.0;
};

std::vector<GraspPlan> plan_grasps(const SyntheticSpec& spec);
GraspSample render_grasp(const GraspPlan& plan, const SyntheticSpec& spec, std::string id);
GraspDataset generate_grasp_synthetic(const SyntheticSpec& spec);
SlipDataset generate_slip_synthetic(const SyntheticSpec& spec);

// ---- on-disk layout: root/manifest.json + root/<sample id>/<stream>.tsr ----

enum class DatasetKind { Grasp, Slip };

DatasetKind peek_dataset_kind(const std::filesystem::path& root);
void save_dataset(const GraspDataset& ds, const std::filesystem::path& root);
void save_dataset(const SlipDataset& ds, const std::filesystem::path& root);
GraspDataset load_grasp_dataset(const std::filesystem::path& root);
SlipDataset load_slip_dataset(const std::filesystem::path& root);

// Converts extracted slip recordings into the canonical layout. Expected input:
//   <input>/<sample>/visual/*.png, <input>/<sample>/tactile/*.png (lexicographic
//   frame order), <input>/<sample>/label.txt containing "slip"/"stable" or 1/0.
// Takes kSlipWindow frames starting at `window_start`, optionally resized.
struct SlipConvertOptions {
  std::size_t window_start = 0;
  std::optional<ImageDims> resize;  // channels field ignored
};
SlipDataset convert_slip_recordings(const std::filesystem::path& input, const SlipConvertOptions& options);

}  // namespace stgrasp
