#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "stgrasp/encoder.hpp"
#include "stgrasp/image_io.hpp"

namespace stgrasp {

// Which recorded axes enter the rollout product.
struct AxisSelection {
  bool temporal = true;
  bool spatial = true;
  bool fused = true;

  bool includes(AttentionAxis a) const;
};

// Row-stochastic attribution from output tokens (rows) to input tokens (columns).
struct RolloutMap {
  std::size_t tokens = 0;
  std::size_t frames = 0;
  std::size_t spatial = 0;
  bool has_cls = false;
  std::size_t steps = 0;        // attention applications multiplied in
  std::vector<double> matrix;   // tokens x tokens, row-major

  double at(std::size_t row, std::size_t col) const { return matrix[row * tokens + col]; }
  std::size_t row(std::size_t frame, std::size_t s) const { return (has_cls ? 1 : 0) + frame * spatial + s; }
};

// Each (layer, axis) application contributes one step: head-averaged weights
// embedded into token space (a token in several groups takes the mean of its
// rows), mixed as 0.5 A + 0.5 I, row-normalized. Steps are multiplied in
// recording order: R = A_k ... A_1.
RolloutMap rollout(const std::vector<AttentionRecord>& records, std::size_t token_count, std::size_t frames,
                   std::size_t spatial, bool has_cls, const AxisSelection& axes = {});
RolloutMap rollout(const AttentionRecorder& recorder, const AxisSelection& axes = {});

// Rollout mass from the selected final-frame patches (spatial indices) to the
// patches of every frame, normalized to sum to 1 across frames.
std::vector<double> temporal_profile(const RolloutMap& map, const std::vector<std::size_t>& final_frame_patches);

// Attribution of one query to the patches of `frame`. Without a query the CLS
// row is used when present, otherwise the mean over all rows (mean pooling).
std::vector<double> spatial_weights(const RolloutMap& map, std::size_t frame, std::optional<std::size_t> query_row = {});

struct HeatmapFiles {
  std::filesystem::path png;
  std::filesystem::path csv;
  std::optional<std::filesystem::path> overlay;
  std::vector<double> normalized;  // weights / max weight, patch grid row-major
};

// Writes a grayscale patch heatmap (brightness = weight / max weight), the
// normalized weights as CSV next to it, and, given a source frame, an overlay
// that dims the frame outside attended patches.
HeatmapFiles render_heatmap(const std::vector<double>& patch_weights, std::size_t grid_rows, std::size_t grid_cols,
                            std::size_t patch_h, std::size_t patch_w, const std::filesystem::path& png_path,
                            const Image8* source = nullptr);

std::vector<double> read_heatmap_csv(const std::filesystem::path& csv);

// [H, W, C] frame from an image sequence tensor, quantized to 8 bits.
Image8 frame_to_image(const ImageSequence& seq, std::size_t frame);

}  // namespace stgrasp
