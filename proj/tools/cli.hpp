#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgrasp/dataset.hpp"
#include "stgrasp/encoder.hpp"
#include "stgrasp/force.hpp"
#include "stgrasp/heads.hpp"
#include "stgrasp/train.hpp"

namespace stgrasp::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

struct BenchGeometry {
  std::size_t frames = 8;
  std::size_t height = 64;
  std::size_t width = 48;
  std::size_t channels = 1;
  std::size_t patch_h = 8;
  std::size_t patch_w = 6;
  std::size_t repeats = 5;
};

// Fully resolved settings for one subcommand. Built from a JSON config file
// with command-line flags applied on top.
struct RunConfig {
  std::string command;
  std::filesystem::path dataset, checkpoint, init_checkpoint, out_dir, input;
  std::uint64_t seed = 0;
  std::optional<Task> task;
  std::optional<Variant> variant;
  SlipModality modality = SlipModality::VisionTactile;
  std::size_t threads = 1;

  // encoder and head hyperparameters; geometry comes from the dataset
  std::size_t embed_dim = 32, num_layers = 2, num_heads = 2, mlp_hidden = 0;
  std::size_t tactile_patch_h = 8, tactile_patch_w = 6, visual_patch_h = 8, visual_patch_w = 6;
  std::size_t embedding_dim = 32, head_hidden = 64;

  TrainConfig train;
  std::size_t num_splits = 5;
  std::optional<std::size_t> split_index;  // eval: score only this split's test part
  SplitRatios ratios;

  std::string kind = "grasp";  // gen-synthetic
  SyntheticSpec synthetic;
  CandidateSet candidates;
  SlipConvertOptions convert;

  std::string sample;
  std::string stream;
  std::vector<std::size_t> patches;
  std::optional<std::size_t> frame;
  BenchGeometry bench;

  // Unknown keys anywhere raise ConfigError.
  static RunConfig from_json(const std::string& command, const nlohmann::json& j);
};

// Entry point shared by the binary and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_gen_synthetic(const RunConfig& cfg, std::ostream& out);
int cmd_convert_slip(const RunConfig& cfg, std::ostream& out);
int cmd_train(const RunConfig& cfg, std::ostream& out);
int cmd_eval(const RunConfig& cfg, std::ostream& out);
int cmd_infer_force(const RunConfig& cfg, std::ostream& out);
int cmd_attention_viz(const RunConfig& cfg, std::ostream& out);
int cmd_bench(const RunConfig& cfg, std::ostream& out);

}  // namespace stgrasp::cli
