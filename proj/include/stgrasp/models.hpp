#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgrasp/dataset.hpp"
#include "stgrasp/encoder.hpp"
#include "stgrasp/heads.hpp"

namespace stgrasp {

// Resamples a stored sequence to the encoder's frame count: identity when it
// already matches, the every-third-frame rule for long grasp recordings.
ImageSequence prepare_sequence(const ImageSequence& seq, const EncoderConfig& cfg);

struct GraspModelConfig {
  EncoderConfig tactile;
  EncoderConfig visual;
  std::size_t embedding_dim = 32;  // d_e
  std::size_t head_hidden = 64;

  GraspModelConfig();
  void validate() const;
  nlohmann::json to_json() const;
  static GraspModelConfig from_json(const nlohmann::json& j);
};

// Four sensor encoders, sensor fusion, outcome predictor and fruit head.
class GraspModel {
 public:
  GraspModel(GraspModelConfig cfg, std::uint64_t seed);

  const GraspModelConfig& config() const { return cfg_; }
  const Encoder& encoder(Action a, Modality m) const;

  Tensor encode(const GraspSample& s, Action a, Modality m, AttentionRecorder* rec = nullptr) const;
  PhysicalEmbedding embed(const GraspSample& s) const;
  Tensor predict(const PhysicalEmbedding& e, double threshold) const { return predict_outcome(e, threshold, predictor_); }
  Tensor classify(const PhysicalEmbedding& e) const { return classify_fruit(e, fruit_); }

  const Linear& fusion() const { return fusion_; }
  const Mlp& predictor() const { return predictor_; }
  const Mlp& fruit_head() const { return fruit_; }

  // Parameter groups, named as stored in checkpoints.
  ParamList parameters() const;
  ParamList embedding_parameters() const;  // encoders + fusion ("encoders.", "fusion.")
  ParamList predictor_parameters() const;  // "predictor."
  ParamList fruit_parameters() const;      // "fruit."

  // Freezing clears requires_grad on the encoders and fusion.
  void set_embedding_frozen(bool frozen);
  bool embedding_frozen() const { return frozen_; }

  Checkpoint to_checkpoint(nlohmann::json extra_metadata = nlohmann::json::object()) const;
  static GraspModel from_checkpoint(const Checkpoint& ckpt);

 private:
  GraspModel(GraspModelConfig cfg, std::mt19937_64&& rng);

  GraspModelConfig cfg_;
  Encoder pinch_visual_, pinch_tactile_, slide_visual_, slide_tactile_;
  Linear fusion_;
  Mlp predictor_;
  Mlp fruit_;
  bool frozen_ = false;
};

struct SlipModelConfig {
  EncoderConfig visual;
  EncoderConfig tactile;
  SlipModality modality = SlipModality::VisionTactile;

  SlipModelConfig();
  void validate() const;
  bool uses_visual() const { return modality != SlipModality::TactileOnly; }
  bool uses_tactile() const { return modality != SlipModality::VisionOnly; }
  nlohmann::json to_json() const;
  static SlipModelConfig from_json(const nlohmann::json& j);
};

class SlipModel {
 public:
  SlipModel(SlipModelConfig cfg, std::uint64_t seed);

  const SlipModelConfig& config() const { return cfg_; }
  const std::optional<Encoder>& visual_encoder() const { return visual_; }
  const std::optional<Encoder>& tactile_encoder() const { return tactile_; }
  const Linear& head() const { return head_; }

  // Two logits {Stable, Slip}; recorders capture the matching encoder's attention.
  Tensor logits(const SlipSample& s, AttentionRecorder* visual_rec = nullptr, AttentionRecorder* tactile_rec = nullptr) const;

  ParamList parameters() const;
  Checkpoint to_checkpoint(nlohmann::json extra_metadata = nlohmann::json::object()) const;
  static SlipModel from_checkpoint(const Checkpoint& ckpt);

 private:
  SlipModelConfig cfg_;
  std::optional<Encoder> visual_, tactile_;
  Linear head_;
};

enum class ModelKind { Grasp, Slip };
// Reads the "model" field of a checkpoint's metadata.
ModelKind checkpoint_model_kind(const Checkpoint& ckpt);

}  // namespace stgrasp
