#include "stgrasp/models.hpp"

#include <random>
#include <utility>

#include "stgrasp/error.hpp"

namespace stgrasp {

using nlohmann::json;

ImageSequence prepare_sequence(const ImageSequence& seq, const EncoderConfig& cfg) {
  if (!seq.frames.defined() || seq.frames.rank() != 4) throw ShapeError("prepare_sequence: expected a [N, H, W, C] sequence");
  if (seq.num_frames() == cfg.frames) return seq;
  if (cfg.frames == kSubsampledFrames && seq.num_frames() >= kMinFramesForSubsample) return subsample_frames(seq);
  throw ShapeError("sequence has " + std::to_string(seq.num_frames()) + " frames but the encoder expects " +
                   std::to_string(cfg.frames));
}

// ---------------------------------------------------------------- grasp

GraspModelConfig::GraspModelConfig() {
  tactile.channels = 1;
  visual.channels = 3;
}

void GraspModelConfig::validate() const {
  tactile.validate();
  visual.validate();
  if (tactile.embed_dim != visual.embed_dim) throw ConfigError("tactile and visual encoders must share embed_dim");
  if (embedding_dim == 0 || head_hidden == 0) throw ConfigError("embedding_dim and head_hidden must be positive");
}

json GraspModelConfig::to_json() const {
  return json{{"tactile", tactile.to_json()}, {"visual", visual.to_json()}, {"embedding_dim", embedding_dim},
              {"head_hidden", head_hidden}};
}

GraspModelConfig GraspModelConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("grasp model config must be a JSON object");
  GraspModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "tactile") c.tactile = EncoderConfig::from_json(value);
    else if (key == "visual") c.visual = EncoderConfig::from_json(value);
    else if (key == "embedding_dim") c.embedding_dim = value.get<std::size_t>();
    else if (key == "head_hidden") c.head_hidden = value.get<std::size_t>();
    else throw ConfigError("unknown grasp model key '" + key + "'");
  }
  c.validate();
  return c;
}

namespace {

const EncoderConfig& validated(const GraspModelConfig& c) {
  c.validate();
  return c.visual;
}

}  // namespace

// Initialisation order is fixed: pinch visual, pinch tactile, slide visual,
// slide tactile, fusion, predictor, fruit head.
GraspModel::GraspModel(GraspModelConfig cfg, std::uint64_t seed)
    : GraspModel(std::move(cfg), std::mt19937_64(seed)) {}

GraspModel::GraspModel(GraspModelConfig cfg, std::mt19937_64&& rng)
    : cfg_(std::move(cfg)),
      pinch_visual_(validated(cfg_), rng),
      pinch_tactile_(cfg_.tactile, rng),
      slide_visual_(cfg_.visual, rng),
      slide_tactile_(cfg_.tactile, rng),
      fusion_(Linear::init(4 * cfg_.tactile.embed_dim, cfg_.embedding_dim, rng)),
      predictor_(Mlp::init(cfg_.embedding_dim + 1, cfg_.head_hidden, kNumOutcomes, rng)),
      fruit_(Mlp::init(cfg_.embedding_dim, cfg_.head_hidden, kNumFruits, rng)) {}

const Encoder& GraspModel::encoder(Action a, Modality m) const {
  if (a == Action::Pinch) return m == Modality::Visual ? pinch_visual_ : pinch_tactile_;
  return m == Modality::Visual ? slide_visual_ : slide_tactile_;
}

Tensor GraspModel::encode(const GraspSample& s, Action a, Modality m, AttentionRecorder* rec) const {
  const Encoder& enc = encoder(a, m);
  return enc.encode(prepare_sequence(s.sequence(a, m), enc.config()), rec);
}

PhysicalEmbedding GraspModel::embed(const GraspSample& s) const {
  const Tensor pinch = fuse_action(encode(s, Action::Pinch, Modality::Visual), encode(s, Action::Pinch, Modality::Tactile));
  const Tensor slide = fuse_action(encode(s, Action::Slide, Modality::Visual), encode(s, Action::Slide, Modality::Tactile));
  return fuse_sensors(pinch, slide, fusion_);
}

ParamList GraspModel::embedding_parameters() const {
  ParamList out;
  pinch_visual_.collect("encoders.pinch_visual.", out);
  pinch_tactile_.collect("encoders.pinch_tactile.", out);
  slide_visual_.collect("encoders.slide_visual.", out);
  slide_tactile_.collect("encoders.slide_tactile.", out);
  fusion_.collect("fusion.", out);
  return out;
}

ParamList GraspModel::predictor_parameters() const {
  ParamList out;
  predictor_.collect("predictor.", out);
  return out;
}

ParamList GraspModel::fruit_parameters() const {
  ParamList out;
  fruit_.collect("fruit.", out);
  return out;
}

ParamList GraspModel::parameters() const {
  ParamList out = embedding_parameters();
  for (auto& p : predictor_parameters()) out.push_back(std::move(p));
  for (auto& p : fruit_parameters()) out.push_back(std::move(p));
  return out;
}

void GraspModel::set_embedding_frozen(bool frozen) {
  for (auto& p : embedding_parameters()) p.tensor.set_requires_grad(!frozen);
  frozen_ = frozen;
}

Checkpoint GraspModel::to_checkpoint(json extra) const {
  std::vector<std::string> frozen;
  if (frozen_) frozen = {"encoders.", "fusion."};
  Checkpoint ck = stgrasp::to_checkpoint(parameters(), frozen);
  ck.metadata = std::move(extra);
  ck.metadata["model"] = "grasp";
  ck.metadata["config"] = cfg_.to_json();
  ck.metadata["embedding_frozen"] = frozen_;
  return ck;
}

GraspModel GraspModel::from_checkpoint(const Checkpoint& ck) {
  if (checkpoint_model_kind(ck) != ModelKind::Grasp) throw DataError("checkpoint does not hold a grasp model");
  GraspModel m(GraspModelConfig::from_json(ck.metadata.at("config")), 0);
  ParamList params = m.parameters();
  load_into(params, ck);
  m.set_embedding_frozen(ck.metadata.value("embedding_frozen", false));
  return m;
}

// ---------------------------------------------------------------- slip

SlipModelConfig::SlipModelConfig() {
  visual.channels = 3;
  visual.frames = kSlipWindow;
  tactile.channels = 1;
  tactile.frames = kSlipWindow;
}

void SlipModelConfig::validate() const {
  if (uses_visual()) visual.validate();
  if (uses_tactile()) tactile.validate();
  if (modality == SlipModality::VisionTactile && visual.embed_dim != tactile.embed_dim) {
    throw ConfigError("visual and tactile encoders must share embed_dim");
  }
  for (const EncoderConfig* c : {&visual, &tactile}) {
    if (c->frames != kSlipWindow) throw ConfigError("slip encoders take " + std::to_string(kSlipWindow) + " frames");
  }
}

json SlipModelConfig::to_json() const {
  return json{{"visual", visual.to_json()}, {"tactile", tactile.to_json()}, {"modality", to_string(modality)}};
}

SlipModelConfig SlipModelConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("slip model config must be a JSON object");
  SlipModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "visual") c.visual = EncoderConfig::from_json(value);
    else if (key == "tactile") c.tactile = EncoderConfig::from_json(value);
    else if (key == "modality") c.modality = parse_slip_modality(value.get<std::string>());
    else throw ConfigError("unknown slip model key '" + key + "'");
  }
  c.validate();
  return c;
}

SlipModel::SlipModel(SlipModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  std::size_t features = 0;
  if (cfg_.uses_visual()) {
    visual_.emplace(cfg_.visual, rng);
    features += cfg_.visual.embed_dim;
  }
  if (cfg_.uses_tactile()) {
    tactile_.emplace(cfg_.tactile, rng);
    features += cfg_.tactile.embed_dim;
  }
  head_ = Linear::init(features, 2, rng);
}

Tensor SlipModel::logits(const SlipSample& s, AttentionRecorder* visual_rec, AttentionRecorder* tactile_rec) const {
  Tensor v, t;
  if (visual_) v = visual_->encode(prepare_sequence(s.visual, visual_->config()), visual_rec);
  if (tactile_) t = tactile_->encode(prepare_sequence(s.tactile, tactile_->config()), tactile_rec);
  return detect_slip(v, t, head_);
}

ParamList SlipModel::parameters() const {
  ParamList out;
  if (visual_) visual_->collect("encoders.visual.", out);
  if (tactile_) tactile_->collect("encoders.tactile.", out);
  head_.collect("slip.", out);
  return out;
}

Checkpoint SlipModel::to_checkpoint(json extra) const {
  Checkpoint ck = stgrasp::to_checkpoint(parameters());
  ck.metadata = std::move(extra);
  ck.metadata["model"] = "slip";
  ck.metadata["config"] = cfg_.to_json();
  return ck;
}

SlipModel SlipModel::from_checkpoint(const Checkpoint& ck) {
  if (checkpoint_model_kind(ck) != ModelKind::Slip) throw DataError("checkpoint does not hold a slip model");
  SlipModel m(SlipModelConfig::from_json(ck.metadata.at("config")), 0);
  ParamList params = m.parameters();
  load_into(params, ck);
  return m;
}

ModelKind checkpoint_model_kind(const Checkpoint& ck) {
  const std::string kind = ck.metadata.is_object() ? ck.metadata.value("model", "") : "";
  if (kind == "grasp") return ModelKind::Grasp;
  if (kind == "slip") return ModelKind::Slip;
  throw DataError("checkpoint metadata names no known model (got '" + kind + "')");
}

}  // namespace stgrasp
