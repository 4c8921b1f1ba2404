#include "stgrasp/heads.hpp"

#include <cmath>

#include "stgrasp/error.hpp"

namespace stgrasp {

Linear Linear::init(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  // fan-in scaled normal; heads sit on top of LayerNorm-free features
  const float stddev = 1.0f / std::sqrt(static_cast<float>(in));
  return {Tensor::randn({in, out}, stddev, rng, true), Tensor::zeros({out}, true)};
}

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + "weight", weight});
  out.push_back({prefix + "bias", bias});
}

Mlp Mlp::init(std::size_t in, std::size_t hidden, std::size_t out, std::mt19937_64& rng) {
  Mlp m;
  m.first = Linear::init(in, hidden, rng);
  m.second = Linear::init(hidden, out, rng);
  return m;
}

void Mlp::collect(const std::string& prefix, ParamList& out) const {
  first.collect(prefix + "fc1.", out);
  second.collect(prefix + "fc2.", out);
}

namespace {

void require_row(const Tensor& v, const char* what) {
  if (!v.defined() || v.rank() != 2 || v.dim(0) != 1) {
    throw ShapeError(std::string(what) + ": expected a [1, n] feature row, got " +
                     (v.defined() ? shape_str(v.shape()) : std::string("<undefined>")));
  }
}

}  // namespace

Tensor fuse_action(const Tensor& v_visual, const Tensor& v_tactile) {
  require_row(v_visual, "fuse_action");
  require_row(v_tactile, "fuse_action");
  if (v_visual.dim(1) != v_tactile.dim(1)) {
    throw ShapeError("fuse_action: visual feature " + shape_str(v_visual.shape()) + " and tactile feature " +
                     shape_str(v_tactile.shape()) + " differ in length");
  }
  return concat_lastdim({v_visual, v_tactile});
}

PhysicalEmbedding fuse_sensors(const Tensor& v_pinch, const Tensor& v_slide, const Linear& fusion) {
  require_row(v_pinch, "fuse_sensors");
  require_row(v_slide, "fuse_sensors");
  if (v_pinch.dim(1) != v_slide.dim(1) || 2 * v_pinch.dim(1) != fusion.in_features()) {
    throw ShapeError("fuse_sensors: action features " + shape_str(v_pinch.shape()) + " and " +
                     shape_str(v_slide.shape()) + " do not match fusion input " + std::to_string(fusion.in_features()));
  }
  return {fusion.forward(concat_lastdim({v_pinch, v_slide}))};
}

Tensor predict_outcome(const PhysicalEmbedding& e, const Tensor& threshold, const Mlp& predictor) {
  require_row(e.values, "predict_outcome");
  if (threshold.numel() != 1) throw ShapeError("predict_outcome: threshold must be a single value");
  const float t = threshold.data()[0];
  if (!std::isfinite(t) || t < 0.0f) throw InputError("predict_outcome: threshold must be finite and >= 0");
  const Tensor scaled = scale(reshape(threshold, {1, 1}), static_cast<float>(1.0 / kThresholdScale));
  return predictor.forward(concat_lastdim({e.values, scaled}));
}

Tensor predict_outcome(const PhysicalEmbedding& e, double threshold, const Mlp& predictor) {
  return predict_outcome(e, Tensor({1, 1}, {static_cast<float>(threshold)}), predictor);
}

Tensor classify_fruit(const PhysicalEmbedding& e, const Mlp& head) {
  require_row(e.values, "classify_fruit");
  return head.forward(e.values);
}

std::string_view to_string(SlipModality m) {
  switch (m) {
    case SlipModality::VisionOnly: return "vision";
    case SlipModality::TactileOnly: return "tactile";
    case SlipModality::VisionTactile: return "vision+tactile";
  }
  return "?";
}

SlipModality parse_slip_modality(std::string_view s) {
  if (s == "vision" || s == "visual") return SlipModality::VisionOnly;
  if (s == "tactile") return SlipModality::TactileOnly;
  if (s == "vision+tactile" || s == "both") return SlipModality::VisionTactile;
  throw ConfigError("unknown slip modality '" + std::string(s) + "' (expected vision|tactile|vision+tactile)");
}

Tensor detect_slip(const Tensor& v_visual, const Tensor& v_tactile, const Linear& head) {
  std::vector<Tensor> parts;
  if (v_visual.defined()) {
    require_row(v_visual, "detect_slip");
    parts.push_back(v_visual);
  }
  if (v_tactile.defined()) {
    require_row(v_tactile, "detect_slip");
    parts.push_back(v_tactile);
  }
  if (parts.empty()) throw InputError("detect_slip: no modality provided");
  const Tensor x = parts.size() == 1 ? parts.front() : concat_lastdim(parts);
  if (x.dim(1) != head.in_features()) {
    throw ShapeError("detect_slip: feature length " + std::to_string(x.dim(1)) + " does not match head input " +
                     std::to_string(head.in_features()));
  }
  return head.forward(x);
}

}  // namespace stgrasp
