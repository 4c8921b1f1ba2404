#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "stgrasp/params.hpp"
#include "stgrasp/tensor.hpp"

namespace stgrasp {

// Thresholds are divided by this before entering the prediction MLP so the
// scalar lives on roughly [0, 1] next to a unit-scale embedding.
inline constexpr double kThresholdScale = 16.0;

struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // out

  static Linear init(std::size_t in, std::size_t out, std::mt19937_64& rng);
  Tensor forward(const Tensor& x) const { return add(matmul(x, weight), bias); }
  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
  void collect(const std::string& prefix, ParamList& out) const;
};

// Linear -> GeLU -> Linear.
struct Mlp {
  Linear first;
  Linear second;

  static Mlp init(std::size_t in, std::size_t hidden, std::size_t out, std::mt19937_64& rng);
  Tensor forward(const Tensor& x) const { return second.forward(gelu(first.forward(x))); }
  void collect(const std::string& prefix, ParamList& out) const;
};

// Low-dimensional fused physical feature, shape [1, d_e].
struct PhysicalEmbedding {
  Tensor values;
  std::size_t size() const { return values.numel(); }
};

// [v_visual | v_tactile] for one explorative action. Inputs are [1, D].
Tensor fuse_action(const Tensor& v_visual, const Tensor& v_tactile);

// Projects [v_pinch | v_slide] (length 4D) to the physical embedding.
PhysicalEmbedding fuse_sensors(const Tensor& v_pinch, const Tensor& v_slide, const Linear& fusion);

// Logits over {SafeGrasping, Slippery, PotentialDamage}; the threshold is
// appended to the embedding after division by kThresholdScale.
Tensor predict_outcome(const PhysicalEmbedding& e, double threshold, const Mlp& predictor);
// Differentiable form with a [1, 1] threshold tensor in raw depth units.
Tensor predict_outcome(const PhysicalEmbedding& e, const Tensor& threshold, const Mlp& predictor);

Tensor classify_fruit(const PhysicalEmbedding& e, const Mlp& head);

enum class SlipModality { VisionOnly, TactileOnly, VisionTactile };
std::string_view to_string(SlipModality m);
SlipModality parse_slip_modality(std::string_view s);

// Two logits {Stable, Slip} from the concatenation of the available features.
// Pass an undefined Tensor for an absent modality.
Tensor detect_slip(const Tensor& v_visual, const Tensor& v_tactile, const Linear& head);

}  // namespace stgrasp
