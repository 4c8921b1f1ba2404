#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "stgrasp/tensor.hpp"

namespace stgrasp {

enum class Modality { Tactile, Visual };
enum class Action { Pinch, Slide };
enum class GraspOutcome { SafeGrasping = 0, Slippery = 1, PotentialDamage = 2 };
enum class FruitLabel { Plum = 0, Apple = 1, Lemon = 2, Tomato = 3, Orange = 4, Kiwifruit = 5 };
enum class SlipLabel { Stable = 0, Slip = 1 };

inline constexpr std::size_t kNumOutcomes = 3;
inline constexpr std::size_t kNumFruits = 6;

std::string_view to_string(Modality m);
std::string_view to_string(Action a);
std::string_view to_string(GraspOutcome o);
std::string_view to_string(FruitLabel f);
std::string_view to_string(SlipLabel s);

Modality parse_modality(std::string_view s);
Action parse_action(std::string_view s);
GraspOutcome parse_outcome(std::string_view s);
FruitLabel parse_fruit(std::string_view s);
SlipLabel parse_slip_label(std::string_view s);

// Frames stored as a [N, H, W, C] tensor with values in [0, 1].
struct ImageSequence {
  Tensor frames;
  Modality modality = Modality::Tactile;
  Action action = Action::Pinch;

  std::size_t num_frames() const { return frames.dim(0); }
  std::size_t height() const { return frames.dim(1); }
  std::size_t width() const { return frames.dim(2); }
  std::size_t channels() const { return frames.dim(3); }

  // Throws DataError unless rank 4, N >= 1 and all values lie in [0, 1].
  void validate(const std::string& sample_id = {}) const;
};

}  // namespace stgrasp
