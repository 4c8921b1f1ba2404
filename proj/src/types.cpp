#include "stgrasp/types.hpp"

#include <algorithm>

#include "stgrasp/error.hpp"

namespace stgrasp {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  throw ConfigError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<std::string_view, 2> kModalities = {"tactile", "visual"};
constexpr std::array<std::string_view, 2> kActions = {"pinch", "slide"};
constexpr std::array<std::string_view, 3> kOutcomes = {"safe", "slippery", "damage"};
constexpr std::array<std::string_view, 6> kFruits = {"plum", "apple", "lemon", "tomato", "orange", "kiwifruit"};
constexpr std::array<std::string_view, 2> kSlip = {"stable", "slip"};

}  // namespace

std::string_view to_string(Modality m) { return kModalities[static_cast<std::size_t>(m)]; }
std::string_view to_string(Action a) { return kActions[static_cast<std::size_t>(a)]; }
std::string_view to_string(GraspOutcome o) { return kOutcomes[static_cast<std::size_t>(o)]; }
std::string_view to_string(FruitLabel f) { return kFruits[static_cast<std::size_t>(f)]; }
std::string_view to_string(SlipLabel s) { return kSlip[static_cast<std::size_t>(s)]; }

Modality parse_modality(std::string_view s) { return parse_enum<Modality>(s, kModalities, "modality"); }
Action parse_action(std::string_view s) { return parse_enum<Action>(s, kActions, "action"); }
GraspOutcome parse_outcome(std::string_view s) { return parse_enum<GraspOutcome>(s, kOutcomes, "grasp outcome"); }
FruitLabel parse_fruit(std::string_view s) { return parse_enum<FruitLabel>(s, kFruits, "fruit"); }
SlipLabel parse_slip_label(std::string_view s) { return parse_enum<SlipLabel>(s, kSlip, "slip label"); }

void ImageSequence::validate(const std::string& sample_id) const {
  if (!frames.defined() || frames.rank() != 4) {
    throw DataError("image sequence must be a rank-4 [N,H,W,C] tensor", sample_id);
  }
  const auto d = frames.data();
  if (!std::all_of(d.begin(), d.end(), [](float v) { return v >= 0.0f && v <= 1.0f; })) {
    throw DataError("image values must lie in [0,1]", sample_id);
  }
}

}  // namespace stgrasp
