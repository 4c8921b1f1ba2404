#pragma once

// Small model and data configurations shared by the test binaries.

#include <atomic>
#include <cstring>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "stgrasp/dataset.hpp"
#include "stgrasp/models.hpp"

namespace stgrasp::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("stgrasp_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline EncoderConfig small_encoder(std::size_t h, std::size_t w, std::size_t c, std::size_t frames, Variant v,
                                   std::size_t d = 8) {
  EncoderConfig e;
  e.variant = v;
  e.embed_dim = d;
  e.num_layers = 1;
  e.num_heads = 2;
  e.frames = frames;
  e.height = h;
  e.width = w;
  e.channels = c;
  e.patch_h = h / 2;
  e.patch_w = w / 2;
  return e;
}

inline SyntheticSpec small_spec(std::size_t count, std::uint64_t seed) {
  SyntheticSpec s;
  s.count = count;
  s.seed = seed;
  s.tactile = {8, 8, 1};
  s.visual = {8, 8, 3};
  return s;
}

inline GraspModelConfig small_grasp_config(Variant v = Variant::DividedSpaceTime) {
  GraspModelConfig g;
  g.tactile = small_encoder(8, 8, 1, kSubsampledFrames, v);
  g.visual = small_encoder(8, 8, 3, kSubsampledFrames, v);
  g.embedding_dim = 4;
  g.head_hidden = 8;
  return g;
}

inline SlipModelConfig small_slip_config(SlipModality m = SlipModality::VisionTactile,
                                         Variant v = Variant::DividedSpaceTime) {
  SlipModelConfig s;
  s.visual = small_encoder(8, 8, 3, kSlipWindow, v);
  s.tactile = small_encoder(8, 8, 1, kSlipWindow, v);
  s.modality = m;
  return s;
}

inline bool same_bits(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(float)) == 0;
}

inline bool same_bits(const Checkpoint& a, const Checkpoint& b) {
  if (a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i].name != b.entries[i].name || !same_bits(a.entries[i].tensor, b.entries[i].tensor)) return false;
  }
  return true;
}

}  // namespace stgrasp::testing
