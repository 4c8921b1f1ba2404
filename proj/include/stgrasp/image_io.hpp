#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace stgrasp {

// 8-bit interleaved image, 1 (gray) or 3 (RGB) channels.
struct Image8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }
};

void write_png(const std::filesystem::path& path, const Image8& img);
// Gray and RGB are returned as-is; palette/alpha inputs are expanded to RGB.
Image8 read_png(const std::filesystem::path& path);

}  // namespace stgrasp
