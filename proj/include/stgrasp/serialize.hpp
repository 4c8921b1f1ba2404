#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgrasp/tensor.hpp"

namespace stgrasp {

// TSR1 tensor encoding, all integers and floats little-endian:
//   "TSR1" | u32 rank | u32 dims[rank] | f32 data[prod(dims)]
std::vector<std::uint8_t> encode_tsr(const Tensor& t);
Tensor decode_tsr(std::span<const std::uint8_t> bytes);

void write_tsr(std::ostream& os, const Tensor& t);
Tensor read_tsr(std::istream& is);
void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

struct CheckpointEntry {
  std::string name;
  Tensor tensor;
  bool frozen = false;
};

struct Checkpoint {
  std::vector<CheckpointEntry> entries;
  nlohmann::json metadata = nlohmann::json::object();

  const CheckpointEntry* find(const std::string& name) const;
};

// Single-file checkpoint:
//   "STCKPT01" | u64 manifest_bytes | manifest JSON | blob region
// The manifest lists {name, shape, offset, nbytes, frozen} per tensor; offsets
// are relative to the start of the blob region and each blob is a full TSR1
// encoding. Writing is deterministic, so equal checkpoints are equal files.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace stgrasp
