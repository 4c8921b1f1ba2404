#include "stgrasp/serialize.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "stgrasp/error.hpp"

namespace stgrasp {

namespace {

constexpr char kTsrMagic[4] = {'T', 'S', 'R', '1'};
constexpr char kCkptMagic[8] = {'S', 'T', 'C', 'K', 'P', 'T', '0', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::size_t tsr_size(const Tensor& t) { return 8 + 4 * t.rank() + 4 * t.numel(); }

}  // namespace

std::vector<std::uint8_t> encode_tsr(const Tensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(tsr_size(t));
  out.insert(out.end(), std::begin(kTsrMagic), std::end(kTsrMagic));
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (float f : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode_tsr(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || !std::equal(std::begin(kTsrMagic), std::end(kTsrMagic), bytes.begin())) {
    throw DataError("TSR1: bad magic");
  }
  const std::uint32_t rank = get_u32(bytes.data() + 4);
  if (bytes.size() < 8 + 4ull * rank) throw DataError("TSR1: truncated header");
  Shape shape(rank);
  for (std::uint32_t i = 0; i < rank; ++i) {
    shape[i] = get_u32(bytes.data() + 8 + 4 * i);
    if (shape[i] == 0) throw DataError("TSR1: zero dimension");
  }
  const std::size_t n = shape_numel(shape);
  const std::size_t header = 8 + 4ull * rank;
  if (bytes.size() != header + 4 * n) {
    throw DataError("TSR1: payload length " + std::to_string(bytes.size() - header) + " does not match shape " +
                    shape_str(shape));
  }
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = std::bit_cast<float>(get_u32(bytes.data() + header + 4 * i));
  return Tensor(std::move(shape), std::move(data));
}

void write_tsr(std::ostream& os, const Tensor& t) {
  const auto bytes = encode_tsr(t);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Tensor read_tsr(std::istream& is) {
  std::uint8_t head[8];
  if (!is.read(reinterpret_cast<char*>(head), 8)) throw DataError("TSR1: truncated stream");
  const std::uint32_t rank = get_u32(head + 4);
  std::vector<std::uint8_t> bytes(head, head + 8);
  bytes.resize(8 + 4ull * rank);
  if (!is.read(reinterpret_cast<char*>(bytes.data() + 8), 4ll * rank)) throw DataError("TSR1: truncated header");
  std::size_t n = 1;
  for (std::uint32_t i = 0; i < rank; ++i) n *= get_u32(bytes.data() + 8 + 4 * i);
  const std::size_t header = bytes.size();
  bytes.resize(header + 4 * n);
  if (!is.read(reinterpret_cast<char*>(bytes.data() + header), static_cast<std::streamsize>(4 * n))) {
    throw DataError("TSR1: truncated payload");
  }
  return decode_tsr(bytes);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_tsr(out, t);
  if (!out) throw DataError("write failed: " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  try {
    return decode_tsr(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
  auto it = std::find_if(entries.begin(), entries.end(), [&](const CheckpointEntry& e) { return e.name == name; });
  return it == entries.end() ? nullptr : &*it;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json tensors = nlohmann::json::array();
  std::vector<std::uint8_t> blobs;
  for (const auto& e : ckpt.entries) {
    auto enc = encode_tsr(e.tensor);
    tensors.push_back({{"name", e.name},
                       {"shape", e.tensor.shape()},
                       {"offset", blobs.size()},
                       {"nbytes", enc.size()},
                       {"frozen", e.frozen}});
    blobs.insert(blobs.end(), enc.begin(), enc.end());
  }
  nlohmann::json manifest = {{"format", "stgrasp-checkpoint"}, {"version", 1}, {"tensors", tensors},
                             {"metadata", ckpt.metadata}};
  const std::string text = manifest.dump();

  std::vector<std::uint8_t> out(std::begin(kCkptMagic), std::end(kCkptMagic));
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), blobs.begin(), blobs.end());

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write checkpoint " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < 16 || !std::equal(std::begin(kCkptMagic), std::end(kCkptMagic), bytes.begin())) {
    throw DataError("not a checkpoint file: " + path.string());
  }
  const std::uint64_t mlen = get_u64(bytes.data() + 8);
  if (bytes.size() < 16 + mlen) throw DataError("truncated checkpoint manifest: " + path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(mlen));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint manifest in " + path.string() + ": " + e.what());
  }
  const std::size_t blob_base = 16 + mlen;
  Checkpoint ckpt;
  try {
    ckpt.metadata = manifest.value("metadata", nlohmann::json::object());
    for (const auto& t : manifest.at("tensors")) {
      const std::size_t off = t.at("offset").get<std::size_t>();
      const std::size_t nb = t.at("nbytes").get<std::size_t>();
      if (blob_base + off + nb > bytes.size()) throw DataError("tensor blob out of range: " + t.at("name").get<std::string>());
      Tensor tensor = decode_tsr(std::span(bytes).subspan(blob_base + off, nb));
      if (tensor.shape() != t.at("shape").get<Shape>()) {
        throw DataError("tensor shape disagrees with manifest: " + t.at("name").get<std::string>());
      }
      ckpt.entries.push_back({t.at("name").get<std::string>(), tensor, t.value("frozen", false)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint manifest in " + path.string() + ": " + e.what());
  }
  return ckpt;
}

}  // namespace stgrasp
