#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgrasp/params.hpp"
#include "stgrasp/tensor.hpp"
#include "stgrasp/types.hpp"

namespace stgrasp {

enum class Variant { DividedSpaceTime, FactorisedDotProduct };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);

struct EncoderConfig {
  Variant variant = Variant::DividedSpaceTime;
  std::size_t embed_dim = 32;
  std::size_t num_layers = 2;
  std::size_t num_heads = 2;
  std::size_t patch_h = 8;
  std::size_t patch_w = 6;
  std::size_t frames = 8;
  std::size_t height = 64;
  std::size_t width = 48;
  std::size_t channels = 1;
  std::size_t mlp_hidden = 0;  // 0 selects 4 * embed_dim

  // Throws ConfigError on any violated invariant.
  void validate() const;

  std::size_t hidden() const { return mlp_hidden ? mlp_hidden : 4 * embed_dim; }
  std::size_t head_dim() const { return embed_dim / num_heads; }
  std::size_t patches_per_frame() const { return (height / patch_h) * (width / patch_w); }
  std::size_t patch_tokens() const { return frames * patches_per_frame(); }
  std::size_t patch_dim() const { return channels * patch_h * patch_w; }
  bool has_cls() const { return variant == Variant::DividedSpaceTime; }
  std::size_t token_count() const { return patch_tokens() + (has_cls() ? 1 : 0); }
  // Closed-form number of scalar parameters in EncoderWeights.
  std::size_t parameter_count() const;

  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

// Token matrix with (frame, spatial) addressing. Row 0 is the CLS token when
// present; patch (t, s) sits at row cls_offset + t * spatial + s.
struct TokenGrid {
  Tensor tokens;
  std::size_t frames = 0;
  std::size_t spatial = 0;
  bool has_cls = false;

  std::size_t cls_offset() const { return has_cls ? 1 : 0; }
  std::size_t row(std::size_t t, std::size_t s) const { return cls_offset() + t * spatial + s; }
  std::size_t size() const { return frames * spatial + cls_offset(); }
};

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;
};

struct AttentionParams {
  Tensor wq, wk, wv, wo;  // D x D; head i owns columns [i*D/h, (i+1)*D/h)
  std::size_t num_heads = 1;
};

struct LayerParams {
  AttentionParams attn;
  Tensor w_fuse;  // 2D x D, factorised variant only
  Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  LayerNormParams norm_attn;     // temporal (divided) or joint (factorised) attention input
  LayerNormParams norm_spatial;  // divided variant only
  LayerNormParams norm_mlp;
};

struct EmbeddingParams {
  Tensor patch_proj;  // (C*Ph*Pw) x D
  Tensor pos;         // token_count x D
  Tensor cls;         // D, divided variant only
};

struct EncoderWeights {
  EmbeddingParams embedding;
  std::vector<LayerParams> layers;

  static EncoderWeights init(const EncoderConfig& cfg, std::mt19937_64& rng);
  void collect(const std::string& prefix, ParamList& out) const;
};

// ---- attention instrumentation ----

enum class AttentionAxis { Temporal, Spatial, Fused };
std::string_view to_string(AttentionAxis a);

struct AttentionRecord {
  std::size_t layer = 0;
  std::size_t head = 0;
  AttentionAxis axis = AttentionAxis::Fused;
  std::size_t group = 0;
  std::vector<std::size_t> tokens;  // token rows of the group, in query/key order
  std::vector<float> weights;       // tokens.size() x tokens.size(), row = query
};

class AttentionRecorder {
 public:
  void add(AttentionRecord r) { records_.push_back(std::move(r)); }
  const std::vector<AttentionRecord>& records() const { return records_; }
  void clear() { records_.clear(); }

  // Token layout of the recorded pass.
  std::size_t token_count = 0;
  std::size_t frames = 0;
  std::size_t spatial = 0;
  bool has_cls = false;

 private:
  std::vector<AttentionRecord> records_;
};

struct AttentionTap {
  AttentionRecorder* recorder = nullptr;
  std::size_t layer = 0;
  AttentionAxis axis = AttentionAxis::Fused;
};

// ---- operations ----

using TokenGroups = std::vector<std::vector<std::size_t>>;

struct HeadRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

// [N*S, C*Ph*Pw]; frame-major rows, row-major patches within a frame, each row
// the patch flattened in (y, x, channel) order.
Tensor patchify(const ImageSequence& seq, const EncoderConfig& cfg);

// patches * W_embed (+ CLS row on top for the divided variant) + positional table.
TokenGrid embed(const Tensor& patches, const EmbeddingParams& emb, const EncoderConfig& cfg);

// softmax(Q K^T / sqrt(d_k)) V for arbitrary query/key row counts.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v);

// Per-head scaled dot-product attention restricted to token groups.
//
// q, k, v are [n, H*dh] projections with head i in columns [i*dh, (i+1)*dh).
// Returns [n, heads.size()*dh]. Within each group every member attends to
// every member. A token in several groups receives the mean of its outputs;
// a token in no group receives zeros. One fused tape entry.
Tensor grouped_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t num_heads, HeadRange heads,
                         const TokenGroups& groups, const AttentionTap& tap = {});

// Throws ShapeError unless `groups` partitions [0, n).
void validate_partition(const TokenGroups& groups, std::size_t n);

// Multi-head self-attention for heads in `heads`, each restricted to the
// partition `groups`, concatenated and projected by the matching rows of W^O.
Tensor multi_head(const Tensor& x, const AttentionParams& params, HeadRange heads, const TokenGroups& groups,
                  const AttentionTap& tap = {});

// Same-spatial-index groups (temporal axis) and same-frame groups (spatial axis).
// CLS is left out of temporal groups; with `cls_in_spatial` it joins every frame group.
TokenGroups temporal_groups(const TokenGrid& grid);
TokenGroups spatial_groups(const TokenGrid& grid, bool cls_in_spatial);

Tensor mlp_block(const Tensor& x, const LayerParams& p);

TokenGrid divided_layer(const TokenGrid& grid, const LayerParams& params, const AttentionTap& tap = {});
TokenGrid factorised_layer(const TokenGrid& grid, const LayerParams& params, const AttentionTap& tap = {});

// [1, D] sequence feature: CLS row (divided) or mean over tokens (factorised).
Tensor encode(const ImageSequence& seq, const EncoderWeights& weights, const EncoderConfig& cfg,
              AttentionRecorder* recorder = nullptr);

// Config + weights bundle for one sensor stream.
class Encoder {
 public:
  Encoder(EncoderConfig cfg, std::mt19937_64& rng);

  const EncoderConfig& config() const { return cfg_; }
  const EncoderWeights& weights() const { return weights_; }
  EncoderWeights& weights() { return weights_; }

  Tensor encode(const ImageSequence& seq, AttentionRecorder* recorder = nullptr) const {
    return stgrasp::encode(seq, weights_, cfg_, recorder);
  }
  void collect(const std::string& prefix, ParamList& out) const { weights_.collect(prefix, out); }

 private:
  EncoderConfig cfg_;
  EncoderWeights weights_;
};

}  // namespace stgrasp
