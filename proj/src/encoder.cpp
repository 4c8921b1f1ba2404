#include "stgrasp/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "kernels.hpp"
#include "stgrasp/error.hpp"

namespace stgrasp {

std::string_view to_string(Variant v) {
  return v == Variant::DividedSpaceTime ? "divided" : "factorised";
}

Variant parse_variant(std::string_view s) {
  if (s == "divided" || s == "timesformer") return Variant::DividedSpaceTime;
  if (s == "factorised" || s == "vivit") return Variant::FactorisedDotProduct;
  throw ConfigError("unknown encoder variant '" + std::string(s) + "' (expected divided|factorised)");
}

std::string_view to_string(AttentionAxis a) {
  switch (a) {
    case AttentionAxis::Temporal: return "temporal";
    case AttentionAxis::Spatial: return "spatial";
    case AttentionAxis::Fused: return "fused";
  }
  return "?";
}

void EncoderConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("encoder config: ") + name + " must be positive");
  };
  positive(embed_dim, "embed_dim");
  positive(num_heads, "num_heads");
  positive(patch_h, "patch_h");
  positive(patch_w, "patch_w");
  positive(frames, "frames");
  positive(height, "height");
  positive(width, "width");
  positive(channels, "channels");
  if (height % patch_h != 0 || width % patch_w != 0) {
    throw ConfigError("encoder config: image " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not divisible by patch " + std::to_string(patch_h) + "x" + std::to_string(patch_w));
  }
  if (embed_dim % num_heads != 0) {
    throw ConfigError("encoder config: embed_dim " + std::to_string(embed_dim) + " not divisible by num_heads " +
                      std::to_string(num_heads));
  }
  if (variant == Variant::FactorisedDotProduct && num_heads % 2 != 0) {
    throw ConfigError("encoder config: factorised attention needs an even head count, got " +
                      std::to_string(num_heads));
  }
}

std::size_t EncoderConfig::parameter_count() const {
  const std::size_t d = embed_dim, m = hidden();
  std::size_t n = patch_dim() * d + token_count() * d + (has_cls() ? d : 0);
  std::size_t per_layer = 4 * d * d + d * m + m + m * d + d;
  if (variant == Variant::FactorisedDotProduct) {
    per_layer += 2 * d * d + 2 * 2 * d;
  } else {
    per_layer += 3 * 2 * d;
  }
  return n + num_layers * per_layer;
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"variant", std::string(to_string(variant))},
          {"embed_dim", embed_dim},
          {"num_layers", num_layers},
          {"num_heads", num_heads},
          {"patch_h", patch_h},
          {"patch_w", patch_w},
          {"frames", frames},
          {"height", height},
          {"width", width},
          {"channels", channels},
          {"mlp_hidden", hidden()}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {"variant", "embed_dim", "num_layers", "num_heads",
                                                 "patch_h", "patch_w",   "frames",     "height",
                                                 "width",   "channels",  "mlp_hidden"};
  if (!j.is_object()) throw ConfigError("encoder config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("encoder config: unknown key '" + key + "'");
    }
  }
  EncoderConfig c;
  try {
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    auto read = [&](const char* key, std::size_t& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::size_t>();
    };
    read("embed_dim", c.embed_dim);
    read("num_layers", c.num_layers);
    read("num_heads", c.num_heads);
    read("patch_h", c.patch_h);
    read("patch_w", c.patch_w);
    read("frames", c.frames);
    read("height", c.height);
    read("width", c.width);
    read("channels", c.channels);
    read("mlp_hidden", c.mlp_hidden);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("encoder config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

constexpr float kInitStd = 0.02f;

LayerNormParams make_norm(std::size_t d) {
  return {Tensor::full({d}, 1.0f, true), Tensor::zeros({d}, true)};
}

void collect_norm(const std::string& name, const LayerNormParams& n, ParamList& out) {
  out.push_back({name + ".gamma", n.gamma});
  out.push_back({name + ".beta", n.beta});
}

}  // namespace

EncoderWeights EncoderWeights::init(const EncoderConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const std::size_t d = cfg.embed_dim, m = cfg.hidden();
  EncoderWeights w;
  w.embedding.patch_proj = Tensor::randn({cfg.patch_dim(), d}, kInitStd, rng, true);
  w.embedding.pos = Tensor::randn({cfg.token_count(), d}, kInitStd, rng, true);
  if (cfg.has_cls()) w.embedding.cls = Tensor::randn({d}, kInitStd, rng, true);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    LayerParams p;
    p.attn.num_heads = cfg.num_heads;
    p.attn.wq = Tensor::randn({d, d}, kInitStd, rng, true);
    p.attn.wk = Tensor::randn({d, d}, kInitStd, rng, true);
    p.attn.wv = Tensor::randn({d, d}, kInitStd, rng, true);
    p.attn.wo = Tensor::randn({d, d}, kInitStd, rng, true);
    if (cfg.variant == Variant::FactorisedDotProduct) p.w_fuse = Tensor::randn({2 * d, d}, kInitStd, rng, true);
    p.mlp_w1 = Tensor::randn({d, m}, kInitStd, rng, true);
    p.mlp_b1 = Tensor::zeros({m}, true);
    p.mlp_w2 = Tensor::randn({m, d}, kInitStd, rng, true);
    p.mlp_b2 = Tensor::zeros({d}, true);
    p.norm_attn = make_norm(d);
    if (cfg.variant == Variant::DividedSpaceTime) p.norm_spatial = make_norm(d);
    p.norm_mlp = make_norm(d);
    w.layers.push_back(std::move(p));
  }
  return w;
}

void EncoderWeights::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + "embed.patch_proj", embedding.patch_proj});
  out.push_back({prefix + "embed.pos", embedding.pos});
  if (embedding.cls.defined()) out.push_back({prefix + "embed.cls", embedding.cls});
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& p = layers[l];
    const std::string base = prefix + "layer" + std::to_string(l) + ".";
    out.push_back({base + "attn.wq", p.attn.wq});
    out.push_back({base + "attn.wk", p.attn.wk});
    out.push_back({base + "attn.wv", p.attn.wv});
    out.push_back({base + "attn.wo", p.attn.wo});
    if (p.w_fuse.defined()) out.push_back({base + "attn.w_fuse", p.w_fuse});
    out.push_back({base + "mlp.w1", p.mlp_w1});
    out.push_back({base + "mlp.b1", p.mlp_b1});
    out.push_back({base + "mlp.w2", p.mlp_w2});
    out.push_back({base + "mlp.b2", p.mlp_b2});
    collect_norm(base + "norm_attn", p.norm_attn, out);
    if (p.norm_spatial.gamma.defined()) collect_norm(base + "norm_spatial", p.norm_spatial, out);
    collect_norm(base + "norm_mlp", p.norm_mlp, out);
  }
}

// ---- patch embedding ----

Tensor patchify(const ImageSequence& seq, const EncoderConfig& cfg) {
  const Tensor& f = seq.frames;
  if (!f.defined() || f.rank() != 4 || f.dim(0) != cfg.frames || f.dim(1) != cfg.height || f.dim(2) != cfg.width ||
      f.dim(3) != cfg.channels) {
    throw ShapeError("patchify: sequence shape " + (f.defined() ? shape_str(f.shape()) : std::string("<undefined>")) +
                     " does not match config [" + std::to_string(cfg.frames) + "," + std::to_string(cfg.height) +
                     "," + std::to_string(cfg.width) + "," + std::to_string(cfg.channels) + "]");
  }
  const std::size_t ph = cfg.patch_h, pw = cfg.patch_w, c = cfg.channels;
  const std::size_t gy = cfg.height / ph, gx = cfg.width / pw;
  const std::size_t s = gy * gx, pd = cfg.patch_dim();
  std::vector<float> out(cfg.frames * s * pd);
  const auto src = f.data();
  for (std::size_t t = 0; t < cfg.frames; ++t) {
    for (std::size_t py = 0; py < gy; ++py) {
      for (std::size_t px = 0; px < gx; ++px) {
        float* row = out.data() + ((t * s) + py * gx + px) * pd;
        for (std::size_t dy = 0; dy < ph; ++dy) {
          const std::size_t y = py * ph + dy;
          const float* line = src.data() + ((t * cfg.height + y) * cfg.width + px * pw) * c;
          std::copy_n(line, pw * c, row + dy * pw * c);
        }
      }
    }
  }
  return Tensor({cfg.frames * s, pd}, std::move(out));
}

TokenGrid embed(const Tensor& patches, const EmbeddingParams& emb, const EncoderConfig& cfg) {
  if (patches.rank() != 2 || patches.dim(0) != cfg.patch_tokens() || patches.dim(1) != cfg.patch_dim()) {
    throw ShapeError("embed: patch matrix " + shape_str(patches.shape()) + " does not match config [" +
                     std::to_string(cfg.patch_tokens()) + "," + std::to_string(cfg.patch_dim()) + "]");
  }
  if (emb.pos.shape() != Shape{cfg.token_count(), cfg.embed_dim}) {
    throw ShapeError("embed: positional table " + shape_str(emb.pos.shape()) + " must have " +
                     std::to_string(cfg.token_count()) + " rows");
  }
  Tensor tokens = matmul(patches, emb.patch_proj);
  if (cfg.has_cls()) {
    if (!emb.cls.defined() || emb.cls.shape() != Shape{cfg.embed_dim}) throw ShapeError("embed: missing CLS vector");
    tokens = concat({reshape(emb.cls, {1, cfg.embed_dim}), tokens}, 0);
  }
  tokens = add(tokens, emb.pos);
  return TokenGrid{tokens, cfg.frames, cfg.patches_per_frame(), cfg.has_cls()};
}

// ---- attention ----

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) || k.dim(0) != v.dim(0)) {
    throw ShapeError("attention: incompatible Q " + shape_str(q.shape()) + ", K " + shape_str(k.shape()) + ", V " +
                     shape_str(v.shape()));
  }
  const float inv = 1.0f / std::sqrt(static_cast<float>(q.dim(1)));
  return matmul(softmax_lastdim(scale(matmul(q, transpose(k)), inv)), v);
}

namespace {

void validate_groups(const TokenGroups& groups, std::size_t n) {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& grp = groups[g];
    if (grp.empty()) throw ShapeError("token group " + std::to_string(g) + " is empty");
    std::vector<std::size_t> sorted = grp;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.back() >= n) throw ShapeError("token group " + std::to_string(g) + " indexes past " + std::to_string(n));
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ShapeError("token group " + std::to_string(g) + " repeats a token");
    }
  }
}

struct GroupCache {
  std::vector<float> probs;  // m x m per (group, head)
};

}  // namespace

void validate_partition(const TokenGroups& groups, std::size_t n) {
  validate_groups(groups, n);
  std::vector<int> seen(n, 0);
  for (const auto& grp : groups) {
    for (auto i : grp) ++seen[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i] != 1) {
      throw ShapeError("token groups do not partition the tokens: token " + std::to_string(i) + " appears " +
                       std::to_string(seen[i]) + " times");
    }
  }
}

Tensor grouped_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t num_heads, HeadRange heads,
                         const TokenGroups& groups, const AttentionTap& tap) {
  if (q.rank() != 2 || q.shape() != k.shape() || q.shape() != v.shape()) {
    throw ShapeError("grouped_attention: Q/K/V must share a rank-2 shape, got " + shape_str(q.shape()) + ", " +
                     shape_str(k.shape()) + ", " + shape_str(v.shape()));
  }
  const std::size_t n = q.dim(0), width = q.dim(1);
  if (num_heads == 0 || width % num_heads != 0 || heads.begin >= heads.end || heads.end > num_heads) {
    throw ShapeError("grouped_attention: invalid head range");
  }
  validate_groups(groups, n);
  const std::size_t dh = width / num_heads, nh = heads.size(), out_w = nh * dh;
  const float inv = 1.0f / std::sqrt(static_cast<float>(dh));

  std::vector<float> share(n, 0.0f);
  for (const auto& grp : groups) {
    for (auto i : grp) share[i] += 1.0f;
  }
  for (auto& s : share) s = s > 0.0f ? 1.0f / s : 0.0f;

  const auto qd = q.data(), kd = k.data(), vd = v.data();
  std::vector<float> out(n * out_w, 0.0f);
  std::vector<float> probs;  // all (group, head) blocks back to back
  std::vector<std::size_t> block_offset;
  std::vector<float> qg, kg, vg, og;

  auto gather = [&](std::span<const float> src, const std::vector<std::size_t>& idx, std::size_t col,
                    std::vector<float>& dst) {
    dst.resize(idx.size() * dh);
    for (std::size_t r = 0; r < idx.size(); ++r) std::copy_n(src.data() + idx[r] * width + col, dh, dst.data() + r * dh);
  };

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& idx = groups[g];
    const std::size_t m = idx.size();
    for (std::size_t h = heads.begin; h < heads.end; ++h) {
      const std::size_t col = h * dh;
      gather(qd, idx, col, qg);
      gather(kd, idx, col, kg);
      gather(vd, idx, col, vg);
      block_offset.push_back(probs.size());
      probs.resize(probs.size() + m * m, 0.0f);
      float* p = probs.data() + block_offset.back();
      kernels::gemm_nt(qg.data(), kg.data(), p, m, dh, m);
      for (std::size_t r = 0; r < m; ++r) {
        float* row = p + r * m;
        float mx = row[0] * inv;
        for (std::size_t c = 0; c < m; ++c) {
          row[c] *= inv;
          mx = std::max(mx, row[c]);
        }
        float z = 0.0f;
        for (std::size_t c = 0; c < m; ++c) {
          row[c] = std::exp(row[c] - mx);
          z += row[c];
        }
        const float rz = 1.0f / z;
        for (std::size_t c = 0; c < m; ++c) row[c] *= rz;
      }
      og.assign(m * dh, 0.0f);
      kernels::gemm_nn(p, vg.data(), og.data(), m, m, dh);
      for (std::size_t r = 0; r < m; ++r) {
        kernels::axpy(share[idx[r]], og.data() + r * dh, out.data() + idx[r] * out_w + (h - heads.begin) * dh, dh);
      }
      if (tap.recorder) {
        tap.recorder->add(AttentionRecord{tap.layer, h, tap.axis, g, idx, std::vector<float>(p, p + m * m)});
      }
    }
  }

  Tensor result({n, out_w}, std::move(out));
  record_op(result, {q, k, v},
            [q, k, v, groups, heads, dh, width, out_w, inv, share = std::move(share), probs = std::move(probs),
             block_offset = std::move(block_offset)](const Tensor& o) {
              const auto g = o.grad();
              const auto qd = q.data(), kd = k.data(), vd = v.data();
              std::span<float> gq, gk, gv;
              if (q.requires_grad()) gq = q.grad_buffer();
              if (k.requires_grad()) gk = k.grad_buffer();
              if (v.requires_grad()) gv = v.grad_buffer();
              std::vector<float> qg, kg, vg, dog, dp, ds, dq, dk, dv;
              auto gather = [&](std::span<const float> src, const std::vector<std::size_t>& idx, std::size_t col,
                                std::vector<float>& dst) {
                dst.resize(idx.size() * dh);
                for (std::size_t r = 0; r < idx.size(); ++r) {
                  std::copy_n(src.data() + idx[r] * width + col, dh, dst.data() + r * dh);
                }
              };
              auto scatter = [&](std::span<float> dst, const std::vector<std::size_t>& idx, std::size_t col,
                                 const std::vector<float>& src) {
                if (dst.empty()) return;
                for (std::size_t r = 0; r < idx.size(); ++r) {
                  kernels::axpy(1.0f, src.data() + r * dh, dst.data() + idx[r] * width + col, dh);
                }
              };
              std::size_t block = 0;
              for (const auto& idx : groups) {
                const std::size_t m = idx.size();
                for (std::size_t h = heads.begin; h < heads.end; ++h, ++block) {
                  const std::size_t col = h * dh;
                  const float* p = probs.data() + block_offset[block];
                  dog.assign(m * dh, 0.0f);
                  for (std::size_t r = 0; r < m; ++r) {
                    kernels::axpy(share[idx[r]], g.data() + idx[r] * out_w + (h - heads.begin) * dh,
                                  dog.data() + r * dh, dh);
                  }
                  gather(qd, idx, col, qg);
                  gather(kd, idx, col, kg);
                  gather(vd, idx, col, vg);
                  // dV = P^T dO
                  dv.assign(m * dh, 0.0f);
                  kernels::gemm_tn(p, dog.data(), dv.data(), m, m, dh);
                  // dP = dO V^T; dS = P * (dP - rowdot(dP, P)) / sqrt(dh)
                  dp.assign(m * m, 0.0f);
                  kernels::gemm_nt(dog.data(), vg.data(), dp.data(), m, dh, m);
                  ds.resize(m * m);
                  for (std::size_t r = 0; r < m; ++r) {
                    const float dot = kernels::dot(dp.data() + r * m, p + r * m, m);
                    for (std::size_t c = 0; c < m; ++c) ds[r * m + c] = p[r * m + c] * (dp[r * m + c] - dot) * inv;
                  }
                  dq.assign(m * dh, 0.0f);
                  kernels::gemm_nn(ds.data(), kg.data(), dq.data(), m, m, dh);
                  dk.assign(m * dh, 0.0f);
                  kernels::gemm_tn(ds.data(), qg.data(), dk.data(), m, m, dh);
                  scatter(gq, idx, col, dq);
                  scatter(gk, idx, col, dk);
                  scatter(gv, idx, col, dv);
                }
              }
            });
  return result;
}

Tensor multi_head(const Tensor& x, const AttentionParams& params, HeadRange heads, const TokenGroups& groups,
                  const AttentionTap& tap) {
  if (x.rank() != 2 || x.dim(1) != params.wq.dim(0)) {
    throw ShapeError("multi_head: input " + shape_str(x.shape()) + " does not match W^Q " + shape_str(params.wq.shape()));
  }
  validate_partition(groups, x.dim(0));
  const Tensor q = matmul(x, params.wq), k = matmul(x, params.wk), v = matmul(x, params.wv);
  const Tensor heads_out = grouped_attention(q, k, v, params.num_heads, heads, groups, tap);
  const std::size_t dh = q.dim(1) / params.num_heads;
  const Tensor wo = heads.size() == params.num_heads ? params.wo : slice(params.wo, 0, heads.begin * dh, heads.end * dh);
  return matmul(heads_out, wo);
}

TokenGroups temporal_groups(const TokenGrid& grid) {
  TokenGroups groups(grid.spatial);
  for (std::size_t s = 0; s < grid.spatial; ++s) {
    for (std::size_t t = 0; t < grid.frames; ++t) groups[s].push_back(grid.row(t, s));
  }
  return groups;
}

TokenGroups spatial_groups(const TokenGrid& grid, bool cls_in_spatial) {
  TokenGroups groups(grid.frames);
  for (std::size_t t = 0; t < grid.frames; ++t) {
    if (cls_in_spatial && grid.has_cls) groups[t].push_back(0);
    for (std::size_t s = 0; s < grid.spatial; ++s) groups[t].push_back(grid.row(t, s));
  }
  return groups;
}

Tensor mlp_block(const Tensor& x, const LayerParams& p) {
  return add(matmul(gelu(add(matmul(x, p.mlp_w1), p.mlp_b1)), p.mlp_w2), p.mlp_b2);
}

namespace {

Tensor self_attention(const Tensor& x, const AttentionParams& a, const TokenGroups& groups, const AttentionTap& tap) {
  const Tensor q = matmul(x, a.wq), k = matmul(x, a.wk), v = matmul(x, a.wv);
  return matmul(grouped_attention(q, k, v, a.num_heads, {0, a.num_heads}, groups, tap), a.wo);
}

}  // namespace

TokenGrid divided_layer(const TokenGrid& grid, const LayerParams& params, const AttentionTap& tap) {
  if (!params.norm_spatial.gamma.defined()) throw ShapeError("divided_layer: parameters lack the spatial LayerNorm");
  TokenGrid out = grid;
  AttentionTap t_tap = tap, s_tap = tap;
  t_tap.axis = AttentionAxis::Temporal;
  s_tap.axis = AttentionAxis::Spatial;

  const Tensor& x = grid.tokens;
  const Tensor y1 = add(x, self_attention(layer_norm(x, params.norm_attn.gamma, params.norm_attn.beta), params.attn,
                                          temporal_groups(grid), t_tap));
  const Tensor y2 = add(y1, self_attention(layer_norm(y1, params.norm_spatial.gamma, params.norm_spatial.beta),
                                           params.attn, spatial_groups(grid, true), s_tap));
  out.tokens = add(y2, mlp_block(layer_norm(y2, params.norm_mlp.gamma, params.norm_mlp.beta), params));
  return out;
}

TokenGrid factorised_layer(const TokenGrid& grid, const LayerParams& params, const AttentionTap& tap) {
  const std::size_t h = params.attn.num_heads;
  if (h % 2 != 0) throw ConfigError("factorised_layer: head count must be even, got " + std::to_string(h));
  if (!params.w_fuse.defined()) throw ShapeError("factorised_layer: parameters lack W^fuse");
  TokenGrid out = grid;
  AttentionTap s_tap = tap, t_tap = tap;
  s_tap.axis = AttentionAxis::Spatial;
  t_tap.axis = AttentionAxis::Temporal;

  const Tensor& x = grid.tokens;
  const std::size_t d = x.dim(1), dh = d / h;
  const Tensor xn = layer_norm(x, params.norm_attn.gamma, params.norm_attn.beta);
  const Tensor q = matmul(xn, params.attn.wq), k = matmul(xn, params.attn.wk), v = matmul(xn, params.attn.wv);
  const Tensor spatial = grouped_attention(q, k, v, h, {0, h / 2}, spatial_groups(grid, false), s_tap);
  const Tensor temporal = grouped_attention(q, k, v, h, {h / 2, h}, temporal_groups(grid), t_tap);
  const Tensor spatial_out = matmul(spatial, slice(params.attn.wo, 0, 0, (h / 2) * dh));
  const Tensor temporal_out = matmul(temporal, slice(params.attn.wo, 0, (h / 2) * dh, d));
  const Tensor fused = matmul(concat_lastdim({spatial_out, temporal_out}), params.w_fuse);
  const Tensor y1 = add(x, fused);
  out.tokens = add(y1, mlp_block(layer_norm(y1, params.norm_mlp.gamma, params.norm_mlp.beta), params));
  return out;
}

Tensor encode(const ImageSequence& seq, const EncoderWeights& weights, const EncoderConfig& cfg,
              AttentionRecorder* recorder) {
  if (weights.layers.size() != cfg.num_layers) throw ShapeError("encode: weights do not match num_layers");
  TokenGrid grid = embed(patchify(seq, cfg), weights.embedding, cfg);
  if (recorder) {
    recorder->token_count = grid.size();
    recorder->frames = grid.frames;
    recorder->spatial = grid.spatial;
    recorder->has_cls = grid.has_cls;
  }
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    const AttentionTap tap{recorder, l, AttentionAxis::Fused};
    grid = cfg.variant == Variant::DividedSpaceTime ? divided_layer(grid, weights.layers[l], tap)
                                                    : factorised_layer(grid, weights.layers[l], tap);
  }
  if (cfg.variant == Variant::DividedSpaceTime) return slice(grid.tokens, 0, 0, 1);
  return mean_over_axis(grid.tokens, 0, true);
}

Encoder::Encoder(EncoderConfig cfg, std::mt19937_64& rng) : cfg_(std::move(cfg)), weights_(EncoderWeights::init(cfg_, rng)) {}

}  // namespace stgrasp
