#pragma once

// Shared test helpers: finite-difference gradient checks and double-precision
// reference implementations used as independent oracles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <random>
#include <string>
#include <vector>

#include "stgrasp/encoder.hpp"
#include "stgrasp/tensor.hpp"

namespace stgrasp::testing {

// ---------------------------------------------------------------- gradient checks

struct GradCheckResult {
  double max_rel_error = 0.0;  // worst leaf, ||analytic - numeric|| / max(||analytic||, ||numeric||)
  std::size_t checks = 0;      // coordinates differentiated numerically
  std::string worst;
};

struct GradCheckOptions {
  double eps = 1e-3;
  // Leaves whose analytic and numeric gradients both have a smaller norm
  // count as agreeing (a leaf the output does not depend on).
  double zero_floor = 1e-9;
};

inline Tensor rand_leaf(Shape shape, std::mt19937_64& rng, float stddev = 1.0f) {
  return Tensor::randn(std::move(shape), stddev, rng, true);
}

// ---------------------------------------------------------------- double oracles

using Mat = std::vector<std::vector<double>>;

// Double-precision overrides for tensor values, keyed by storage address.
// Reference forwards read parameters through to_mat/to_vec, so the gradient
// checker can perturb a copy in float64 without touching the float32 tensor.
inline std::map<const float*, std::vector<double>>& shadow_values() {
  static thread_local std::map<const float*, std::vector<double>> m;
  return m;
}

inline std::vector<double> to_vec(const Tensor& t) {
  const auto d = t.data();
  const auto it = shadow_values().find(d.data());
  if (it != shadow_values().end()) return it->second;
  return {d.begin(), d.end()};
}

inline Mat to_mat(const Tensor& t) {
  const std::size_t r = t.dim(0), c = t.numel() / r;
  const auto d = to_vec(t);
  Mat m(r, std::vector<double>(c));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m[i][j] = d[i * c + j];
  return m;
}

inline Mat mm(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Mat madd(Mat a, const Mat& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
  return a;
}

inline Mat add_bias(Mat a, const std::vector<double>& b) {
  for (auto& row : a)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  return a;
}

inline Mat rows_of(const Mat& a, std::size_t begin, std::size_t end) { return Mat(a.begin() + begin, a.begin() + end); }

inline Mat layer_norm_ref(const Mat& x, const std::vector<double>& g, const std::vector<double>& b, double eps = 1e-5) {
  Mat y = x;
  for (auto& row : y) {
    double mu = 0.0, var = 0.0;
    for (double v : row) mu += v;
    mu /= row.size();
    for (double v : row) var += (v - mu) * (v - mu);
    var /= row.size();
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mu) / std::sqrt(var + eps) * g[j] + b[j];
  }
  return y;
}

inline double gelu_ref(double x) {
  return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * x * x * x)));
}

inline std::vector<double> softmax_ref(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += p[i] = std::isinf(z[i]) ? 0.0 : std::exp(z[i] - mx);
  for (double& v : p) v /= s;
  return p;
}

// Plain triple loop softmax(Q K^T / sqrt(d)) V.
inline Mat attention_ref(const Mat& q, const Mat& k, const Mat& v) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q[0].size()));
  Mat out(q.size(), std::vector<double>(v[0].size(), 0.0));
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<double> z(k.size());
    for (std::size_t j = 0; j < k.size(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < q[0].size(); ++c) s += q[i][c] * k[j][c];
      z[j] = s * scale;
    }
    const auto p = softmax_ref(z);
    for (std::size_t j = 0; j < k.size(); ++j)
      for (std::size_t c = 0; c < v[0].size(); ++c) out[i][c] += p[j] * v[j][c];
  }
  return out;
}

// Full attention over all n tokens with -inf logits between tokens that do not
// share the given group. A token in several groups averages its per-group
// outputs; a token in none gets zeros. Heads [h0, h1) of width dh.
inline Mat masked_heads_ref(const Mat& q, const Mat& k, const Mat& v, std::size_t dh, std::size_t h0, std::size_t h1,
                            const std::vector<std::vector<std::size_t>>& groups) {
  const std::size_t n = q.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat out(n, std::vector<double>((h1 - h0) * dh, 0.0));
  std::vector<int> count(n, 0);
  for (const auto& g : groups)
    for (std::size_t i : g) ++count[i];
  for (std::size_t h = h0; h < h1; ++h) {
    for (const auto& g : groups) {
      std::vector<char> in(n, 0);
      for (std::size_t i : g) in[i] = 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (!in[i]) continue;
        std::vector<double> z(n);
        for (std::size_t j = 0; j < n; ++j) {
          if (!in[j]) {
            z[j] = -INFINITY;
            continue;
          }
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += q[i][h * dh + c] * k[j][h * dh + c];
          z[j] = s * scale;
        }
        const auto p = softmax_ref(z);
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t c = 0; c < dh; ++c) out[i][(h - h0) * dh + c] += p[j] * v[j][h * dh + c] / count[i];
      }
    }
  }
  return out;
}

struct GridLayout {
  std::size_t frames, spatial;
  bool cls;
  std::size_t row(std::size_t t, std::size_t s) const { return (cls ? 1 : 0) + t * spatial + s; }
  std::vector<std::vector<std::size_t>> same_patch() const {
    std::vector<std::vector<std::size_t>> g;
    for (std::size_t s = 0; s < spatial; ++s) {
      g.emplace_back();
      for (std::size_t t = 0; t < frames; ++t) g.back().push_back(row(t, s));
    }
    return g;
  }
  std::vector<std::vector<std::size_t>> same_frame(bool with_cls) const {
    std::vector<std::vector<std::size_t>> g;
    for (std::size_t t = 0; t < frames; ++t) {
      g.emplace_back();
      if (with_cls && cls) g.back().push_back(0);
      for (std::size_t s = 0; s < spatial; ++s) g.back().push_back(row(t, s));
    }
    return g;
  }
};

inline Mat mlp_ref(const Mat& x, const LayerParams& p) {
  Mat h = add_bias(mm(x, to_mat(p.mlp_w1)), to_vec(p.mlp_b1));
  for (auto& row : h)
    for (double& v : row) v = gelu_ref(v);
  return add_bias(mm(h, to_mat(p.mlp_w2)), to_vec(p.mlp_b2));
}

inline Mat divided_layer_ref(const Mat& x, const LayerParams& p, const GridLayout& lay) {
  const std::size_t d = x[0].size(), h = p.attn.num_heads, dh = d / h;
  const Mat wq = to_mat(p.attn.wq), wk = to_mat(p.attn.wk), wv = to_mat(p.attn.wv), wo = to_mat(p.attn.wo);
  auto sublayer = [&](const Mat& in, const LayerNormParams& ln, const std::vector<std::vector<std::size_t>>& groups) {
    const Mat z = layer_norm_ref(in, to_vec(ln.gamma), to_vec(ln.beta));
    return mm(masked_heads_ref(mm(z, wq), mm(z, wk), mm(z, wv), dh, 0, h, groups), wo);
  };
  const Mat y1 = madd(x, sublayer(x, p.norm_attn, lay.same_patch()));
  const Mat y2 = madd(y1, sublayer(y1, p.norm_spatial, lay.same_frame(true)));
  return madd(y2, mlp_ref(layer_norm_ref(y2, to_vec(p.norm_mlp.gamma), to_vec(p.norm_mlp.beta)), p));
}

inline Mat factorised_layer_ref(const Mat& x, const LayerParams& p, const GridLayout& lay) {
  const std::size_t d = x[0].size(), h = p.attn.num_heads, dh = d / h;
  const Mat z = layer_norm_ref(x, to_vec(p.norm_attn.gamma), to_vec(p.norm_attn.beta));
  const Mat q = mm(z, to_mat(p.attn.wq)), k = mm(z, to_mat(p.attn.wk)), v = mm(z, to_mat(p.attn.wv));
  const Mat wo = to_mat(p.attn.wo);
  const Mat s = mm(masked_heads_ref(q, k, v, dh, 0, h / 2, lay.same_frame(false)), rows_of(wo, 0, (h / 2) * dh));
  const Mat t = mm(masked_heads_ref(q, k, v, dh, h / 2, h, lay.same_patch()), rows_of(wo, (h / 2) * dh, d));
  Mat cat(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    cat[i] = s[i];
    cat[i].insert(cat[i].end(), t[i].begin(), t[i].end());
  }
  const Mat y1 = madd(x, mm(cat, to_mat(p.w_fuse)));
  return madd(y1, mlp_ref(layer_norm_ref(y1, to_vec(p.norm_mlp.gamma), to_vec(p.norm_mlp.beta)), p));
}

inline double max_abs_diff(const Mat& a, const Tensor& b) {
  const Mat bm = to_mat(b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) m = std::max(m, std::abs(a[i][j] - bm[i][j]));
  return m;
}

// Layer weights with a wider spread than the production init so attention
// is far from uniform and LayerNorm affine terms are not trivial.
inline LayerParams random_layer(std::size_t d, std::size_t heads, std::size_t hidden, bool factorised, std::mt19937_64& rng,
                                bool requires_grad = false) {
  const float s = 1.0f / std::sqrt(static_cast<float>(d));
  auto w = [&](Shape sh, float sd) { return Tensor::randn(std::move(sh), sd, rng, requires_grad); };
  auto ln = [&] {
    LayerNormParams p;
    p.gamma = Tensor::uniform({d}, 0.5f, 1.5f, rng, requires_grad);
    p.beta = w({d}, 0.1f);
    return p;
  };
  LayerParams p;
  p.attn.num_heads = heads;
  p.attn.wq = w({d, d}, 2 * s);
  p.attn.wk = w({d, d}, 2 * s);
  p.attn.wv = w({d, d}, s);
  p.attn.wo = w({d, d}, s);
  if (factorised) p.w_fuse = w({2 * d, d}, s);
  p.mlp_w1 = w({d, hidden}, s);
  p.mlp_b1 = w({hidden}, 0.1f);
  p.mlp_w2 = w({hidden, d}, 1.0f / std::sqrt(static_cast<float>(hidden)));
  p.mlp_b2 = w({d}, 0.1f);
  p.norm_attn = ln();
  if (!factorised) p.norm_spatial = ln();
  p.norm_mlp = ln();
  return p;
}

inline std::vector<Tensor> layer_leaves(const LayerParams& p) {
  std::vector<Tensor> v = {p.attn.wq, p.attn.wk, p.attn.wv, p.attn.wo, p.mlp_w1, p.mlp_b1, p.mlp_w2, p.mlp_b2,
                           p.norm_attn.gamma, p.norm_attn.beta, p.norm_mlp.gamma, p.norm_mlp.beta};
  if (p.w_fuse.defined()) v.push_back(p.w_fuse);
  if (p.norm_spatial.gamma.defined()) {
    v.push_back(p.norm_spatial.gamma);
    v.push_back(p.norm_spatial.beta);
  }
  return v;
}

// ---------------------------------------------------------------- reference-forward gradient checks

// Reverse-mode gradients of the float32 graph `f` against central finite
// differences (step eps) of `ref`, a float64 implementation of the same
// function that reads its leaves through to_mat/to_vec. The scalar is
// L = sum(w * y) for a fixed random projection w. Every coordinate of every
// leaf is differentiated; the error per leaf is norm-wise relative.
inline GradCheckResult gradcheck(const std::function<Tensor()>& f, const std::function<Mat()>& ref,
                                 const std::vector<Tensor>& leaves, std::mt19937_64& rng, GradCheckOptions opt = {}) {
  Tensor y0 = f();
  std::normal_distribution<float> nd(0.0f, 1.0f);
  std::vector<float> w(y0.numel());
  for (float& v : w) v = nd(rng);
  const Tensor wt(y0.shape(), w);

  for (const Tensor& l : leaves) l.clear_grad();
  {
    Tape tape;
    tape.backward(sum(mul(f(), wt)));
  }
  auto loss_value = [&] {
    const Mat y = ref();
    double s = 0.0;
    std::size_t k = 0;
    for (const auto& row : y)
      for (double v : row) s += static_cast<double>(w.at(k++)) * v;
    if (k != w.size()) throw std::logic_error("gradcheck: reference output size differs from the graph output");
    return s;
  };

  GradCheckResult res;
  auto& shadow = shadow_values();
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    const Tensor& leaf = leaves[li];
    const float* key = leaf.data().data();
    const std::vector<double> base(leaf.data().begin(), leaf.data().end());
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    std::size_t worst_i = 0;
    double worst_d = -1.0, worst_a = 0.0, worst_n = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
      shadow[key] = base;
      shadow[key][i] = base[i] + opt.eps;
      const double lp = loss_value();
      shadow[key][i] = base[i] - opt.eps;
      const double lm = loss_value();
      shadow.erase(key);
      const double a = leaf.has_grad() ? leaf.grad()[i] : 0.0, n = (lp - lm) / (2.0 * opt.eps);
      ++res.checks;
      diff2 += (a - n) * (a - n);
      a2 += a * a;
      n2 += n * n;
      if (std::abs(a - n) > worst_d) worst_d = std::abs(a - n), worst_i = i, worst_a = a, worst_n = n;
    }
    const double scale = std::sqrt(std::max(a2, n2));
    if (scale < opt.zero_floor) continue;
    const double rel = std::sqrt(diff2) / scale;
    if (rel > res.max_rel_error || res.worst.empty()) {
      res.max_rel_error = std::max(rel, res.max_rel_error);
      if (rel >= res.max_rel_error)
        res.worst = "leaf" + std::to_string(li) + " rel=" + std::to_string(rel) + " worst[" + std::to_string(worst_i) +
                    "] analytic=" + std::to_string(worst_a) + " numeric=" + std::to_string(worst_n);
    }
  }
  for (const Tensor& l : leaves) l.clear_grad();
  return res;
}

// Double-precision encoder forward, mirroring patchify -> embed -> layers -> pool.
inline Mat encode_ref(const ImageSequence& seq, const EncoderWeights& w, const EncoderConfig& c) {
  const std::size_t gh = c.height / c.patch_h, gw = c.width / c.patch_w, S = gh * gw;
  const auto px = to_vec(seq.frames);
  Mat patches(c.frames * S, std::vector<double>(c.patch_dim()));
  for (std::size_t t = 0; t < c.frames; ++t)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t y = 0; y < c.patch_h; ++y)
        for (std::size_t x = 0; x < c.patch_w; ++x)
          for (std::size_t ch = 0; ch < c.channels; ++ch) {
            const std::size_t yy = (s / gw) * c.patch_h + y, xx = (s % gw) * c.patch_w + x;
            patches[t * S + s][(y * c.patch_w + x) * c.channels + ch] = px[((t * c.height + yy) * c.width + xx) * c.channels + ch];
          }
  Mat tok = mm(patches, to_mat(w.embedding.patch_proj));
  if (c.has_cls()) tok.insert(tok.begin(), to_vec(w.embedding.cls));
  tok = madd(tok, to_mat(w.embedding.pos));
  const GridLayout lay{c.frames, S, c.has_cls()};
  for (const auto& l : w.layers) tok = c.has_cls() ? divided_layer_ref(tok, l, lay) : factorised_layer_ref(tok, l, lay);
  if (c.has_cls()) return {tok[0]};
  std::vector<double> mean(tok[0].size(), 0.0);
  for (const auto& row : tok)
    for (std::size_t j = 0; j < row.size(); ++j) mean[j] += row[j] / tok.size();
  return {mean};
}

}  // namespace stgrasp::testing
