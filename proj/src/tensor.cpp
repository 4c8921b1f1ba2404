#include "stgrasp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kernels.hpp"
#include "stgrasp/error.hpp"

namespace stgrasp {

struct Tensor::Impl {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;
  bool requires_grad = false;
};

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<float> data, bool requires_grad) : impl_(std::make_shared<Impl>()) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("tensor shape " + shape_str(shape) + " does not match data length " +
                     std::to_string(data.size()));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0f, requires_grad); }

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<float>(n, value), requires_grad);
}

Tensor Tensor::scalar(float value, bool requires_grad) { return Tensor({}, {value}, requires_grad); }

Tensor Tensor::randn(Shape shape, float stddev, std::mt19937_64& rng, bool requires_grad) {
  std::normal_distribution<float> dist(0.0f, stddev);
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::uniform(Shape shape, float lo, float hi, std::mt19937_64& rng, bool requires_grad) {
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

namespace {
void require_defined(const std::shared_ptr<void>& p) {
  if (!p) throw UsageError("operation on an undefined tensor");
}
}  // namespace

const Shape& Tensor::shape() const {
  require_defined(impl_);
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape().size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
  return impl_->shape[axis];
}

std::size_t Tensor::numel() const {
  require_defined(impl_);
  return impl_->data.size();
}

std::span<const float> Tensor::data() const {
  require_defined(impl_);
  return impl_->data;
}

std::span<float> Tensor::mutable_data() {
  require_defined(impl_);
  return impl_->data;
}

float Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

float Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw ShapeError("at(row, col) requires rank 2, got " + shape_str(shape()));
  return impl_->data.at(row * impl_->shape[1] + col);
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool on) {
  require_defined(impl_);
  impl_->requires_grad = on;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const float> Tensor::grad() const {
  require_defined(impl_);
  return impl_->grad;
}

std::span<float> Tensor::grad_buffer() const {
  require_defined(impl_);
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
  return impl_->grad;
}

void Tensor::zero_grad() const {
  if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

void Tensor::clear_grad() const {
  if (impl_) {
    impl_->grad.clear();
    impl_->grad.shrink_to_fit();
  }
}

Tensor Tensor::detach() const {
  require_defined(impl_);
  return Tensor(impl_->shape, impl_->data, false);
}

// ---- tape ----

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() : previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() {
  if (g_active_tape == this) g_active_tape = previous_;
}

Tape* Tape::active() noexcept { return g_active_tape; }

bool Tape::contains(const Tensor& t) const noexcept {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.output.same_as(t); });
}

void Tape::record(const Tensor& output, std::vector<Tensor> inputs, BackwardFn fn) {
  entries_.push_back(Entry{output, std::move(inputs), std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined()) throw UsageError("backward: undefined loss tensor");
  std::size_t end = entries_.size();
  while (end > 0 && !entries_[end - 1].output.same_as(loss)) --end;
  if (end == 0) throw UsageError("backward: loss tensor was not produced on this tape");
  if (loss.numel() != 1) throw UsageError("backward: loss must be a scalar, got shape " + shape_str(loss.shape()));

  for (std::size_t i = 0; i < end; ++i) entries_[i].output.clear_grad();
  Tensor seed = loss;
  seed.grad_buffer()[0] = 1.0f;
  for (std::size_t i = end; i-- > 0;) {
    Entry& e = entries_[i];
    if (e.output.has_grad()) e.fn(e.output);
  }
}

void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

bool grad_enabled_for(std::initializer_list<std::reference_wrapper<const Tensor>> operands) {
  if (!Tape::active()) return false;
  return std::any_of(operands.begin(), operands.end(), [](const Tensor& t) { return t.requires_grad(); });
}

void record_op(Tensor& output, std::vector<Tensor> inputs, Tape::BackwardFn fn) {
  Tape* tape = Tape::active();
  if (!tape) return;
  if (std::none_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); })) return;
  output.set_requires_grad(true);
  tape->record(output, std::move(inputs), std::move(fn));
}

// ---- ops ----

namespace {

struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

std::string pair_str(const Tensor& a, const Tensor& b) { return shape_str(a.shape()) + " vs " + shape_str(b.shape()); }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: shape mismatch " + pair_str(a, b));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n});
  kernels::gemm_nn(a.data().data(), b.data().data(), out.mutable_data().data(), m, k, n);
  record_op(out, {a, b}, [a, b, m, k, n](const Tensor& o) {
    const float* g = o.grad().data();
    if (a.requires_grad()) kernels::gemm_nt(g, b.data().data(), a.grad_buffer().data(), m, n, k);
    if (b.requires_grad()) kernels::gemm_tn(a.data().data(), g, b.grad_buffer().data(), m, k, n);
  });
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  const bool broadcast = a.shape() != b.shape();
  if (broadcast && !(b.rank() == 1 && a.rank() >= 1 && b.dim(0) == a.shape().back())) {
    throw ShapeError("add: shape mismatch " + pair_str(a, b));
  }
  std::vector<float> v(a.data().begin(), a.data().end());
  const auto bd = b.data();
  const std::size_t width = bd.size();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += bd[i % width];
  Tensor out(a.shape(), std::move(v));
  record_op(out, {a, b}, [a, b, width](const Tensor& o) {
    const auto g = o.grad();
    if (a.requires_grad()) {
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % width] += g[i];
    }
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("sub: shape mismatch " + pair_str(a, b));
  std::vector<float> v(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = ad[i] - bd[i];
  Tensor out(a.shape(), std::move(v));
  record_op(out, {a, b}, [a, b](const Tensor& o) {
    const auto g = o.grad();
    if (a.requires_grad()) {
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("mul: shape mismatch " + pair_str(a, b));
  std::vector<float> v(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = ad[i] * bd[i];
  Tensor out(a.shape(), std::move(v));
  record_op(out, {a, b}, [a, b](const Tensor& o) {
    const auto g = o.grad();
    if (a.requires_grad()) {
      auto ga = a.grad_buffer();
      const auto bd = b.data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bd[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad_buffer();
      const auto ad = a.data();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ad[i];
    }
  });
  return out;
}

Tensor scale(const Tensor& x, float factor) {
  std::vector<float> v(x.data().begin(), x.data().end());
  for (auto& e : v) e *= factor;
  Tensor out(x.shape(), std::move(v));
  record_op(out, {x}, [x, factor](const Tensor& o) {
    const auto g = o.grad();
    auto gx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
  });
  return out;
}

Tensor sum(const Tensor& x) {
  float acc = 0.0f;
  for (float e : x.data()) acc += e;
  Tensor out = Tensor::scalar(acc);
  record_op(out, {x}, [x](const Tensor& o) {
    const float g = o.grad()[0];
    for (auto& e : x.grad_buffer()) e += g;
  });
  return out;
}

Tensor mean_over_axis(const Tensor& x, std::size_t axis, bool keepdims) {
  const Shape& s = x.shape();
  if (axis >= s.size()) throw ShapeError("mean_over_axis: axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  const auto sp = split_at(s, axis);
  std::vector<float> v(sp.outer * sp.inner, 0.0f);
  const auto xd = x.data();
  const float inv = 1.0f / static_cast<float>(sp.len);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    float* dst = v.data() + o * sp.inner;
    for (std::size_t l = 0; l < sp.len; ++l) {
      const float* src = xd.data() + (o * sp.len + l) * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
    }
    for (std::size_t i = 0; i < sp.inner; ++i) dst[i] *= inv;
  }
  Shape os = s;
  if (keepdims) {
    os[axis] = 1;
  } else {
    os.erase(os.begin() + static_cast<std::ptrdiff_t>(axis));
  }
  Tensor out(std::move(os), std::move(v));
  record_op(out, {x}, [x, sp, inv](const Tensor& o) {
    const auto g = o.grad();
    auto gx = x.grad_buffer();
    for (std::size_t oo = 0; oo < sp.outer; ++oo) {
      for (std::size_t l = 0; l < sp.len; ++l) {
        float* dst = gx.data() + (oo * sp.len + l) * sp.inner;
        for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += g[oo * sp.inner + i] * inv;
      }
    }
  });
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + shape_str(first));
  Shape os = first;
  os[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == first[i];
    if (!ok) throw ShapeError("concat: incompatible shapes " + shape_str(first) + " and " + shape_str(s));
    os[axis] += s[axis];
  }
  const auto sp = split_at(os, axis);
  std::vector<float> v(shape_numel(os));
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t block = p.dim(axis) * sp.inner;
    const auto pd = p.data();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      std::copy_n(pd.data() + o * block, block, v.data() + o * sp.len * sp.inner + off * sp.inner);
    }
    off += p.dim(axis);
  }
  Tensor out(std::move(os), std::move(v));
  record_op(out, parts, [parts, offsets, sp, axis](const Tensor& o) {
    const auto g = o.grad();
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const Tensor& p = parts[k];
      if (!p.requires_grad()) continue;
      const std::size_t block = p.dim(axis) * sp.inner;
      auto gp = p.grad_buffer();
      for (std::size_t oo = 0; oo < sp.outer; ++oo) {
        const float* src = g.data() + oo * sp.len * sp.inner + offsets[k] * sp.inner;
        float* dst = gp.data() + oo * block;
        for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
      }
    }
  });
  return out;
}

Tensor concat_lastdim(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_lastdim: no inputs");
  if (parts.front().rank() == 0) throw ShapeError("concat_lastdim: scalar input");
  return concat(parts, parts.front().rank() - 1);
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& s = x.shape();
  if (axis >= s.size() || begin >= end || end > s[axis]) {
    throw ShapeError("slice: invalid range [" + std::to_string(begin) + "," + std::to_string(end) + ") on axis " +
                     std::to_string(axis) + " of " + shape_str(s));
  }
  const auto sp = split_at(s, axis);
  const std::size_t len = end - begin;
  Shape os = s;
  os[axis] = len;
  std::vector<float> v(sp.outer * len * sp.inner);
  const auto xd = x.data();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    std::copy_n(xd.data() + (o * sp.len + begin) * sp.inner, len * sp.inner, v.data() + o * len * sp.inner);
  }
  Tensor out(std::move(os), std::move(v));
  record_op(out, {x}, [x, sp, begin, len](const Tensor& o) {
    const auto g = o.grad();
    auto gx = x.grad_buffer();
    for (std::size_t oo = 0; oo < sp.outer; ++oo) {
      const float* src = g.data() + oo * len * sp.inner;
      float* dst = gx.data() + (oo * sp.len + begin) * sp.inner;
      for (std::size_t i = 0; i < len * sp.inner; ++i) dst[i] += src[i];
    }
  });
  return out;
}

Tensor transpose(const Tensor& x, const std::vector<std::size_t>& axes) {
  const Shape& s = x.shape();
  const std::size_t r = s.size();
  std::vector<bool> seen(r, false);
  bool ok = axes.size() == r;
  for (std::size_t i = 0; ok && i < r; ++i) {
    ok = axes[i] < r && !seen[axes[i]];
    if (ok) seen[axes[i]] = true;
  }
  if (!ok) throw ShapeError("transpose: axes are not a permutation of rank " + std::to_string(r));

  Shape os(r);
  for (std::size_t i = 0; i < r; ++i) os[i] = s[axes[i]];
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) in_strides[i - 1] = in_strides[i] * s[i];

  // source[k] = flat input index read by flat output index k
  const std::size_t n = x.numel();
  std::vector<std::size_t> source(n);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < r; ++i) src += idx[i] * in_strides[axes[i]];
    source[k] = src;
    for (std::size_t i = r; i-- > 0;) {
      if (++idx[i] < os[i]) break;
      idx[i] = 0;
    }
  }
  std::vector<float> v(n);
  const auto xd = x.data();
  for (std::size_t k = 0; k < n; ++k) v[k] = xd[source[k]];
  Tensor out(std::move(os), std::move(v));
  record_op(out, {x}, [x, source = std::move(source)](const Tensor& o) {
    const auto g = o.grad();
    auto gx = x.grad_buffer();
    for (std::size_t k = 0; k < g.size(); ++k) gx[source[k]] += g[k];
  });
  return out;
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("transpose: expected rank 2, got " + shape_str(x.shape()));
  return transpose(x, {1, 0});
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  Tensor out(std::move(shape), std::vector<float>(x.data().begin(), x.data().end()));
  record_op(out, {x}, [x](const Tensor& o) {
    const auto g = o.grad();
    auto gx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
  return out;
}

Tensor softmax_lastdim(const Tensor& x) {
  if (x.rank() == 0) throw ShapeError("softmax_lastdim: scalar input");
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.numel() / width;
  std::vector<float> v(x.numel());
  const auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const float* in = xd.data() + r * width;
    float* y = v.data() + r * width;
    const float mx = *std::max_element(in, in + width);
    float z = 0.0f;
    for (std::size_t j = 0; j < width; ++j) {
      y[j] = std::exp(in[j] - mx);
      z += y[j];
    }
    const float inv = 1.0f / z;
    for (std::size_t j = 0; j < width; ++j) y[j] *= inv;
  }
  Tensor out(x.shape(), std::move(v));
  record_op(out, {x}, [x, width, rows](const Tensor& o) {
    const auto g = o.grad();
    const auto y = o.data();
    auto gx = x.grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * width;
      const float dot = kernels::dot(g.data() + base, y.data() + base, width);
      for (std::size_t j = 0; j < width; ++j) gx[base + j] += y[base + j] * (g[base + j] - dot);
    }
  });
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  if (x.rank() == 0) throw ShapeError("layer_norm: scalar input");
  const std::size_t width = x.shape().back();
  if (gamma.shape() != Shape{width} || beta.shape() != Shape{width}) {
    throw ShapeError("layer_norm: gamma/beta " + pair_str(gamma, beta) + " must have length " + std::to_string(width));
  }
  const std::size_t rows = x.numel() / width;
  std::vector<float> xhat(x.numel()), rstd(rows), v(x.numel());
  const auto xd = x.data(), gd = gamma.data(), bd = beta.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const float* in = xd.data() + r * width;
    double mean = 0.0;
    for (std::size_t j = 0; j < width; ++j) mean += in[j];
    mean /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) var += (in[j] - mean) * (in[j] - mean);
    var /= static_cast<double>(width);
    const double rs = 1.0 / std::sqrt(var + eps);
    rstd[r] = static_cast<float>(rs);
    for (std::size_t j = 0; j < width; ++j) {
      const float h = static_cast<float>((in[j] - mean) * rs);
      xhat[r * width + j] = h;
      v[r * width + j] = gd[j] * h + bd[j];
    }
  }
  Tensor out(x.shape(), std::move(v));
  record_op(out, {x, gamma, beta},
            [x, gamma, beta, width, rows, xhat = std::move(xhat), rstd = std::move(rstd)](const Tensor& o) {
              const auto g = o.grad();
              const auto gd = gamma.data();
              if (gamma.requires_grad()) {
                auto gg = gamma.grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) gg[i % width] += g[i] * xhat[i];
              }
              if (beta.requires_grad()) {
                auto gb = beta.grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i % width] += g[i];
              }
              if (x.requires_grad()) {
                auto gx = x.grad_buffer();
                std::vector<float> gh(width);
                for (std::size_t r = 0; r < rows; ++r) {
                  const std::size_t base = r * width;
                  double mean_gh = 0.0, mean_ghx = 0.0;
                  for (std::size_t j = 0; j < width; ++j) {
                    gh[j] = g[base + j] * gd[j];
                    mean_gh += gh[j];
                    mean_ghx += static_cast<double>(gh[j]) * xhat[base + j];
                  }
                  mean_gh /= static_cast<double>(width);
                  mean_ghx /= static_cast<double>(width);
                  for (std::size_t j = 0; j < width; ++j) {
                    gx[base + j] += static_cast<float>(rstd[r] * (gh[j] - mean_gh - xhat[base + j] * mean_ghx));
                  }
                }
              }
            });
  return out;
}

namespace {
constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2/pi)
constexpr float kGeluK = 0.044715f;
}  // namespace

Tensor gelu(const Tensor& x) {
  std::vector<float> v(x.numel());
  const auto xd = x.data();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const float z = xd[i];
    v[i] = 0.5f * z * (1.0f + std::tanh(kGeluC * (z + kGeluK * z * z * z)));
  }
  Tensor out(x.shape(), std::move(v));
  record_op(out, {x}, [x](const Tensor& o) {
    const auto g = o.grad();
    const auto xd = x.data();
    auto gx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const float z = xd[i];
      const float t = std::tanh(kGeluC * (z + kGeluK * z * z * z));
      const float d = 0.5f * (1.0f + t) + 0.5f * z * (1.0f - t * t) * kGeluC * (1.0f + 3.0f * kGeluK * z * z);
      gx[i] += g[i] * d;
    }
  });
  return out;
}

bool all_finite(const Tensor& x) {
  const auto d = x.data();
  return std::all_of(d.begin(), d.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace stgrasp
