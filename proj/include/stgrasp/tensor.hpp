#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace stgrasp {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major float32 array with an optional gradient slot.
//
// Tensor is a handle: copies share storage. Tensors are created either as
// leaves (parameters, inputs) or as outputs of ops. An op records itself on
// the thread's active Tape only if at least one operand requires grad; the
// output then requires grad as well. Outside a tape nothing is recorded and
// outputs carry no gradient state, so they are safe to read concurrently.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<float> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);
  static Tensor randn(Shape shape, float stddev, std::mt19937_64& rng, bool requires_grad = false);
  static Tensor uniform(Shape shape, float lo, float hi, std::mt19937_64& rng, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const float> data() const;
  // Direct write access, used by optimizers, initializers and finite-difference probes.
  std::span<float> mutable_data();
  float item() const;
  float at(std::size_t row, std::size_t col) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);

  bool has_grad() const;
  std::span<const float> grad() const;
  // Allocates a zero-filled gradient buffer on first use.
  std::span<float> grad_buffer() const;
  void zero_grad() const;
  void clear_grad() const;

  // Fresh leaf with a copy of the data and no gradient state.
  Tensor detach() const;

  bool same_as(const Tensor& other) const noexcept { return impl_ == other.impl_; }

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// Ordered record of differentiable operations.
//
// Constructing a Tape makes it the active tape for the calling thread until it
// is destroyed; tapes nest. Entries are appended in execution order, so the
// list is topologically sorted by construction.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& output)>;

  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() noexcept;

  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(const Tensor& t) const noexcept;

  // Appends an entry. `fn` reads output.grad() and accumulates into the
  // inputs' grad_buffer() for those that require grad.
  void record(const Tensor& output, std::vector<Tensor> inputs, BackwardFn fn);

  // Populates dloss/dleaf for every leaf reachable from `loss`. Intermediate
  // gradients are reset on each call; leaf gradients accumulate across calls
  // until zeroed explicitly (Adam::zero_grad or Tensor::zero_grad).
  void backward(const Tensor& loss);

 private:
  struct Entry {
    Tensor output;
    std::vector<Tensor> inputs;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
  Tape* previous_ = nullptr;
};

void backward(const Tensor& loss, Tape& tape);

// True when an op over these operands must be recorded on the active tape.
bool grad_enabled_for(std::initializer_list<std::reference_wrapper<const Tensor>> operands);

// Records `fn` for `output` if any input requires grad and a tape is active.
// Marks the output as requiring grad in that case.
void record_op(Tensor& output, std::vector<Tensor> inputs, Tape::BackwardFn fn);

// ---- ops ----

Tensor matmul(const Tensor& a, const Tensor& b);
// Same-shape elementwise add, or broadcast of a rank-1 `b` over the last axis of `a`.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, float factor);
Tensor sum(const Tensor& x);
Tensor mean_over_axis(const Tensor& x, std::size_t axis, bool keepdims = false);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor concat_lastdim(const std::vector<Tensor>& parts);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor transpose(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor transpose(const Tensor& x);  // rank-2 swap
Tensor reshape(const Tensor& x, Shape shape);

Tensor softmax_lastdim(const Tensor& x);
inline constexpr float kLayerNormEps = 1e-5f;
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = kLayerNormEps);
// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
Tensor gelu(const Tensor& x);

bool all_finite(const Tensor& x);

}  // namespace stgrasp
