#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "evc/tensor.hpp"

namespace evc::ad {

enum class OpKind {
  Variable,
  Constant,
  Add,
  Sub,
  Mul,
  Scale,
  AddScalar,
  Matmul,
  Conv1d,
  ConvTranspose1d,
  AddRowBias,
  LeakyRelu,
  Tanh,
  Exp,
  Log,
  Sum,
  Mean,
  Square,
  Concat,
  Reshape,
  SliceCols,
};

std::string_view to_string(OpKind kind);

class Tape;

/// Handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

struct BackwardContext {
  const Tensor& grad_out;
  const Tensor& value_out;
  std::vector<const Tensor*> inputs;
  std::vector<Tensor*> input_grads;  // nullptr where no gradient is needed
};

using BackwardFn = std::function<void(BackwardContext&)>;

/// Append-only record of a computation. Inputs of node k always have ids
/// below k, so a reverse sweep is a valid topological order. Confined to one
/// thread. Values and gradients keep their addresses while the tape grows.
class Tape {
 public:
  Var variable(Tensor value);
  Var constant(Tensor value);

  /// Records an op node; used by the op implementations.
  Var record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward);

  /// Reverse sweep from a scalar loss. Gradients of an earlier sweep are
  /// discarded, so several losses can be differentiated on one tape.
  void backward(Var loss);

  /// Gradient of the last backward() w.r.t. v; zeros if v was unreachable.
  const Tensor& grad(Var v);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  OpKind kind(std::size_t id) const { return nodes_.at(id).kind; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Tensor value;
    BackwardFn backward;
    bool requires_grad;
  };
  std::deque<Node> nodes_;
  std::deque<std::optional<Tensor>> grads_;
};

struct Conv1dSpec {
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t pad_left = 0;  // zero padding; default is valid convolution
  std::size_t pad_right = 0;

  /// Output length for an input of length `length`.
  std::size_t output_length(std::size_t length) const;
  /// Padding that makes the output length ceil(length / stride).
  static Conv1dSpec same(std::size_t kernel, std::size_t stride, std::size_t in_ch, std::size_t out_ch,
                         std::size_t length);
};

void validate(const Conv1dSpec& spec);

struct ConvTranspose1dSpec {
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t crop_left = 0;  // trimmed from the full (L-1)*stride + kernel output
  std::size_t crop_right = 0;

  std::size_t output_length(std::size_t length) const;
  /// Cropping that makes the output length length * stride.
  static ConvTranspose1dSpec same(std::size_t kernel, std::size_t stride, std::size_t in_ch, std::size_t out_ch);
};

// Element-wise ops require identical shapes; the only broadcast is
// scalar-with-tensor through scale() and add_scalar().
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double c);
Var matmul(Var a, Var b);
/// x: [C_in, L] or [B, C_in, L]; weight: [C_out, C_in, K]; bias: [C_out].
Var conv1d(Var x, Var weight, std::optional<Var> bias, const Conv1dSpec& spec);
/// x: [B, C_in, L]; weight: [C_in, C_out, K]; bias: [C_out].
Var conv_transpose1d(Var x, Var weight, std::optional<Var> bias, const ConvTranspose1dSpec& spec);
/// x: [B, N], bias: [N]; adds bias to every row.
Var add_row_bias(Var x, Var bias);
Var leaky_relu(Var x, double slope);
Var tanh(Var x);
Var exp(Var x);
Var log(Var x);
Var sum(Var x);
Var mean(Var x);
Var square(Var x);
Var concat(std::span<const Var> parts, std::size_t axis);
Var reshape(Var x, Shape shape);
/// Columns [begin, end) of a rank-2 tensor.
Var slice_cols(Var x, std::size_t begin, std::size_t end);

/// Scalar function of one tensor, built on the supplied tape.
using ScalarFn = std::function<Var(Tape&, Var)>;

/// Largest element-wise |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|), with
/// g_fd from central differences of step eps.
double grad_check(const ScalarFn& f, const Tensor& x, double eps = 1e-5);

}  // namespace evc::ad
