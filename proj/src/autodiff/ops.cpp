#include <algorithm>
#include <cmath>
#include <string>

#include "evc/autodiff.hpp"
#include "evc/error.hpp"
#include "evc/kernels.hpp"

namespace evc::ad {
namespace {

Tape& tape_of(Var a) {
  if (a.tape == nullptr) fail(ErrorKind::State, "variable is not attached to a tape");
  return *a.tape;
}

Tape& common_tape(Var a, Var b) {
  Tape& t = tape_of(a);
  if (b.tape != a.tape) fail(ErrorKind::State, "operands live on different tapes");
  return t;
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  fail(ErrorKind::Shape, std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

void require_same(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

void accumulate(Tensor* dst, const Tensor& src) {
  if (dst) kernels::active().add(dst->data(), src.data(), dst->data(), src.size());
}

template <typename F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

}  // namespace

std::size_t Conv1dSpec::output_length(std::size_t length) const {
  const std::size_t padded = length + pad_left + pad_right;
  if (padded < kernel) return 0;
  return (padded - kernel) / stride + 1;
}

Conv1dSpec Conv1dSpec::same(std::size_t kernel, std::size_t stride, std::size_t in_ch, std::size_t out_ch,
                            std::size_t length) {
  const std::size_t out = (length + stride - 1) / stride;
  const std::size_t need = (out - 1) * stride + kernel;
  const std::size_t total = need > length ? need - length : 0;
  return Conv1dSpec{kernel, stride, in_ch, out_ch, total / 2, total - total / 2};
}

void validate(const Conv1dSpec& s) {
  if (s.kernel < 1 || s.stride < 1 || s.in_channels < 1 || s.out_channels < 1)
    fail(ErrorKind::Config, "conv1d kernel, stride and channel counts must be >= 1");
}

std::size_t ConvTranspose1dSpec::output_length(std::size_t length) const {
  const std::size_t full = (length - 1) * stride + kernel;
  if (crop_left + crop_right >= full) return 0;
  return full - crop_left - crop_right;
}

ConvTranspose1dSpec ConvTranspose1dSpec::same(std::size_t kernel, std::size_t stride, std::size_t in_ch,
                                              std::size_t out_ch) {
  // full = (L-1)*s + k; want L*s, so crop k - s in total.
  const std::size_t total = kernel > stride ? kernel - stride : 0;
  return ConvTranspose1dSpec{kernel, stride, in_ch, out_ch, total / 2, total - total / 2};
}

Var add(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same("add", a, b);
  Tensor out(a.shape());
  kernels::active().add(a.value().data(), b.value().data(), out.data(), out.size());
  return t.record(OpKind::Add, {a.id, b.id}, std::move(out), [](BackwardContext& c) {
    accumulate(c.input_grads[0], c.grad_out);
    accumulate(c.input_grads[1], c.grad_out);
  });
}

Var sub(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same("sub", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return t.record(OpKind::Sub, {a.id, b.id}, std::move(out), [](BackwardContext& c) {
    accumulate(c.input_grads[0], c.grad_out);
    if (Tensor* gb = c.input_grads[1])
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] -= c.grad_out[i];
  });
}

Var mul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same("mul", a, b);
  Tensor out(a.shape());
  kernels::active().mul(a.value().data(), b.value().data(), out.data(), out.size());
  return t.record(OpKind::Mul, {a.id, b.id}, std::move(out), [](BackwardContext& c) {
    for (int k = 0; k < 2; ++k) {
      Tensor* g = c.input_grads[k];
      if (!g) continue;
      const Tensor& other = *c.inputs[1 - k];
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.grad_out[i] * other[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tape& t = tape_of(a);
  Tensor out(a.shape());
  kernels::active().scale(factor, a.value().data(), out.data(), out.size());
  return t.record(OpKind::Scale, {a.id}, std::move(out), [factor](BackwardContext& c) {
    if (Tensor* g = c.input_grads[0]) kernels::active().axpy(factor, c.grad_out.data(), g->data(), g->size());
  });
}

Var add_scalar(Var a, double v) {
  Tape& t = tape_of(a);
  Tensor out = map(a.value(), [v](double x) { return x + v; });
  return t.record(OpKind::AddScalar, {a.id}, std::move(out),
                  [](BackwardContext& c) { accumulate(c.input_grads[0], c.grad_out); });
}

Var matmul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  if (a.value().rank() != 2 || b.value().rank() != 2 || a.shape()[1] != b.shape()[0])
    shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  const auto& kt = kernels::active();
  Tensor out(Shape{m, n});
  const double* A = a.value().data();
  const double* B = b.value().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) kt.axpy(A[i * k + p], B + p * n, out.data() + i * n, n);
  return t.record(OpKind::Matmul, {a.id, b.id}, std::move(out), [m, k, n](BackwardContext& c) {
    const auto& kk = kernels::active();
    const double* A = c.inputs[0]->data();
    const double* B = c.inputs[1]->data();
    const double* G = c.grad_out.data();
    if (Tensor* ga = c.input_grads[0]) {
      // dA = G * B^T, vectorized over the columns of dA.
      std::vector<double> bt(n * k);
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = B[p * n + j];
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) kk.axpy(G[i * n + j], bt.data() + j * k, ga->data() + i * k, k);
    }
    if (Tensor* gb = c.input_grads[1]) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) kk.axpy(A[i * k + p], G + i * n, gb->data() + p * n, n);
    }
  });
}

Var conv1d(Var x, Var weight, std::optional<Var> bias, const Conv1dSpec& spec) {
  validate(spec);
  Tape& t = common_tape(x, weight);
  if (bias && bias->tape != x.tape) fail(ErrorKind::State, "conv1d bias lives on another tape");
  const Shape& xs = x.shape();
  const bool batched = xs.size() == 3;
  if (xs.size() != 2 && !batched) shape_error("conv1d", xs, weight.shape());
  const std::size_t B = batched ? xs[0] : 1;
  const std::size_t C = xs[xs.size() - 2];
  const std::size_t L = xs[xs.size() - 1];
  const std::size_t K = spec.kernel, S = spec.stride, O = spec.out_channels;
  if (C != spec.in_channels || weight.shape() != Shape{O, C, K}) shape_error("conv1d", xs, weight.shape());
  if (bias && bias->shape() != Shape{O}) shape_error("conv1d", weight.shape(), bias->shape());
  if (L + spec.pad_left + spec.pad_right < K)
    fail(ErrorKind::Shape, "conv1d: input length " + std::to_string(L) + " shorter than kernel " + std::to_string(K));
  const std::size_t Lp = L + spec.pad_left + spec.pad_right;
  const std::size_t Lo = spec.output_length(L);

  // Zero-padded copy of the input, [B, C, Lp].
  std::vector<double> xp(B * C * Lp, 0.0);
  const double* X = x.value().data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      std::copy(X + (b * C + c) * L, X + (b * C + c + 1) * L, xp.begin() + (b * C + c) * Lp + spec.pad_left);

  const auto& kt = kernels::active();
  const double* W = weight.value().data();
  Tensor out(batched ? Shape{B, O, Lo} : Shape{O, Lo});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < O; ++o) {
      double* row = out.data() + (b * O + o) * Lo;
      if (bias) std::fill(row, row + Lo, bias->value()[o]);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t k = 0; k < K; ++k)
          kt.axpy_strided(W[(o * C + c) * K + k], xp.data() + (b * C + c) * Lp + k, S, row, Lo);
    }

  std::vector<std::size_t> inputs{x.id, weight.id};
  if (bias) inputs.push_back(bias->id);
  return t.record(OpKind::Conv1d, std::move(inputs), std::move(out),
                  [xp = std::move(xp), B, C, L, Lp, Lo, K, S, O, pl = spec.pad_left](BackwardContext& c) {
                    const auto& kk = kernels::active();
                    const double* G = c.grad_out.data();
                    const double* W = c.inputs[1]->data();
                    if (c.input_grads.size() > 2 && c.input_grads[2]) {
                      Tensor& gb = *c.input_grads[2];
                      for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t o = 0; o < O; ++o)
                          for (std::size_t l = 0; l < Lo; ++l) gb[o] += G[(b * O + o) * Lo + l];
                    }
                    if (Tensor* gw = c.input_grads[1]) {
                      for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t o = 0; o < O; ++o)
                          for (std::size_t ch = 0; ch < C; ++ch)
                            for (std::size_t l = 0; l < Lo; ++l)
                              kk.axpy(G[(b * O + o) * Lo + l], xp.data() + (b * C + ch) * Lp + l * S,
                                      gw->data() + (o * C + ch) * K, K);
                    }
                    if (Tensor* gx = c.input_grads[0]) {
                      std::vector<double> gxp(B * C * Lp, 0.0);
                      for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t o = 0; o < O; ++o)
                          for (std::size_t ch = 0; ch < C; ++ch)
                            for (std::size_t l = 0; l < Lo; ++l)
                              kk.axpy(G[(b * O + o) * Lo + l], W + (o * C + ch) * K,
                                      gxp.data() + (b * C + ch) * Lp + l * S, K);
                      for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t ch = 0; ch < C; ++ch)
                          kk.add(gx->data() + (b * C + ch) * L, gxp.data() + (b * C + ch) * Lp + pl,
                                 gx->data() + (b * C + ch) * L, L);
                    }
                  });
}

Var conv_transpose1d(Var x, Var weight, std::optional<Var> bias, const ConvTranspose1dSpec& spec) {
  if (spec.kernel < 1 || spec.stride < 1 || spec.in_channels < 1 || spec.out_channels < 1)
    fail(ErrorKind::Config, "conv_transpose1d kernel, stride and channel counts must be >= 1");
  Tape& t = common_tape(x, weight);
  if (bias && bias->tape != x.tape) fail(ErrorKind::State, "conv_transpose1d bias lives on another tape");
  const Shape& xs = x.shape();
  if (xs.size() != 3) shape_error("conv_transpose1d", xs, weight.shape());
  const std::size_t B = xs[0], C = xs[1], L = xs[2];
  const std::size_t K = spec.kernel, S = spec.stride, O = spec.out_channels;
  if (C != spec.in_channels || weight.shape() != Shape{C, O, K} || L == 0)
    shape_error("conv_transpose1d", xs, weight.shape());
  if (bias && bias->shape() != Shape{O}) shape_error("conv_transpose1d", weight.shape(), bias->shape());
  const std::size_t Lf = (L - 1) * S + K;
  const std::size_t Lo = spec.output_length(L);
  if (Lo == 0) fail(ErrorKind::Shape, "conv_transpose1d: cropping removes the whole output");

  const auto& kt = kernels::active();
  const double* X = x.value().data();
  const double* W = weight.value().data();
  std::vector<double> full(B * O * Lf, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t o = 0; o < O; ++o)
        for (std::size_t l = 0; l < L; ++l)
          kt.axpy(X[(b * C + c) * L + l], W + (c * O + o) * K, full.data() + (b * O + o) * Lf + l * S, K);
  Tensor out(Shape{B, O, Lo});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < O; ++o) {
      double* row = out.data() + (b * O + o) * Lo;
      const double* src = full.data() + (b * O + o) * Lf + spec.crop_left;
      const double bv = bias ? bias->value()[o] : 0.0;
      for (std::size_t l = 0; l < Lo; ++l) row[l] = src[l] + bv;
    }

  std::vector<std::size_t> inputs{x.id, weight.id};
  if (bias) inputs.push_back(bias->id);
  return t.record(OpKind::ConvTranspose1d, std::move(inputs), std::move(out),
                  [B, C, L, Lf, Lo, K, S, O, cl = spec.crop_left](BackwardContext& c) {
                    const auto& kk = kernels::active();
                    const double* X = c.inputs[0]->data();
                    const double* W = c.inputs[1]->data();
                    // Gradient on the uncropped output.
                    std::vector<double> gf(B * O * Lf, 0.0);
                    for (std::size_t b = 0; b < B; ++b)
                      for (std::size_t o = 0; o < O; ++o)
                        std::copy(c.grad_out.data() + (b * O + o) * Lo, c.grad_out.data() + (b * O + o + 1) * Lo,
                                  gf.begin() + (b * O + o) * Lf + cl);
                    if (c.input_grads.size() > 2 && c.input_grads[2]) {
                      Tensor& gb = *c.input_grads[2];
                      for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t o = 0; o < O; ++o)
                          for (std::size_t l = 0; l < Lo; ++l) gb[o] += c.grad_out[(b * O + o) * Lo + l];
                    }
                    if (Tensor* gx = c.input_grads[0]) {
                      for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t ch = 0; ch < C; ++ch)
                          for (std::size_t o = 0; o < O; ++o)
                            for (std::size_t k = 0; k < K; ++k)
                              kk.axpy_strided(W[(ch * O + o) * K + k], gf.data() + (b * O + o) * Lf + k, S,
                                              gx->data() + (b * C + ch) * L, L);
                    }
                    if (Tensor* gw = c.input_grads[1]) {
                      for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t ch = 0; ch < C; ++ch)
                          for (std::size_t o = 0; o < O; ++o)
                            for (std::size_t l = 0; l < L; ++l)
                              kk.axpy(X[(b * C + ch) * L + l], gf.data() + (b * O + o) * Lf + l * S,
                                      gw->data() + (ch * O + o) * K, K);
                    }
                  });
}

Var add_row_bias(Var x, Var bias) {
  Tape& t = common_tape(x, bias);
  if (x.value().rank() != 2 || bias.value().rank() != 1 || x.shape()[1] != bias.shape()[0])
    shape_error("add_row_bias", x.shape(), bias.shape());
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  const auto& kt = kernels::active();
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r)
    kt.add(x.value().data() + r * cols, bias.value().data(), out.data() + r * cols, cols);
  return t.record(OpKind::AddRowBias, {x.id, bias.id}, std::move(out), [rows, cols](BackwardContext& c) {
    accumulate(c.input_grads[0], c.grad_out);
    if (Tensor* gb = c.input_grads[1]) {
      const auto& kk = kernels::active();
      for (std::size_t r = 0; r < rows; ++r) kk.add(gb->data(), c.grad_out.data() + r * cols, gb->data(), cols);
    }
  });
}

Var leaky_relu(Var x, double slope) {
  Tape& t = tape_of(x);
  Tensor out(x.shape());
  kernels::active().leaky_relu(x.value().data(), slope, out.data(), out.size());
  return t.record(OpKind::LeakyRelu, {x.id}, std::move(out), [slope](BackwardContext& c) {
    if (Tensor* g = c.input_grads[0])
      kernels::active().leaky_relu_backward(c.inputs[0]->data(), c.grad_out.data(), slope, g->data(), g->size());
  });
}

Var tanh(Var x) {
  Tape& t = tape_of(x);
  Tensor out = map(x.value(), [](double v) { return std::tanh(v); });
  return t.record(OpKind::Tanh, {x.id}, std::move(out), [](BackwardContext& c) {
    if (Tensor* g = c.input_grads[0])
      for (std::size_t i = 0; i < g->size(); ++i) {
        const double y = c.value_out[i];
        (*g)[i] += c.grad_out[i] * (1.0 - y * y);
      }
  });
}

Var exp(Var x) {
  Tape& t = tape_of(x);
  Tensor out = map(x.value(), [](double v) { return std::exp(v); });
  if (!out.all_finite()) fail(ErrorKind::Range, "exp overflowed");
  return t.record(OpKind::Exp, {x.id}, std::move(out), [](BackwardContext& c) {
    if (Tensor* g = c.input_grads[0])
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.grad_out[i] * c.value_out[i];
  });
}

Var log(Var x) {
  Tape& t = tape_of(x);
  for (std::size_t i = 0; i < x.value().size(); ++i)
    if (!(x.value()[i] > 0.0)) fail(ErrorKind::Domain, "log of non-positive value at element " + std::to_string(i));
  Tensor out = map(x.value(), [](double v) { return std::log(v); });
  return t.record(OpKind::Log, {x.id}, std::move(out), [](BackwardContext& c) {
    if (Tensor* g = c.input_grads[0])
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.grad_out[i] / (*c.inputs[0])[i];
  });
}

Var sum(Var x) {
  Tape& t = tape_of(x);
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return t.record(OpKind::Sum, {x.id}, Tensor::scalar(s), [](BackwardContext& c) {
    if (Tensor* g = c.input_grads[0]) {
      const double go = c.grad_out.item();
      for (double& v : g->values()) v += go;
    }
  });
}

Var mean(Var x) {
  Tape& t = tape_of(x);
  const std::size_t n = x.value().size();
  if (n == 0) fail(ErrorKind::Shape, "mean of an empty tensor");
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return t.record(OpKind::Mean, {x.id}, Tensor::scalar(s / static_cast<double>(n)), [n](BackwardContext& c) {
    if (Tensor* g = c.input_grads[0]) {
      const double go = c.grad_out.item() / static_cast<double>(n);
      for (double& v : g->values()) v += go;
    }
  });
}

Var square(Var x) {
  Tape& t = tape_of(x);
  Tensor out(x.shape());
  kernels::active().mul(x.value().data(), x.value().data(), out.data(), out.size());
  return t.record(OpKind::Square, {x.id}, std::move(out), [](BackwardContext& c) {
    if (Tensor* g = c.input_grads[0])
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.grad_out[i] * 2.0 * (*c.inputs[0])[i];
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) fail(ErrorKind::Shape, "concat of zero tensors");
  Tape& t = tape_of(parts[0]);
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) fail(ErrorKind::Shape, "concat axis " + std::to_string(axis) + " out of range for " + shape_string(s0));
  Shape out_shape = s0;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (p.tape != parts[0].tape) fail(ErrorKind::State, "concat operands live on different tapes");
    const Shape& s = p.shape();
    if (s.size() != s0.size()) shape_error("concat", s0, s);
    for (std::size_t d = 0; d < s.size(); ++d)
      if (d != axis && s[d] != s0[d]) shape_error("concat", s0, s);
    out_shape[axis] += s[axis];
    widths.push_back(s[axis]);
    ids.push_back(p.id);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s0[d];
  for (std::size_t d = axis + 1; d < s0.size(); ++d) inner *= s0[d];
  Tensor out(out_shape);
  const std::size_t total = out_shape[axis];
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const double* src = parts[p].value().data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy(src + o * widths[p] * inner, src + (o + 1) * widths[p] * inner,
                out.data() + (o * total + offset) * inner);
    offset += widths[p];
  }
  return t.record(OpKind::Concat, std::move(ids), std::move(out), [widths, outer, inner, total](BackwardContext& c) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      if (Tensor* g = c.input_grads[p]) {
        for (std::size_t o = 0; o < outer; ++o) {
          const double* src = c.grad_out.data() + (o * total + off) * inner;
          double* dst = g->data() + o * widths[p] * inner;
          for (std::size_t i = 0; i < widths[p] * inner; ++i) dst[i] += src[i];
        }
      }
      off += widths[p];
    }
  });
}

Var reshape(Var x, Shape shape) {
  Tape& t = tape_of(x);
  if (element_count(shape) != x.value().size()) shape_error("reshape", x.shape(), shape);
  Tensor out(std::move(shape), x.value().values());
  return t.record(OpKind::Reshape, {x.id}, std::move(out),
                  [](BackwardContext& c) { accumulate(c.input_grads[0], c.grad_out); });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(x);
  if (x.value().rank() != 2 || begin >= end || end > x.shape()[1])
    fail(ErrorKind::Shape, "slice_cols: columns [" + std::to_string(begin) + "," + std::to_string(end) +
                               ") of " + shape_string(x.shape()));
  const std::size_t rows = x.shape()[0], cols = x.shape()[1], w = end - begin;
  Tensor out(Shape{rows, w});
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(x.value().data() + r * cols + begin, x.value().data() + r * cols + end, out.data() + r * w);
  return t.record(OpKind::SliceCols, {x.id}, std::move(out), [rows, cols, begin, w](BackwardContext& c) {
    if (Tensor* g = c.input_grads[0])
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < w; ++j) (*g)[r * cols + begin + j] += c.grad_out[r * w + j];
  });
}

double grad_check(const ScalarFn& f, const Tensor& x, double eps) {
  Tape tape;
  Var xv = tape.variable(x);
  Var loss = f(tape, xv);
  tape.backward(loss);
  const Tensor analytic = tape.grad(xv);

  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    Tape tp;
    const double fp = f(tp, tp.constant(probe)).value().item();
    probe[i] = orig - eps;
    Tape tm;
    const double fm = f(tm, tm.constant(probe)).value().item();
    probe[i] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double err = std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace evc::ad
