#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops behind every hot path (CWT convolution, conv1d,
// matmul, DTW distances, optimizer updates). Each kernel has a scalar
// reference and, on x86-64, an AVX2 variant chosen at runtime.
//
// All variants vectorize across independent outputs and keep each output's
// summation order, with no FMA contraction, so every backend produces
// bit-identical results.

namespace evc::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend b);

struct KernelTable {
  Backend backend;

  /// y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// y[i] += a * x[i * stride]
  void (*axpy_strided)(double a, const double* x, std::size_t stride, double* y, std::size_t n);
  /// out[i] = a[i] + b[i]
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  /// out[i] = a[i] * b[i]
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  /// out[i] = a * x[i]
  void (*scale)(double a, const double* x, double* out, std::size_t n);
  /// out[i] = x[i] > 0 ? x[i] : slope * x[i]
  void (*leaky_relu)(const double* x, double slope, double* out, std::size_t n);
  /// gx[i] += g[i] * (x[i] > 0 ? 1 : slope)
  void (*leaky_relu_backward)(const double* x, const double* g, double slope, double* gx, std::size_t n);
  /// out[j] = sum_d (a[d] - bt[d * m + j])^2, d ascending; bt is dim x m.
  void (*sq_dist_row)(const double* a, const double* bt, std::size_t dim, std::size_t m, double* out);
  /// state = decay*state + (1-decay)*g^2; p -= lr*g/(sqrt(state)+eps)
  void (*rmsprop)(double* p, const double* g, double* state, std::size_t n, double lr, double decay, double eps);
  /// p[i] = min(max(p[i], -c), c)
  void (*clip)(double* p, std::size_t n, double c);
};

const KernelTable& scalar_table();
bool available(Backend b);
const KernelTable& table(Backend b);

/// Table used by the library. Defaults to the best available backend;
/// EVC_KERNELS=scalar|avx2 in the environment overrides the choice.
const KernelTable& active();
void set_backend(Backend b);

/// Restores the previous backend on scope exit.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend b);
  ~ScopedBackend();
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

#if defined(EVC_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace evc::kernels
