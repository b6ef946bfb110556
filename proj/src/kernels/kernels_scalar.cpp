#include <algorithm>
#include <cmath>

#include "evc/kernels.hpp"

namespace evc::kernels {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpy_strided(double a, const double* x, std::size_t stride, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i * stride];
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(double a, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i];
}

void leaky_relu(const double* x, double slope, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_backward(const double* x, const double* g, double slope, double* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * (x[i] > 0.0 ? 1.0 : slope);
}

void sq_dist_row(const double* a, const double* bt, std::size_t dim, std::size_t m, double* out) {
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = a[d] - bt[d * m + j];
      acc += diff * diff;
    }
    out[j] = acc;
  }
}

void rmsprop(double* p, const double* g, double* state, std::size_t n, double lr, double decay, double eps) {
  const double keep = 1.0 - decay;
  for (std::size_t i = 0; i < n; ++i) {
    state[i] = decay * state[i] + keep * (g[i] * g[i]);
    p[i] -= lr * g[i] / (std::sqrt(state[i]) + eps);
  }
}

void clip(double* p, std::size_t n, double c) {
  for (std::size_t i = 0; i < n; ++i) p[i] = std::min(std::max(p[i], -c), c);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{Backend::Scalar, axpy, axpy_strided, add, mul, scale,
                             leaky_relu, leaky_relu_backward, sq_dist_row, rmsprop, clip};
  return t;
}

}  // namespace evc::kernels
