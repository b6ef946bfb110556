// AVX2 variants. Compiled with -mavx2 only (no FMA) so each lane performs
// the same IEEE operations, in the same order, as the scalar reference.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "evc/kernels.hpp"

namespace evc::kernels {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_strided(double a, const double* x, std::size_t stride, double* y, std::size_t n) {
  if (stride == 1) return axpy(a, x, y, n);
  const __m256d va = _mm256_set1_pd(a);
  const long long s = static_cast<long long>(stride);
  const __m256i offsets = _mm256_set_epi64x(3 * s, 2 * s, s, 0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_i64gather_pd(x + i * stride, offsets, 8);
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, xv)));
  }
  for (; i < n; ++i) y[i] += a * x[i * stride];
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(double a, const double* x, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = a * x[i];
}

void leaky_relu(const double* x, double slope, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(slope);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d pos = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(_mm256_mul_pd(vs, xv), xv, pos));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_backward(const double* x, const double* g, double slope, double* gx, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(slope);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d pos = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d factor = _mm256_blendv_pd(vs, one, pos);
    const __m256d contrib = _mm256_mul_pd(_mm256_loadu_pd(g + i), factor);
    _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), contrib));
  }
  for (; i < n; ++i) gx[i] += g[i] * (x[i] > 0.0 ? 1.0 : slope);
}

void sq_dist_row(const double* a, const double* bt, std::size_t dim, std::size_t m, double* out) {
  std::size_t j = 0;
  for (; j + 4 <= m; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t d = 0; d < dim; ++d) {
      const __m256d diff = _mm256_sub_pd(_mm256_set1_pd(a[d]), _mm256_loadu_pd(bt + d * m + j));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
    }
    _mm256_storeu_pd(out + j, acc);
  }
  for (; j < m; ++j) {
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
  const __m256d vdecay = _mm256_set1_pd(decay);
  const __m256d vkeep = _mm256_set1_pd(keep);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    const __m256d sv = _mm256_add_pd(_mm256_mul_pd(vdecay, _mm256_loadu_pd(state + i)),
                                     _mm256_mul_pd(vkeep, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(state + i, sv);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, gv), _mm256_add_pd(_mm256_sqrt_pd(sv), veps));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    state[i] = decay * state[i] + keep * (g[i] * g[i]);
    p[i] -= lr * g[i] / (std::sqrt(state[i]) + eps);
  }
}

void clip(double* p, std::size_t n, double c) {
  const __m256d hi = _mm256_set1_pd(c);
  const __m256d lo = _mm256_set1_pd(-c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(p + i, _mm256_min_pd(_mm256_max_pd(_mm256_loadu_pd(p + i), lo), hi));
  for (; i < n; ++i) p[i] = std::min(std::max(p[i], -c), c);
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{Backend::Avx2, axpy, axpy_strided, add, mul, scale,
                             leaky_relu, leaky_relu_backward, sq_dist_row, rmsprop, clip};
  return t;
}

}  // namespace evc::kernels
