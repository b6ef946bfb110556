#include <cmath>

#include "evc/cwt.hpp"
#include "evc/error.hpp"

namespace evc {

ScaleNormStats fit_scale_norm(const std::vector<Matrix>& frames_by_scale) {
  if (frames_by_scale.empty()) fail(ErrorKind::Data, "no scaleograms to fit normalization on");
  const std::size_t d = frames_by_scale.front().cols();
  ScaleNormStats st{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  std::size_t n = 0;
  for (const Matrix& m : frames_by_scale) {
    if (m.cols() != d) fail(ErrorKind::Shape, "scaleograms disagree on scale count");
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < d; ++c) st.mean[c] += m(r, c);
    n += m.rows();
  }
  for (double& v : st.mean) v /= static_cast<double>(n);
  for (const Matrix& m : frames_by_scale)
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < d; ++c) st.std[c] += (m(r, c) - st.mean[c]) * (m(r, c) - st.mean[c]);
  for (double& v : st.std) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 1e-12)) v = 1.0;  // flat scale: leave it unscaled
  }
  return st;
}

Matrix apply_scale_norm(const Matrix& m, const ScaleNormStats& st) {
  if (m.cols() != st.mean.size()) fail(ErrorKind::Shape, "scale normalization width mismatch");
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = (m(r, c) - st.mean[c]) / st.std[c];
  return out;
}

Matrix invert_scale_norm(const Matrix& m, const ScaleNormStats& st) {
  if (m.cols() != st.mean.size()) fail(ErrorKind::Shape, "scale normalization width mismatch");
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c) * st.std[c] + st.mean[c];
  return out;
}

}  // namespace evc
