#include "evc/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "evc/error.hpp"

namespace evc {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    fail(ErrorKind::Shape, "matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                               " given " + std::to_string(data_.size()) + " values");
  }
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

F0Contour::F0Contour(std::vector<double> values, std::vector<bool> voiced, double frame_shift_ms)
    : values_(std::move(values)), voiced_(std::move(voiced)), frame_shift_ms_(frame_shift_ms) {
  if (values_.size() != voiced_.size())
    fail(ErrorKind::Shape, "F0 values and voicing mask differ in length");
  if (!(frame_shift_ms_ > 0.0) || !std::isfinite(frame_shift_ms_))
    fail(ErrorKind::Config, "frame shift must be positive");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      fail(ErrorKind::NonFinite, "F0 frame " + std::to_string(i) + " is not finite");
    if (voiced_[i] && !(values_[i] > 0.0))
      fail(ErrorKind::Domain, "voiced F0 frame " + std::to_string(i) + " is not positive");
    if (!voiced_[i] && values_[i] != 0.0)
      fail(ErrorKind::Domain, "unvoiced F0 frame " + std::to_string(i) + " is not zero");
  }
}

F0Contour F0Contour::from_hz(std::vector<double> values, double frame_shift_ms) {
  std::vector<bool> voiced(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) voiced[i] = values[i] > 0.0;
  return F0Contour(std::move(values), std::move(voiced), frame_shift_ms);
}

std::size_t F0Contour::voiced_count() const noexcept {
  return static_cast<std::size_t>(std::count(voiced_.begin(), voiced_.end(), true));
}

FeatureSequence::FeatureSequence(Matrix data, double frame_shift_ms, std::optional<NormMeta> norm_meta)
    : data_(std::move(data)), frame_shift_ms_(frame_shift_ms), norm_meta_(std::move(norm_meta)) {
  if (data_.rows() < 1 || data_.cols() < 1)
    fail(ErrorKind::Shape, "feature sequence needs at least one frame and one dimension");
  if (!(frame_shift_ms_ > 0.0) || !std::isfinite(frame_shift_ms_))
    fail(ErrorKind::Config, "frame shift must be positive");
  for (std::size_t i = 0; i < data_.data().size(); ++i) {
    if (!std::isfinite(data_.data()[i]))
      fail(ErrorKind::NonFinite, "feature value at frame " + std::to_string(i / data_.cols()) +
                                     ", dim " + std::to_string(i % data_.cols()) + " is not finite");
  }
  if (norm_meta_) {
    const auto& e = norm_meta_->energy;
    if (!e.empty()) {
      if (e.size() != data_.rows()) fail(ErrorKind::Shape, "energy length differs from frame count");
      for (double v : e)
        if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::Domain, "energy must be positive");
    }
    if (norm_meta_->scale_min.size() != norm_meta_->scale_max.size())
      fail(ErrorKind::Shape, "scale_min and scale_max differ in length");
    if (!norm_meta_->scale_min.empty() && norm_meta_->scale_min.size() != data_.cols())
      fail(ErrorKind::Shape, "scale range length differs from dimension");
  }
}

FeatureSequence FeatureSequence::column(std::span<const double> values, double frame_shift_ms) {
  return FeatureSequence(Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end())),
                         frame_shift_ms);
}

std::vector<double> FeatureSequence::column_values(std::size_t c) const {
  std::vector<double> out(n_frames());
  for (std::size_t i = 0; i < n_frames(); ++i) out[i] = data_(i, c);
  return out;
}

static bool same_meta(const std::optional<NormMeta>& a, const std::optional<NormMeta>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->energy == b->energy && a->scale_min == b->scale_min && a->scale_max == b->scale_max;
}

bool operator==(const FeatureSequence& a, const FeatureSequence& b) {
  return a.data() == b.data() && a.frame_shift_ms() == b.frame_shift_ms() &&
         same_meta(a.norm_meta(), b.norm_meta());
}

EmotionCode::EmotionCode(int index, int n_classes) : index_(index), n_classes_(n_classes) {
  if (n_classes_ < 1) fail(ErrorKind::Config, "emotion class count must be positive");
  if (index_ < 0 || index_ >= n_classes_)
    fail(ErrorKind::Config, "emotion index " + std::to_string(index_) + " outside [0, " +
                                std::to_string(n_classes_) + ")");
}

std::vector<double> one_hot(const EmotionCode& code) {
  std::vector<double> v(static_cast<std::size_t>(code.n_classes()), 0.0);
  v[static_cast<std::size_t>(code.index())] = 1.0;
  return v;
}

FeatureSequence normalize_spectrum(const FeatureSequence& spectrum, const NormMeta* range) {
  const std::size_t n = spectrum.n_frames();
  const std::size_t d = spectrum.dim();
  NormMeta meta;
  meta.energy.resize(n);
  Matrix logs(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = spectrum.data()(i, j);
      if (!(v > 0.0))
        fail(ErrorKind::Domain, "spectral value at frame " + std::to_string(i) + ", dim " +
                                    std::to_string(j) + " is not positive");
      total += v;
    }
    meta.energy[i] = total;
    for (std::size_t j = 0; j < d; ++j) logs(i, j) = std::log(spectrum.data()(i, j) / total);
  }
  if (range != nullptr) {
    if (range->scale_min.size() != d || range->scale_max.size() != d)
      fail(ErrorKind::Shape, "normalization range has wrong dimension");
    meta.scale_min = range->scale_min;
    meta.scale_max = range->scale_max;
  } else {
    meta.scale_min.assign(d, 0.0);
    meta.scale_max.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      double lo = logs(0, j), hi = logs(0, j);
      for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, logs(i, j));
        hi = std::max(hi, logs(i, j));
      }
      meta.scale_min[j] = lo;
      meta.scale_max[j] = hi;
    }
  }
  Matrix out(n, d);
  for (std::size_t j = 0; j < d; ++j) {
    const double span = meta.scale_max[j] - meta.scale_min[j];
    for (std::size_t i = 0; i < n; ++i)
      out(i, j) = span > 0.0 ? 2.0 * (logs(i, j) - meta.scale_min[j]) / span - 1.0 : 0.0;
  }
  return FeatureSequence(std::move(out), spectrum.frame_shift_ms(), std::move(meta));
}

FeatureSequence denormalize_spectrum(const FeatureSequence& normalized) {
  if (!normalized.norm_meta() || normalized.norm_meta()->energy.empty() ||
      normalized.norm_meta()->scale_min.empty())
    fail(ErrorKind::State, "sequence carries no normalization metadata");
  const NormMeta& meta = *normalized.norm_meta();
  const std::size_t n = normalized.n_frames();
  const std::size_t d = normalized.dim();
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double span = meta.scale_max[j] - meta.scale_min[j];
      const double logv = (normalized.data()(i, j) + 1.0) * 0.5 * span + meta.scale_min[j];
      out(i, j) = std::exp(logv) * meta.energy[i];
    }
  }
  return FeatureSequence(std::move(out), normalized.frame_shift_ms());
}

}  // namespace evc
