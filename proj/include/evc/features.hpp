#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace evc {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Per-frame F0 in Hz. Unvoiced frames hold exactly 0.
class F0Contour {
 public:
  F0Contour(std::vector<double> values, std::vector<bool> voiced, double frame_shift_ms);

  /// Voicing inferred from the values: > 0 is voiced, 0 is unvoiced.
  static F0Contour from_hz(std::vector<double> values, double frame_shift_ms);

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<bool>& voiced() const noexcept { return voiced_; }
  double frame_shift_ms() const noexcept { return frame_shift_ms_; }
  std::size_t voiced_count() const noexcept;

 private:
  std::vector<double> values_;
  std::vector<bool> voiced_;
  double frame_shift_ms_;
};

/// Metadata produced by spectral normalization; needed to undo it.
struct NormMeta {
  std::vector<double> energy;     // per frame, > 0
  std::vector<double> scale_min;  // per dimension, log domain
  std::vector<double> scale_max;
};

/// n_frames x dim features, one frame per row.
class FeatureSequence {
 public:
  FeatureSequence(Matrix data, double frame_shift_ms, std::optional<NormMeta> norm_meta = std::nullopt);

  std::size_t n_frames() const noexcept { return data_.rows(); }
  std::size_t dim() const noexcept { return data_.cols(); }
  const Matrix& data() const noexcept { return data_; }
  double frame_shift_ms() const noexcept { return frame_shift_ms_; }
  const std::optional<NormMeta>& norm_meta() const noexcept { return norm_meta_; }

  std::span<const double> frame(std::size_t i) const { return data_.row(i); }

  /// 1-dim sequence from a vector.
  static FeatureSequence column(std::span<const double> values, double frame_shift_ms);
  std::vector<double> column_values(std::size_t c = 0) const;

 private:
  Matrix data_;
  double frame_shift_ms_;
  std::optional<NormMeta> norm_meta_;
};

bool operator==(const FeatureSequence& a, const FeatureSequence& b);

inline constexpr int kDefaultEmotionClasses = 10;

class EmotionCode {
 public:
  explicit EmotionCode(int index, int n_classes = kDefaultEmotionClasses);

  int index() const noexcept { return index_; }
  int n_classes() const noexcept { return n_classes_; }

  friend bool operator==(const EmotionCode&, const EmotionCode&) = default;

 private:
  int index_;
  int n_classes_;
};

std::vector<double> one_hot(const EmotionCode& code);

/// Unit-sum energy extraction, log compression and per-dimension rescaling
/// to [-1, 1]. When `range` is given its scale_min/scale_max are reused
/// (corpus statistics); otherwise they are measured on `spectrum`.
FeatureSequence normalize_spectrum(const FeatureSequence& spectrum,
                                   const NormMeta* range = nullptr);

/// Inverse of normalize_spectrum; requires norm_meta on the input.
FeatureSequence denormalize_spectrum(const FeatureSequence& normalized);

}  // namespace evc
