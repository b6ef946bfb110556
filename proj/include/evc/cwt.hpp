#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "evc/f0prep.hpp"
#include "evc/features.hpp"

namespace evc {

enum class ScaleSpacing { Logarithmic, Linear };

std::string_view to_string(ScaleSpacing s);
ScaleSpacing scale_spacing_from_string(std::string_view s);

struct WaveletConfig {
  int n_scales = 513;
  double tau0_ms = 5.0;  // translation step, equal to the frame shift
  double s_min = 1.0;    // frames
  double s_max = 512.0;  // frames
  ScaleSpacing spacing = ScaleSpacing::Logarithmic;

  /// Default grid for an utterance: s_max = min(512, n_frames / 2).
  static WaveletConfig for_length(std::size_t n_frames);
};

void validate(const WaveletConfig& config);

/// Least-squares reconstruction constant of the Mexican hat for the default
/// grid; reproduced by calibrate_reconstruction_constant().
inline constexpr double kMexicanHatReconstructionC = 0.46074629915194626;

/// Kernel half-width in units of scale; beyond 8 s the wavelet is below 1e-12.
inline constexpr double kWaveletSupport = 8.0;

struct CwtScaleogram {
  Matrix coeffs;  // n_scales x source_len
  std::vector<double> scales;
  WaveletConfig config;
  std::size_t source_len = 0;
  double reconstruction_c = kMexicanHatReconstructionC;
};

double mexican_hat(double t);

std::vector<double> build_scales(const WaveletConfig& config);

/// Quadrature weights in ln(s) used by the inverse transform. Trapezoid rule
/// on the grid, plus the closed-form contribution of scales below s_min on
/// the first weight (the wavelet spectrum is quadratic near zero, so that
/// tail integrates to half of the finest-scale term).
std::vector<double> log_scale_weights(const std::vector<double>& scales);

/// c[j][b] = s_j^(-1/2) * sum_t x[t] psi((t - b) / s_j) on a mirror-padded
/// signal. The sampled kernel is re-centred to zero mean.
CwtScaleogram cwt_forward(const LogF0Track& signal, const WaveletConfig& config);

/// x[t] = C * sum_j c[j][t] * s_j^(-1/2) * w_j
LogF0Track cwt_inverse(const CwtScaleogram& scaleogram);

/// Fits C by least squares on the fixed calibration signal (1024 frames,
/// sinusoids of period 16, 40 and 120 frames, z-normalized) with the
/// default grid for that length.
double calibrate_reconstruction_constant();

/// RMS(reconstruction - reference) / RMS(reference).
double relative_rmse(std::span<const double> reference, std::span<const double> reconstruction);

/// Frames-by-scales view for file I/O and model training.
FeatureSequence scaleogram_to_features(const CwtScaleogram& s);
CwtScaleogram scaleogram_from_features(const FeatureSequence& frames, const std::string& sidecar_json);

std::string scaleogram_sidecar_json(const CwtScaleogram& s);

/// Per-scale z-normalization of scaleogram frames.
struct ScaleNormStats {
  std::vector<double> mean;
  std::vector<double> std;
};

/// Statistics pooled over all frames of the given frames-by-scales matrices.
ScaleNormStats fit_scale_norm(const std::vector<Matrix>& frames_by_scale);
Matrix apply_scale_norm(const Matrix& frames_by_scale, const ScaleNormStats& stats);
Matrix invert_scale_norm(const Matrix& frames_by_scale, const ScaleNormStats& stats);

}  // namespace evc
