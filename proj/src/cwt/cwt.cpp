#include "evc/cwt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <json.hpp>

#include "evc/error.hpp"
#include "evc/kernels.hpp"

namespace evc {

std::string_view to_string(ScaleSpacing s) {
  return s == ScaleSpacing::Logarithmic ? "log" : "linear";
}

ScaleSpacing scale_spacing_from_string(std::string_view s) {
  if (s == "log" || s == "logarithmic") return ScaleSpacing::Logarithmic;
  if (s == "linear") return ScaleSpacing::Linear;
  fail(ErrorKind::Config, "unknown scale spacing '" + std::string(s) + "'");
}

WaveletConfig WaveletConfig::for_length(std::size_t n_frames) {
  WaveletConfig c;
  c.s_max = std::max(2.0 * c.s_min, std::min(512.0, static_cast<double>(n_frames / 2)));
  return c;
}

void validate(const WaveletConfig& c) {
  if (c.n_scales < 2) fail(ErrorKind::Config, "n_scales must be at least 2, got " + std::to_string(c.n_scales));
  if (!(c.s_min > 0.0) || !(c.s_max > c.s_min) || !std::isfinite(c.s_max))
    fail(ErrorKind::Config, "need 0 < s_min < s_max, got s_min=" + std::to_string(c.s_min) +
                                " s_max=" + std::to_string(c.s_max));
  if (!(c.tau0_ms > 0.0) || !std::isfinite(c.tau0_ms)) fail(ErrorKind::Config, "tau0_ms must be positive");
}

double mexican_hat(double t) {
  static const double norm = 2.0 / (std::sqrt(3.0) * std::pow(std::numbers::pi, 0.25));
  const double t2 = t * t;
  return norm * (1.0 - t2) * std::exp(-0.5 * t2);
}

std::vector<double> build_scales(const WaveletConfig& config) {
  validate(config);
  const int n = config.n_scales;
  std::vector<double> s(static_cast<std::size_t>(n));
  const double last = static_cast<double>(n - 1);
  for (int j = 0; j < n; ++j) {
    const double f = static_cast<double>(j) / last;
    s[j] = config.spacing == ScaleSpacing::Logarithmic ? config.s_min * std::pow(config.s_max / config.s_min, f)
                                                       : config.s_min + (config.s_max - config.s_min) * f;
  }
  s.front() = config.s_min;
  s.back() = config.s_max;
  return s;
}

std::vector<double> log_scale_weights(const std::vector<double>& scales) {
  const std::size_t n = scales.size();
  if (n < 2) fail(ErrorKind::Config, "need at least two scales");
  std::vector<double> w(n, 0.0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double h = std::log(scales[j + 1]) - std::log(scales[j]);
    w[j] += 0.5 * h;
    w[j + 1] += 0.5 * h;
  }
  w[0] += 0.5;
  return w;
}

namespace {

// Half-sample symmetric extension: x[-1] = x[0], x[n] = x[n-1], repeated.
std::vector<double> mirror_pad(const std::vector<double>& x, std::size_t pad) {
  const std::size_t n = x.size();
  const std::size_t period = 2 * n;
  std::vector<double> out(n + 2 * pad);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const long long idx = static_cast<long long>(i) - static_cast<long long>(pad);
    long long m = idx % static_cast<long long>(period);
    if (m < 0) m += static_cast<long long>(period);
    const std::size_t k = static_cast<std::size_t>(m) < n ? static_cast<std::size_t>(m)
                                                          : period - 1 - static_cast<std::size_t>(m);
    out[i] = x[k];
  }
  return out;
}

// Zero-mean sampled wavelet with the s^(-1/2) normalization folded in.
std::vector<double> sampled_kernel(double s) {
  const auto half = static_cast<std::size_t>(std::ceil(kWaveletSupport * s));
  std::vector<double> k(2 * half + 1);
  double mean = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double t = static_cast<double>(static_cast<long long>(i) - static_cast<long long>(half));
    k[i] = mexican_hat(t / s);
    mean += k[i];
  }
  mean /= static_cast<double>(k.size());
  const double amp = 1.0 / std::sqrt(s);
  for (double& v : k) v = (v - mean) * amp;
  return k;
}

}  // namespace

CwtScaleogram cwt_forward(const LogF0Track& signal, const WaveletConfig& config) {
  if (signal.stage != TrackStage::Normalized)
    fail(ErrorKind::State, "cwt_forward expects a Normalized track, got " + std::string(to_string(signal.stage)));
  const std::size_t n = signal.size();
  if (n < 2) fail(ErrorKind::TooShort, "CWT needs at least 2 frames, got " + std::to_string(n));
  if (std::abs(signal.frame_shift_ms - config.tau0_ms) > 1e-6)
    fail(ErrorKind::Config, "frame shift " + std::to_string(signal.frame_shift_ms) + " ms differs from tau0 " +
                                std::to_string(config.tau0_ms) + " ms");
  CwtScaleogram out;
  out.scales = build_scales(config);
  out.config = config;
  out.source_len = n;
  out.coeffs = Matrix(out.scales.size(), n);

  const auto& k = kernels::active();
  for (std::size_t j = 0; j < out.scales.size(); ++j) {
    const std::vector<double> kern = sampled_kernel(out.scales[j]);
    const std::size_t half = kern.size() / 2;
    const std::vector<double> padded = mirror_pad(signal.values, half);
    double* row = out.coeffs.row(j).data();
    // row[b] = sum_i kern[i] * x[b + i - half], i ascending for every b.
    for (std::size_t i = 0; i < kern.size(); ++i) k.axpy(kern[i], padded.data() + i, row, n);
  }
  return out;
}

LogF0Track cwt_inverse(const CwtScaleogram& s) {
  const std::vector<double> expected = build_scales(s.config);
  if (s.scales.size() != expected.size() || s.coeffs.rows() != s.scales.size() || s.coeffs.cols() != s.source_len)
    fail(ErrorKind::Shape, "scaleogram is " + std::to_string(s.coeffs.rows()) + "x" + std::to_string(s.coeffs.cols()) +
                               " with " + std::to_string(s.scales.size()) + " scales; config expects " +
                               std::to_string(expected.size()));
  for (std::size_t j = 0; j < expected.size(); ++j)
    if (std::abs(s.scales[j] - expected[j]) > 1e-9 * expected[j])
      fail(ErrorKind::Shape, "scale " + std::to_string(j) + " does not match the configured grid");
  if (!std::isfinite(s.reconstruction_c)) fail(ErrorKind::Config, "reconstruction constant is not finite");

  const std::vector<double> w = log_scale_weights(s.scales);
  const auto& k = kernels::active();
  std::vector<double> acc(s.source_len, 0.0);
  for (std::size_t j = 0; j < s.scales.size(); ++j)
    k.axpy(w[j] / std::sqrt(s.scales[j]), s.coeffs.row(j).data(), acc.data(), s.source_len);
  LogF0Track out{std::vector<double>(s.source_len), s.config.tau0_ms, TrackStage::Normalized};
  k.scale(s.reconstruction_c, acc.data(), out.values.data(), s.source_len);
  return out;
}

double calibrate_reconstruction_constant() {
  constexpr std::size_t n = 1024;
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double tt = static_cast<double>(t);
    x[t] = std::sin(2.0 * std::numbers::pi * tt / 16.0) + 0.7 * std::sin(2.0 * std::numbers::pi * tt / 40.0 + 0.3) +
           0.5 * std::sin(2.0 * std::numbers::pi * tt / 120.0 + 1.1);
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double& v : x) v = (v - mean) / sd;

  const LogF0Track track{x, 5.0, TrackStage::Normalized};
  CwtScaleogram s = cwt_forward(track, WaveletConfig::for_length(n));
  s.reconstruction_c = 1.0;
  const LogF0Track r = cwt_inverse(s);
  double xr = 0.0, rr = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    xr += x[t] * r.values[t];
    rr += r.values[t] * r.values[t];
  }
  return xr / rr;
}

double relative_rmse(std::span<const double> reference, std::span<const double> reconstruction) {
  if (reference.size() != reconstruction.size())
    fail(ErrorKind::LengthMismatch, "reference has " + std::to_string(reference.size()) + " frames, reconstruction " +
                                        std::to_string(reconstruction.size()));
  if (reference.empty()) fail(ErrorKind::TooShort, "relative RMSE of empty tracks");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reconstruction[i] - reference[i];
    num += d * d;
    den += reference[i] * reference[i];
  }
  if (!(den > 0.0)) fail(ErrorKind::ZeroVariance, "reference track is identically zero");
  return std::sqrt(num / den);
}

FeatureSequence scaleogram_to_features(const CwtScaleogram& s) {
  return FeatureSequence(s.coeffs.transposed(), s.config.tau0_ms);
}

std::string scaleogram_sidecar_json(const CwtScaleogram& s) {
  nlohmann::json j;
  j["n_scales"] = s.config.n_scales;
  j["scales"] = s.scales;
  j["s_min"] = s.config.s_min;
  j["s_max"] = s.config.s_max;
  j["spacing"] = std::string(to_string(s.config.spacing));
  j["tau0_ms"] = s.config.tau0_ms;
  j["reconstruction_C"] = s.reconstruction_c;
  j["source_len"] = s.source_len;
  return j.dump(2) + "\n";
}

CwtScaleogram scaleogram_from_features(const FeatureSequence& frames, const std::string& sidecar_json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(sidecar_json);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("scaleogram sidecar: ") + e.what());
  }
  CwtScaleogram s;
  try {
    s.config.s_min = j.at("s_min").get<double>();
    s.config.s_max = j.at("s_max").get<double>();
    s.config.tau0_ms = j.at("tau0_ms").get<double>();
    s.config.spacing = scale_spacing_from_string(j.at("spacing").get<std::string>());
    s.scales = j.at("scales").get<std::vector<double>>();
    s.config.n_scales = j.contains("n_scales") ? j["n_scales"].get<int>() : static_cast<int>(s.scales.size());
    s.reconstruction_c = j.value("reconstruction_C", kMexicanHatReconstructionC);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("scaleogram sidecar: ") + e.what());
  }
  validate(s.config);
  if (frames.dim() != s.scales.size())
    fail(ErrorKind::Shape, "scaleogram file has " + std::to_string(frames.dim()) + " scales, sidecar lists " +
                               std::to_string(s.scales.size()));
  s.source_len = frames.n_frames();
  s.coeffs = frames.data().transposed();
  return s;
}

}  // namespace evc
