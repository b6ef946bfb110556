#include "evc/f0prep.hpp"

#include <cmath>
#include <json.hpp>

#include "evc/error.hpp"

namespace evc {
namespace {

void require_stage(const LogF0Track& track, TrackStage stage, const char* op) {
  if (track.stage != stage)
    fail(ErrorKind::State, std::string(op) + " expects a " + std::string(to_string(stage)) + " track, got " +
                               std::string(to_string(track.stage)));
}

}  // namespace

void validate(const NormStats& stats) {
  if (!std::isfinite(stats.mean) || !std::isfinite(stats.std) || !(stats.std > 0.0))
    fail(ErrorKind::Config, "normalization statistics must be finite with std > 0");
}

std::string_view to_string(TrackStage stage) {
  switch (stage) {
    case TrackStage::Interpolated: return "Interpolated";
    case TrackStage::Log: return "Log";
    case TrackStage::Normalized: return "Normalized";
  }
  return "?";
}

LogF0Track interpolate_unvoiced(const F0Contour& f0) {
  const auto& hz = f0.values();
  const auto& voiced = f0.voiced();
  const std::size_t n = f0.size();
  LogF0Track out{std::vector<double>(n), f0.frame_shift_ms(), TrackStage::Interpolated};

  std::size_t first = n;
  for (std::size_t i = 0; i < n; ++i)
    if (voiced[i]) {
      first = i;
      break;
    }
  if (first == n) fail(ErrorKind::NoVoicedFrames, "contour of " + std::to_string(n) + " frames has no voiced frame");

  for (std::size_t i = 0; i < first; ++i) out.values[i] = hz[first];
  std::size_t prev = first;
  out.values[first] = hz[first];
  for (std::size_t i = first + 1; i < n; ++i) {
    if (!voiced[i]) continue;
    const double left = hz[prev];
    const double right = hz[i];
    const double gap = static_cast<double>(i - prev);
    for (std::size_t k = prev + 1; k < i; ++k) {
      const double w = static_cast<double>(k - prev) / gap;
      out.values[k] = left + (right - left) * w;
    }
    out.values[i] = right;
    prev = i;
  }
  for (std::size_t i = prev + 1; i < n; ++i) out.values[i] = hz[prev];
  return out;
}

LogF0Track to_log(const LogF0Track& track) {
  require_stage(track, TrackStage::Interpolated, "to_log");
  LogF0Track out{std::vector<double>(track.size()), track.frame_shift_ms, TrackStage::Log};
  for (std::size_t i = 0; i < track.size(); ++i) {
    if (!(track.values[i] > 0.0))
      fail(ErrorKind::Domain, "non-positive F0 " + std::to_string(track.values[i]) + " at frame " + std::to_string(i));
    out.values[i] = std::log(track.values[i]);
  }
  return out;
}

std::pair<LogF0Track, NormStats> znorm(const LogF0Track& track) {
  require_stage(track, TrackStage::Log, "znorm");
  const std::size_t n = track.size();
  if (n < 2) fail(ErrorKind::Shape, "znorm needs at least 2 frames");
  double mean = 0.0;
  for (double v : track.values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : track.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  // Values within rounding noise of each other count as constant.
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
    fail(ErrorKind::ZeroVariance, "log-F0 track is constant");
  NormStats stats{mean, sd};
  LogF0Track out{std::vector<double>(n), track.frame_shift_ms, TrackStage::Normalized};
  for (std::size_t i = 0; i < n; ++i) out.values[i] = (track.values[i] - mean) / sd;
  return {std::move(out), stats};
}

LogF0Track znorm_with(const LogF0Track& track, const NormStats& stats) {
  require_stage(track, TrackStage::Log, "znorm_with");
  validate(stats);
  LogF0Track out{std::vector<double>(track.size()), track.frame_shift_ms, TrackStage::Normalized};
  for (std::size_t i = 0; i < track.size(); ++i) out.values[i] = (track.values[i] - stats.mean) / stats.std;
  return out;
}

LogF0Track denormalize(const LogF0Track& track, const NormStats& stats) {
  require_stage(track, TrackStage::Normalized, "denormalize");
  validate(stats);
  LogF0Track out{std::vector<double>(track.size()), track.frame_shift_ms, TrackStage::Interpolated};
  for (std::size_t i = 0; i < track.size(); ++i) {
    const double hz = std::exp(track.values[i] * stats.std + stats.mean);
    if (!std::isfinite(hz)) fail(ErrorKind::Range, "F0 overflows at frame " + std::to_string(i));
    out.values[i] = hz;
  }
  return out;
}

NormStats pooled_log_stats(const std::vector<LogF0Track>& log_tracks) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& t : log_tracks) {
    require_stage(t, TrackStage::Log, "pooled_log_stats");
    for (double v : t.values) sum += v;
    n += t.size();
  }
  if (n < 2) fail(ErrorKind::Shape, "pooled statistics need at least 2 frames");
  const double mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (const auto& t : log_tracks)
    for (double v : t.values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  if (!(sd > 0.0)) fail(ErrorKind::ZeroVariance, "pooled log-F0 is constant");
  return {mean, sd};
}

std::string norm_stats_to_json(const NormStats& stats) {
  nlohmann::json j{{"mean", stats.mean}, {"std", stats.std}, {"log_base", "e"}};
  return j.dump(2) + "\n";
}

NormStats norm_stats_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("normalization stats: ") + e.what());
  }
  if (!j.contains("mean") || !j.contains("std") || !j["mean"].is_number() || !j["std"].is_number())
    fail(ErrorKind::Parse, "normalization stats need numeric mean and std");
  if (j.contains("log_base") && j["log_base"] != "e")
    fail(ErrorKind::Config, "only natural-log statistics are supported");
  NormStats s{j["mean"].get<double>(), j["std"].get<double>()};
  validate(s);
  return s;
}

}  // namespace evc
