#pragma once

#include <string>
#include <utility>
#include <vector>

#include "evc/features.hpp"

namespace evc {

/// Log-F0 statistics (natural log of Hz) used by z-normalization.
struct NormStats {
  double mean = 0.0;
  double std = 1.0;
};

void validate(const NormStats& stats);

enum class TrackStage { Interpolated, Log, Normalized };

std::string_view to_string(TrackStage stage);

/// Continuous per-frame pitch track at one of the three processing stages.
/// Interpolated tracks hold Hz, Log tracks ln(Hz), Normalized tracks z-scores.
struct LogF0Track {
  std::vector<double> values;
  double frame_shift_ms = 5.0;
  TrackStage stage = TrackStage::Interpolated;

  std::size_t size() const noexcept { return values.size(); }
};

/// Linear interpolation across interior unvoiced runs; leading and trailing
/// runs hold the nearest voiced value.
LogF0Track interpolate_unvoiced(const F0Contour& f0);

/// Natural logarithm, frame by frame.
LogF0Track to_log(const LogF0Track& track);

/// Zero mean, unit population variance.
std::pair<LogF0Track, NormStats> znorm(const LogF0Track& track);

/// z-score with externally supplied statistics (e.g. speaker-level).
LogF0Track znorm_with(const LogF0Track& track, const NormStats& stats);

/// exp(value * std + mean); returns an Interpolated (Hz) track.
LogF0Track denormalize(const LogF0Track& track, const NormStats& stats);

/// Log-F0 statistics pooled over several tracks (speaker- or corpus-level).
NormStats pooled_log_stats(const std::vector<LogF0Track>& log_tracks);

std::string norm_stats_to_json(const NormStats& stats);
NormStats norm_stats_from_json(const std::string& text);

}  // namespace evc
