#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evc/features.hpp"

namespace evc {

struct AlignmentPath {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double cost = 0.0;
};

/// Checks the start/end/step invariants for an n x m alignment.
void validate(const AlignmentPath& path, std::size_t n, std::size_t m);

AlignmentPath diagonal_path(std::size_t n);

/// Minimum summed Euclidean frame distance under steps (1,0), (0,1), (1,1).
/// Backtracking prefers the diagonal, then (1,0), then (0,1).
AlignmentPath dtw_align(const FeatureSequence& a, const FeatureSequence& b);

struct McdOptions {
  bool has_c0 = true;  // column 0 is the energy coefficient and is skipped
};

inline constexpr double kMcdConstant = 4.3429448190325175;  // 10 / ln 10

double mcd(const FeatureSequence& ref, const FeatureSequence& conv, const AlignmentPath& path,
           McdOptions options = {});

double lsd(const FeatureSequence& ref, const FeatureSequence& conv, const AlignmentPath& path);

enum class F0Scale { Linear, Log };

double f0_rmse(std::span<const double> ref, std::span<const double> conv, const AlignmentPath& path,
               F0Scale scale = F0Scale::Linear);

double pcc(std::span<const double> ref, std::span<const double> conv, const AlignmentPath& path);

/// Metrics for one utterance. Absent inputs leave the matching field empty.
struct MetricReport {
  std::optional<double> mcd_db;
  std::optional<double> lsd_db;
  std::optional<double> f0_rmse_hz;
  std::optional<double> pcc;
  std::size_t n_frames_compared = 0;
};

struct UtteranceFeatures {
  std::optional<FeatureSequence> mcep;
  std::optional<FeatureSequence> spectrum;
  std::optional<std::vector<double>> f0_hz;  // interpolated, positive
};

struct EvalOptions {
  McdOptions mcd;
  F0Scale f0_scale = F0Scale::Linear;
};

/// One DTW path (on MCEPs, else on log spectra, else on F0) evaluates every
/// metric for the pair.
MetricReport evaluate(const UtteranceFeatures& ref, const UtteranceFeatures& conv, EvalOptions options = {});

/// Field-wise mean over reports that carry each field.
MetricReport mean_report(const std::vector<MetricReport>& reports);

}  // namespace evc
