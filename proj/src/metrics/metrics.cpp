#include <cmath>
#include <string>

#include "evc/error.hpp"
#include "evc/metrics.hpp"

namespace evc {
namespace {

void check_path(const AlignmentPath& path, std::size_t n, std::size_t m, const char* what) {
  if (path.pairs.empty()) fail(ErrorKind::Shape, std::string(what) + ": empty alignment path");
  for (const auto& [i, j] : path.pairs)
    if (i >= n || j >= m)
      fail(ErrorKind::Shape, std::string(what) + ": path pair (" + std::to_string(i) + "," + std::to_string(j) +
                                 ") outside " + std::to_string(n) + "x" + std::to_string(m));
}

FeatureSequence log_spectrum(const FeatureSequence& s) {
  Matrix m(s.n_frames(), s.dim());
  for (std::size_t i = 0; i < s.n_frames(); ++i)
    for (std::size_t j = 0; j < s.dim(); ++j) {
      const double v = s.data()(i, j);
      if (!(v > 0.0))
        fail(ErrorKind::Domain, "spectral value " + std::to_string(v) + " at frame " + std::to_string(i) + ", dim " +
                                    std::to_string(j) + " is not positive");
      m(i, j) = 20.0 * std::log10(v);
    }
  return FeatureSequence(std::move(m), s.frame_shift_ms());
}

}  // namespace

double mcd(const FeatureSequence& ref, const FeatureSequence& conv, const AlignmentPath& path, McdOptions options) {
  if (ref.dim() != conv.dim())
    fail(ErrorKind::Shape, "mcd: dimension " + std::to_string(ref.dim()) + " vs " + std::to_string(conv.dim()));
  if (options.has_c0 && ref.dim() < 2) fail(ErrorKind::Config, "mcd: excluding c0 needs at least 2 coefficients");
  check_path(path, ref.n_frames(), conv.n_frames(), "mcd");
  const std::size_t first = options.has_c0 ? 1 : 0;
  double total = 0.0;
  for (const auto& [i, j] : path.pairs) {
    double ss = 0.0;
    for (std::size_t d = first; d < ref.dim(); ++d) {
      const double diff = ref.data()(i, d) - conv.data()(j, d);
      ss += diff * diff;
    }
    total += kMcdConstant * std::sqrt(2.0 * ss);
  }
  return total / static_cast<double>(path.pairs.size());
}

double lsd(const FeatureSequence& ref, const FeatureSequence& conv, const AlignmentPath& path) {
  if (ref.dim() != conv.dim())
    fail(ErrorKind::Shape, "lsd: dimension " + std::to_string(ref.dim()) + " vs " + std::to_string(conv.dim()));
  check_path(path, ref.n_frames(), conv.n_frames(), "lsd");
  const FeatureSequence lr = log_spectrum(ref);
  const FeatureSequence lc = log_spectrum(conv);
  double total = 0.0;
  for (const auto& [i, j] : path.pairs) {
    double ss = 0.0;
    for (std::size_t d = 0; d < ref.dim(); ++d) {
      const double diff = lr.data()(i, d) - lc.data()(j, d);
      ss += diff * diff;
    }
    total += std::sqrt(ss / static_cast<double>(ref.dim()));
  }
  return total / static_cast<double>(path.pairs.size());
}

double f0_rmse(std::span<const double> ref, std::span<const double> conv, const AlignmentPath& path, F0Scale scale) {
  check_path(path, ref.size(), conv.size(), "f0_rmse");
  double ss = 0.0;
  for (const auto& [i, j] : path.pairs) {
    double a = ref[i], b = conv[j];
    if (scale == F0Scale::Log) {
      if (!(a > 0.0) || !(b > 0.0)) fail(ErrorKind::Domain, "f0_rmse: log scale needs positive F0");
      a = std::log(a);
      b = std::log(b);
    }
    ss += (a - b) * (a - b);
  }
  return std::sqrt(ss / static_cast<double>(path.pairs.size()));
}

double pcc(std::span<const double> ref, std::span<const double> conv, const AlignmentPath& path) {
  check_path(path, ref.size(), conv.size(), "pcc");
  const double n = static_cast<double>(path.pairs.size());
  double ma = 0.0, mb = 0.0;
  for (const auto& [i, j] : path.pairs) {
    ma += ref[i];
    mb += conv[j];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (const auto& [i, j] : path.pairs) {
    const double da = ref[i] - ma, db = conv[j] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) fail(ErrorKind::ZeroVariance, "pcc: a sequence is constant along the path");
  const double r = sab / std::sqrt(saa * sbb);
  return std::max(-1.0, std::min(1.0, r));
}

MetricReport evaluate(const UtteranceFeatures& ref, const UtteranceFeatures& conv, EvalOptions options) {
  AlignmentPath path;
  if (ref.mcep && conv.mcep) {
    path = dtw_align(*ref.mcep, *conv.mcep);
  } else if (ref.spectrum && conv.spectrum) {
    path = dtw_align(log_spectrum(*ref.spectrum), log_spectrum(*conv.spectrum));
  } else if (ref.f0_hz && conv.f0_hz) {
    path = dtw_align(FeatureSequence::column(*ref.f0_hz, 5.0), FeatureSequence::column(*conv.f0_hz, 5.0));
  } else {
    fail(ErrorKind::Data, "evaluate: reference and converted utterances share no feature type");
  }
  MetricReport r;
  r.n_frames_compared = path.pairs.size();
  if (ref.mcep && conv.mcep) r.mcd_db = mcd(*ref.mcep, *conv.mcep, path, options.mcd);
  // The path is indexed by the aligning feature; other streams must share its frame counts.
  const auto fits = [&](std::size_t n, std::size_t m) {
    return path.pairs.back().first == n - 1 && path.pairs.back().second == m - 1;
  };
  if (ref.spectrum && conv.spectrum) {
    if (!fits(ref.spectrum->n_frames(), conv.spectrum->n_frames()))
      fail(ErrorKind::Shape, "spectrum frame counts differ from the aligned stream");
    r.lsd_db = lsd(*ref.spectrum, *conv.spectrum, path);
  }
  if (ref.f0_hz && conv.f0_hz) {
    if (!fits(ref.f0_hz->size(), conv.f0_hz->size()))
      fail(ErrorKind::Shape, "F0 frame counts differ from the aligned stream");
    r.f0_rmse_hz = f0_rmse(*ref.f0_hz, *conv.f0_hz, path, options.f0_scale);
    r.pcc = pcc(*ref.f0_hz, *conv.f0_hz, path);
  }
  return r;
}

MetricReport mean_report(const std::vector<MetricReport>& reports) {
  MetricReport out;
  const auto average = [&](auto member) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : reports)
      if ((r.*member).has_value()) {
        sum += *(r.*member);
        ++n;
      }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  out.mcd_db = average(&MetricReport::mcd_db);
  out.lsd_db = average(&MetricReport::lsd_db);
  out.f0_rmse_hz = average(&MetricReport::f0_rmse_hz);
  out.pcc = average(&MetricReport::pcc);
  for (const auto& r : reports) out.n_frames_compared += r.n_frames_compared;
  return out;
}

}  // namespace evc
