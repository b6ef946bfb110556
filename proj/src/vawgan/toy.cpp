#include <cmath>
#include <numbers>
#include <string>

#include "evc/error.hpp"
#include "evc/vawgan.hpp"

namespace evc::vawgan {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kContentBases = 4;
constexpr double kFrameShiftMs = 5.0;

}  // namespace

void validate(const ToyDatasetSpec& s) {
  if (s.n_emotions < 2 || s.n_emotions > static_cast<std::size_t>(kDefaultEmotionClasses))
    fail(ErrorKind::Config, "toy dataset needs 2.." + std::to_string(kDefaultEmotionClasses) + " emotions");
  if (s.utts_per_emotion < 1) fail(ErrorKind::Config, "toy dataset needs at least one utterance per emotion");
  if (s.frames < 32) fail(ErrorKind::Config, "toy utterances need at least 32 frames");
  if (s.dim < 8) fail(ErrorKind::Config, "toy feature dim must be at least 8");
  if (!std::isfinite(s.tilt) || !std::isfinite(s.f0_coupling)) fail(ErrorKind::Config, "toy tilt/coupling not finite");
}

std::vector<Utterance> gen_toy_dataset(const ToyDatasetSpec& spec) {
  validate(spec);
  const std::size_t n = spec.frames, dim = spec.dim;
  const double last = static_cast<double>(dim - 1);
  SeededRng root(spec.seed);
  std::vector<Utterance> out;
  out.reserve(spec.n_emotions * spec.utts_per_emotion);

  for (std::size_t k = 0; k < spec.n_emotions; ++k) {
    const double tilt = spec.tilt * (1.0 - 2.0 * static_cast<double>(k) / static_cast<double>(spec.n_emotions - 1));
    const double f0_base = 120.0 + 60.0 * static_cast<double>(k);
    for (std::size_t u = 0; u < spec.utts_per_emotion; ++u) {
      SeededRng rng = root.fork(k * 1000003ULL + u);

      // F0: slow sway for the first emotion, faster sway plus jitter otherwise.
      const double phase = rng.uniform(0.0, kTwoPi);
      std::vector<double> hz(n);
      for (std::size_t t = 0; t < n; ++t) {
        const double tt = static_cast<double>(t);
        if (k == 0)
          hz[t] = f0_base + 10.0 * std::sin(kTwoPi * tt / 100.0 + phase);
        else
          hz[t] = f0_base + 15.0 * std::sin(kTwoPi * tt / 25.0 + phase) + 3.0 * rng.normal();
      }

      // Smooth content trajectories on a cosine basis.
      double amp[kContentBases], period[kContentBases], ph[kContentBases], offset[kContentBases];
      for (std::size_t b = 0; b < kContentBases; ++b) {
        amp[b] = rng.uniform(0.3, 1.0);
        period[b] = rng.uniform(20.0, 80.0);
        ph[b] = rng.uniform(0.0, kTwoPi);
        offset[b] = 0.3 * rng.normal();
      }

      Matrix sp(n, dim);
      for (std::size_t t = 0; t < n; ++t) {
        const double tt = static_cast<double>(t);
        const double ripple = spec.f0_coupling * (std::log(hz[t]) - std::log(150.0));
        for (std::size_t d = 0; d < dim; ++d) {
          const double f = static_cast<double>(d) / last;
          double v = -2.0 * f + tilt * (2.0 * f - 1.0) + ripple * std::sin(kTwoPi * 3.0 * f);
          for (std::size_t b = 0; b < kContentBases; ++b)
            v += (offset[b] + amp[b] * std::sin(kTwoPi * tt / period[b] + ph[b])) *
                 std::cos(std::numbers::pi * static_cast<double>(b + 1) * f);
          v += 0.05 * rng.normal();
          sp(t, d) = std::exp(v);
        }
      }

      // Two unvoiced runs away from each other.
      for (int r = 0; r < 2; ++r) {
        const std::size_t len = 3 + rng.below(6);
        const std::size_t half = n / 2;
        const std::size_t start = static_cast<std::size_t>(r) * half + rng.below(half - len);
        for (std::size_t t = start; t < start + len; ++t) hz[t] = 0.0;
      }

      out.push_back(Utterance{"emo" + std::to_string(k) + "_" + std::to_string(u), static_cast<int>(k),
                              FeatureSequence(std::move(sp), kFrameShiftMs),
                              F0Contour::from_hz(std::move(hz), kFrameShiftMs)});
    }
  }
  return out;
}

}  // namespace evc::vawgan
