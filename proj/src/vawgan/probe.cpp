#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "evc/error.hpp"
#include "evc/vawgan.hpp"

namespace evc::vawgan {

double latent_emotion_probe(const Matrix& latents, std::span<const int> labels, const ProbeOptions& options) {
  const std::size_t n = latents.rows(), d = latents.cols();
  if (labels.size() != n)
    fail(ErrorKind::Shape, "probe: " + std::to_string(n) + " rows, " + std::to_string(labels.size()) + " labels");
  if (d == 0) fail(ErrorKind::Shape, "probe: latents have no columns");
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0))
    fail(ErrorKind::Config, "probe test fraction must be in (0, 1)");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
  if (by_class.size() < 2) fail(ErrorKind::Data, "probe needs at least 2 classes");
  for (const auto& [label, idx] : by_class)
    if (idx.size() < 2)
      fail(ErrorKind::Data, "probe: class " + std::to_string(label) + " has " + std::to_string(idx.size()) +
                                " example(s), need at least 2");

  // Stratified split, at least one example of each class on each side.
  SeededRng rng(options.seed);
  std::vector<std::size_t> train, test;
  std::vector<std::size_t> cls(n);
  std::size_t k = 0;
  for (auto& [label, idx] : by_class) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    auto n_test = static_cast<std::size_t>(std::lround(options.test_fraction * static_cast<double>(idx.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      cls[idx[i]] = k;
      (i < n_test ? test : train).push_back(idx[i]);
    }
    ++k;
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  const std::size_t K = by_class.size();

  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t i : train)
    for (std::size_t j = 0; j < d; ++j) mean[j] += latents(i, j);
  for (double& v : mean) v /= static_cast<double>(train.size());
  for (std::size_t i : train)
    for (std::size_t j = 0; j < d; ++j) sd[j] += (latents(i, j) - mean[j]) * (latents(i, j) - mean[j]);
  for (double& v : sd) {
    v = std::sqrt(v / static_cast<double>(train.size()));
    if (!(v > 1e-12)) v = 1.0;
  }
  auto feature = [&](std::size_t i, std::size_t j) { return (latents(i, j) - mean[j]) / sd[j]; };

  std::vector<double> w(d * K, 0.0), b(K, 0.0), gw(d * K), gb(K), logits(K);
  auto predict = [&](std::size_t i) {
    for (std::size_t c = 0; c < K; ++c) {
      double s = b[c];
      for (std::size_t j = 0; j < d; ++j) s += feature(i, j) * w[j * K + c];
      logits[c] = s;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double& v : logits) z += (v = std::exp(v - mx));
    for (double& v : logits) v /= z;
  };

  const double inv = 1.0 / static_cast<double>(train.size());
  for (std::size_t step = 0; step < options.steps; ++step) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i : train) {
      predict(i);
      for (std::size_t c = 0; c < K; ++c) {
        const double g = (logits[c] - (cls[i] == c ? 1.0 : 0.0)) * inv;
        gb[c] += g;
        for (std::size_t j = 0; j < d; ++j) gw[j * K + c] += g * feature(i, j);
      }
    }
    for (std::size_t q = 0; q < w.size(); ++q) w[q] -= options.lr * gw[q];
    for (std::size_t c = 0; c < K; ++c) b[c] -= options.lr * gb[c];
  }

  std::size_t correct = 0;
  for (std::size_t i : test) {
    predict(i);
    const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    correct += best == cls[i];
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace evc::vawgan
