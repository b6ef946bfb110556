#include <cmath>
#include <numbers>
#include <numeric>

#include "evc/evcf.hpp"
#include "evc/vawgan.hpp"
#include "support.hpp"

using namespace evc;
using namespace evc::vawgan;
using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

Tensor rand_tensor(SeededRng& rng, Shape shape, double lo = -2.0, double hi = 2.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

ToyDatasetSpec small_toy(std::uint64_t seed = 7) {
  ToyDatasetSpec s;
  s.utts_per_emotion = 6;
  s.frames = 64;
  s.dim = 16;
  s.seed = seed;
  return s;
}

OptimConfig quick_optim(std::size_t epochs) {
  OptimConfig o;
  o.epochs = epochs;
  return o;
}

// Spectrum model trained once on the small toy corpus and shared by the
// behavioral checks.
struct Fixture {
  std::vector<Utterance> utts;
  SpectrumCorpus corpus;
  TrainedModel model;
};

const Fixture& trained() {
  static const Fixture f = [] {
    Fixture x;
    x.utts = gen_toy_dataset(small_toy());
    x.corpus = build_spectrum_corpus(x.utts);
    const NetworkSpec spec = dense_preset(x.corpus.data.features.cols(), 1);
    x.model = train_pipeline(x.corpus.data, spec, LossWeights{1.0, 200.0}, quick_optim(80), 11);
    x.model.meta = x.corpus.meta;
    return x;
  }();
  return f;
}

double mean_sq_diff(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
  return s / static_cast<double>(a.data().size());
}

std::vector<double> column_means(const Matrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += m(r, c) / static_cast<double>(m.rows());
  return out;
}

}  // namespace

TEST_CASE("kl closed form examples") {
  CHECK(kl_to_standard_normal(GaussianPosterior{{0.0, 0.0}, {0.0, 0.0}}) == 0.0);
  CHECK(std::abs(kl_to_standard_normal(GaussianPosterior{{1.0}, {0.0}}) - 0.5) < 1e-12);
  CHECK_ERROR_KIND(kl_to_standard_normal(GaussianPosterior{{1.0}, {0.0, 1.0}}), ErrorKind::Shape);
  CHECK_ERROR_KIND(kl_to_standard_normal(GaussianPosterior{{std::nan("")}, {0.0}}), ErrorKind::NonFinite);

  SeededRng rng(1);
  for (int i = 0; i < 1000; ++i) {
    GaussianPosterior p{test::random_vector(rng, 4, -2, 2), test::random_vector(rng, 4, -3, 3)};
    CHECK(kl_to_standard_normal(p) > 0.0);
  }
}

TEST_CASE("kl agrees with a monte carlo estimate") {
  SeededRng rng(2);
  for (int trial = 0; trial < 3; ++trial) {
    const GaussianPosterior p{test::random_vector(rng, 3, -1, 1), test::random_vector(rng, 3, -1, 1)};
    const std::size_t n = 1000000;
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // log q(z) - log p(z) for one draw z ~ q.
      double term = 0.0;
      for (std::size_t d = 0; d < 3; ++d) {
        const double sd = std::exp(0.5 * p.log_var[d]);
        const double e = rng.normal();
        const double z = p.mean[d] + sd * e;
        term += -0.5 * e * e - std::log(sd) + 0.5 * z * z;
      }
      s += term;
      s2 += term * term;
    }
    const double est = s / n;
    const double se = std::sqrt((s2 / n - est * est) / n);
    CHECK(std::abs(est - kl_to_standard_normal(p)) <= 3.0 * se);
  }
}

TEST_CASE("kl on the tape") {
  Tape t;
  const Var mu = t.variable(Tensor({2, 2}, {1.0, 0.0, 0.0, 0.0}));
  const Var lv = t.variable(Tensor({2, 2}, 0.0));
  CHECK(kl_to_standard_normal(mu, lv).value().item() == doctest::Approx(0.25).epsilon(1e-15));

  SeededRng rng(3);
  double worst = 0.0;
  for (int p = 0; p < 20; ++p) {
    const Tensor lv0 = rand_tensor(rng, {3, 4});
    const Tensor mu0 = rand_tensor(rng, {3, 4});
    worst = std::max(worst, ad::grad_check([&](Tape& tp, Var m) { return kl_to_standard_normal(m, tp.constant(lv0)); }, mu0));
    worst = std::max(worst, ad::grad_check([&](Tape& tp, Var l) { return kl_to_standard_normal(tp.constant(mu0), l); }, lv0));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("reparameterization") {
  SeededRng rng(4);
  const GaussianPosterior tight{{0.3, -1.2}, {-50.0, -50.0}};
  const auto z = reparameterize(tight, rng);
  CHECK(std::abs(z[0] - 0.3) < 1e-10);
  CHECK(std::abs(z[1] + 1.2) < 1e-10);

  const GaussianPosterior p{{0.5, -1.0, 2.0}, {0.0, std::log(4.0), std::log(0.25)}};
  const std::size_t n = 100000;
  std::vector<double> sum(3, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = reparameterize(p, rng);
    for (std::size_t d = 0; d < 3; ++d) sum[d] += s[d];
  }
  for (std::size_t d = 0; d < 3; ++d) {
    const double sd = std::exp(0.5 * p.log_var[d]);
    CHECK(std::abs(sum[d] / n - p.mean[d]) <= 4.0 * sd / std::sqrt(static_cast<double>(n)));
  }

  // d/dmu E[z^2] = 2 mu, estimated from one batch of draws.
  Tape t;
  const Var mu = t.variable(Tensor({1, 1}, 1.0));
  const Var lv = t.variable(Tensor({1, 1}, 0.0));
  const Var ones = t.constant(Tensor({n, 1}, 1.0));
  const Var zb = reparameterize(ad::matmul(ones, mu), ad::matmul(ones, lv), rng);
  t.backward(ad::mean(ad::square(zb)));
  CHECK(t.grad(mu)[0] == doctest::Approx(2.0).epsilon(0.03));
  // d/dlogvar E[z^2] = sigma^2 = 1 here.
  CHECK(t.grad(lv)[0] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("vae objective") {
  Tape t;
  const Var x = t.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  const Var zero = t.constant(Tensor({2, 4}, 0.0));
  CHECK(vae_objective(x, x, zero, zero, LossWeights{}).value().item() == 0.0);
  const Var off = ad::add_scalar(x, 0.5);
  CHECK(vae_objective(x, off, zero, zero, LossWeights{1.0, 3.0}).value().item() == doctest::Approx(3.0 * 0.25));
  CHECK_ERROR_KIND(vae_objective(x, t.constant(Tensor({3, 2})), zero, zero, LossWeights{}), ErrorKind::Shape);
  CHECK_ERROR_KIND(validate(LossWeights{-1.0, 1.0}), ErrorKind::Config);
  CHECK_ERROR_KIND(validate(LossWeights{1.0, 0.0}), ErrorKind::Config);

  SeededRng rng(5);
  const LossWeights w{1.0, 2.5};
  double worst = 0.0;
  for (int p = 0; p < 20; ++p) {
    const Tensor x0 = rand_tensor(rng, {3, 5}), r0 = rand_tensor(rng, {3, 5});
    const Tensor m0 = rand_tensor(rng, {3, 2}), l0 = rand_tensor(rng, {3, 2});
    worst = std::max(worst, ad::grad_check([&](Tape& tp, Var v) {
      return vae_objective(tp.constant(x0), v, tp.constant(m0), tp.constant(l0), w);
    }, r0));
    worst = std::max(worst, ad::grad_check([&](Tape& tp, Var v) {
      return vae_objective(v, tp.constant(r0), tp.constant(m0), tp.constant(l0), w);
    }, x0));
    worst = std::max(worst, ad::grad_check([&](Tape& tp, Var v) {
      return vae_objective(tp.constant(x0), tp.constant(r0), v, tp.constant(l0), w);
    }, m0));
    worst = std::max(worst, ad::grad_check([&](Tape& tp, Var v) {
      return vae_objective(tp.constant(x0), tp.constant(r0), tp.constant(m0), v, w);
    }, l0));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("adversarial losses") {
  Tape t;
  const Var same = t.constant(Tensor({3, 1}, {0.2, -0.4, 1.0}));
  CHECK(critic_losses(same, same, LossWeights{}).critic_loss.value().item() == 0.0);
  const auto l = critic_losses(t.constant(Tensor({1, 1}, 1.0)), t.constant(Tensor({1, 1}, 0.0)), LossWeights{});
  CHECK(l.critic_loss.value().item() == -1.0);
  CHECK(l.gen_adv_loss.value().item() == 0.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double f = -1.0; f <= 1.0; f += 0.25) {
    const double g = critic_losses(same, t.constant(Tensor({1, 1}, f)), LossWeights{0.7, 1.0}).gen_adv_loss.value().item();
    CHECK(g < prev);
    prev = g;
  }
  CHECK_ERROR_KIND(critic_losses(t.constant(Tensor({0, 1})), same, LossWeights{}), ErrorKind::Shape);

  SeededRng rng(6);
  const LossWeights w{0.8, 1.0};
  double worst = 0.0;
  for (int p = 0; p < 20; ++p) {
    const Tensor r0 = rand_tensor(rng, {4, 1}), f0 = rand_tensor(rng, {4, 1});
    worst = std::max(worst, ad::grad_check([&](Tape& tp, Var v) { return critic_losses(v, tp.constant(f0), w).critic_loss; }, r0));
    worst = std::max(worst, ad::grad_check([&](Tape& tp, Var v) { return critic_losses(tp.constant(r0), v, w).critic_loss; }, f0));
    worst = std::max(worst, ad::grad_check([&](Tape& tp, Var v) { return critic_losses(tp.constant(r0), v, w).gen_adv_loss; }, f0));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("toy dataset construction") {
  const ToyDatasetSpec spec = small_toy(3);
  const auto a = gen_toy_dataset(spec);
  const auto b = gen_toy_dataset(spec);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].spectrum == b[i].spectrum);
    CHECK(a[i].f0.values() == b[i].f0.values());
    CHECK(a[i].id == b[i].id);
  }
  CHECK_FALSE(gen_toy_dataset(small_toy(4))[0].spectrum == a[0].spectrum);

  double f0_sum[2] = {0, 0}, f0_n[2] = {0, 0};
  std::vector<double> logsp[2] = {std::vector<double>(spec.dim, 0.0), std::vector<double>(spec.dim, 0.0)};
  for (const auto& u : a) {
    const auto k = static_cast<std::size_t>(u.emotion);
    CHECK(u.f0.voiced_count() < u.f0.size());
    for (std::size_t t = 0; t < u.f0.size(); ++t)
      if (u.f0.voiced()[t]) {
        f0_sum[k] += u.f0.values()[t];
        f0_n[k] += 1;
      }
    for (std::size_t t = 0; t < u.spectrum.n_frames(); ++t)
      for (std::size_t d = 0; d < spec.dim; ++d) logsp[k][d] += std::log(u.spectrum.data()(t, d));
  }
  CHECK(f0_sum[1] / f0_n[1] - f0_sum[0] / f0_n[0] >= 40.0);

  // Least-squares slope of each class's mean log spectrum over [0, 1].
  double slope[2];
  for (int k = 0; k < 2; ++k) {
    double sf = 0, sv = 0, sff = 0, sfv = 0;
    const double n = static_cast<double>(spec.dim);
    for (std::size_t d = 0; d < spec.dim; ++d) {
      const double f = static_cast<double>(d) / (n - 1), v = logsp[k][d];
      sf += f;
      sv += v;
      sff += f * f;
      sfv += f * v;
    }
    slope[k] = (n * sfv - sf * sv) / (n * sff - sf * sf);
  }
  const double mid = 0.5 * (slope[0] + slope[1]);
  CHECK(slope[0] - mid > 0.0);
  CHECK(slope[1] - mid < 0.0);

  ToyDatasetSpec bad = spec;
  bad.n_emotions = 1;
  CHECK_ERROR_KIND(gen_toy_dataset(bad), ErrorKind::Config);
}

TEST_CASE("network presets") {
  const NetworkSpec d = dense_preset(32, 1);
  CHECK_NOTHROW(validate(d));
  CHECK(d.decoder_input_dim() == 16 + 10 + 1);
  const NetworkSpec back = network_spec_from_json(network_spec_to_json(d));
  CHECK(network_spec_to_json(back) == network_spec_to_json(d));

  const NetworkSpec p = paper_preset(1);
  CHECK_NOTHROW(validate(p));
  CHECK(p.latent_dim == 128);
  CHECK(p.cond.emotion == 10);
  std::vector<std::size_t> enc_channels, dec_kernels, critic_kernels;
  for (const auto& l : p.encoder)
    if (l.kind == LayerKind::Conv1d) {
      enc_channels.push_back(l.conv.out_channels);
      CHECK(l.conv.kernel == 7);
      CHECK(l.conv.stride == 3);
    }
  for (const auto& l : p.decoder) {
    if (l.kind == LayerKind::ConvTranspose1d) dec_kernels.push_back(l.deconv.kernel);
    if (l.kind == LayerKind::Conv1d) dec_kernels.push_back(l.conv.kernel);
  }
  for (const auto& l : p.critic)
    if (l.kind == LayerKind::Conv1d) critic_kernels.push_back(l.conv.kernel);
  CHECK(enc_channels == std::vector<std::size_t>{16, 32, 64, 128, 256});
  CHECK(dec_kernels == std::vector<std::size_t>{9, 7, 7, 1025});
  CHECK(critic_kernels == std::vector<std::size_t>{7, 7, 115});

  CHECK_ERROR_KIND(preset_by_name("paper", 32, 1), ErrorKind::Config);
  CHECK_ERROR_KIND(preset_by_name("huge", 32, 1), ErrorKind::Config);
  NetworkSpec broken = d;
  broken.decoder.back().out = 31;
  CHECK_ERROR_KIND(validate(broken), ErrorKind::Shape);
}

TEST_CASE("paper preset runs one forward and backward pass") {
  const NetworkSpec p = paper_preset(1);
  SeededRng rng(8);
  const ModelParams params = init_params(p, rng, 0.01);
  Tape t;
  const auto enc = bind_params(t, params.encoder, true);
  const auto dec = bind_params(t, params.decoder, true);
  const auto cri = bind_params(t, params.critic, true);
  const std::size_t B = 2;
  const Var x = t.constant(rand_tensor(rng, {B, 513}, -1, 1));
  const Var h = run_stack(p.encoder, enc, x);
  REQUIRE(h.shape() == Shape{B, 256});
  const Var mu = ad::slice_cols(h, 0, 128), lv = ad::slice_cols(h, 128, 256);
  const Var z = reparameterize(mu, lv, rng);
  Tensor cond({B, 11}, 0.0);
  cond[0] = cond[11] = 1.0;
  cond[10] = cond[21] = 0.3;
  const Var zc[] = {z, t.constant(cond)};
  const Var xhat = run_stack(p.decoder, dec, ad::concat(zc, 1));
  REQUIRE(xhat.shape() == Shape{B, 513});
  const auto adv = critic_losses(run_stack(p.critic, cri, x), run_stack(p.critic, cri, xhat), LossWeights{});
  const Var loss = ad::add(vae_objective(x, xhat, mu, lv, LossWeights{}), adv.gen_adv_loss);
  CHECK(std::isfinite(loss.value().item()));
  t.backward(loss);
  for (const auto& v : enc) CHECK(t.grad(v).all_finite());
  for (const auto& v : dec) CHECK(t.grad(v).all_finite());
  t.backward(adv.critic_loss);
  for (const auto& v : cri) CHECK(t.grad(v).all_finite());
}

TEST_CASE("training configuration errors") {
  const auto corpus = build_spectrum_corpus(gen_toy_dataset(small_toy()));
  const NetworkSpec spec = dense_preset(16, 1);
  OptimConfig o = quick_optim(1);
  o.decay = 1.0;
  CHECK_ERROR_KIND(train_pipeline(corpus.data, spec, LossWeights{}, o, 1), ErrorKind::Config);
  CHECK_ERROR_KIND(train_pipeline(corpus.data, dense_preset(15, 1), LossWeights{}, quick_optim(1), 1), ErrorKind::Shape);
  TrainingData empty = corpus.data;
  empty.features = Matrix(0, 16);
  empty.labels.clear();
  CHECK_ERROR_KIND(train_pipeline(empty, spec, LossWeights{}, quick_optim(1), 1), ErrorKind::Data);
  o = quick_optim(2);
  o.lr = 1e200;
  CHECK_ERROR_KIND(train_pipeline(corpus.data, spec, LossWeights{}, o, 1), ErrorKind::TrainingDiverged);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  const auto corpus = build_spectrum_corpus(gen_toy_dataset(small_toy()));
  const NetworkSpec spec = dense_preset(16, 1);
  OptimConfig o = quick_optim(1);
  o.lr = 0.0;
  const TrainedModel one = train_pipeline(corpus.data, spec, LossWeights{}, o, 5);
  o.epochs = 3;
  const TrainedModel three = train_pipeline(corpus.data, spec, LossWeights{}, o, 5);
  CHECK(one.params == three.params);
  CHECK(three.history.size() == 3);
  CHECK(three.history[0] == one.history[0]);
}

TEST_CASE("training is deterministic and clips the critic") {
  const auto corpus = build_spectrum_corpus(gen_toy_dataset(small_toy()));
  const NetworkSpec spec = dense_preset(16, 1);
  OptimConfig o = quick_optim(4);
  o.n_critic = 2;
  o.target_only_real = true;
  std::vector<std::size_t> seen;
  const TrainedModel a = train_pipeline(corpus.data, spec, LossWeights{}, o, 9,
                                        [&](std::size_t e, const EpochStats&) { seen.push_back(e); });
  const TrainedModel b = train_pipeline(corpus.data, spec, LossWeights{}, o, 9);
  const TrainedModel c = train_pipeline(corpus.data, spec, LossWeights{}, o, 10);
  CHECK(seen == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(a.trained);
  CHECK(a.history == b.history);
  CHECK(a.params == b.params);
  CHECK_FALSE(a.history == c.history);
  for (const auto& w : a.params.critic)
    for (double v : w.values()) CHECK(std::abs(v) <= o.clip);
}

TEST_CASE("trained toy model behaves as a conditional decoder") {
  const Fixture& f = trained();
  const auto& h = f.model.history;
  REQUIRE(h.size() == 80);
  CHECK(h.back().recon_mse <= 0.5 * h.front().recon_mse);

  const Utterance& u = f.utts.front();
  REQUIRE(u.emotion == 0);
  const FeatureSequence x = spectrum_frames(f.model.meta, u.spectrum);
  const Matrix cond = f0_condition(f.model.meta, interpolate_unvoiced(u.f0).values);
  const Matrix as_a = reconstruct(f.model, x.data(), EmotionCode(0), cond);
  const Matrix as_b = reconstruct(f.model, x.data(), EmotionCode(1), cond);
  CHECK(mean_sq_diff(as_a, as_b) > 0.0);

  Matrix other_f0 = cond;
  for (double& v : other_f0.data()) v += 1.0;
  CHECK(mean_sq_diff(as_a, reconstruct(f.model, x.data(), EmotionCode(0), other_f0)) > 0.0);

  // Swapping the emotion code moves the output towards the other class.
  std::vector<double> mean_class[2] = {std::vector<double>(16, 0.0), std::vector<double>(16, 0.0)};
  double count[2] = {0, 0};
  for (std::size_t r = 0; r < f.corpus.data.features.rows(); ++r) {
    const auto k = static_cast<std::size_t>(f.corpus.data.labels[r]);
    for (std::size_t c = 0; c < 16; ++c) mean_class[k][c] += f.corpus.data.features(r, c);
    count[k] += 1;
  }
  const auto ma = column_means(as_a), mb = column_means(as_b);
  double dot = 0, na = 0, nb = 0;
  for (std::size_t c = 0; c < 16; ++c) {
    const double shift = mb[c] - ma[c];
    const double dir = mean_class[1][c] / count[1] - mean_class[0][c] / count[0];
    dot += shift * dir;
    na += shift * shift;
    nb += dir * dir;
  }
  CHECK(dot / std::sqrt(na * nb) > 0.0);
}

TEST_CASE("identity conversion reproduces the reconstruction") {
  const Fixture& f = trained();
  const Utterance& u = f.utts[7];
  const EmotionCode own(u.emotion);
  const ConversionResult r = convert(u.spectrum, u.f0, own, own, f.model, nullptr);
  const FeatureSequence x = spectrum_frames(f.model.meta, u.spectrum);
  const Matrix recon =
      reconstruct(f.model, x.data(), own, f0_condition(f.model.meta, interpolate_unvoiced(u.f0).values));
  const double recon_err = mean_sq_diff(recon, x.data());
  CHECK(std::sqrt(mean_sq_diff(r.normalized, recon)) <= 1.5 * std::sqrt(recon_err));
  CHECK(r.spectrum.n_frames() == u.spectrum.n_frames());
  CHECK(r.f0.values() == u.f0.values());
  for (double v : r.spectrum.data().data()) CHECK(v > 0.0);

  TrainedModel untrained = f.model;
  untrained.trained = false;
  CHECK_ERROR_KIND(convert(u.spectrum, u.f0, own, own, untrained, nullptr), ErrorKind::State);
  CHECK_ERROR_KIND(encode_mean(f.model, Matrix(0, 16)), ErrorKind::Shape);
  CHECK_ERROR_KIND(FeatureSequence(Matrix(0, 16), 5.0), ErrorKind::Shape);
  CHECK_ERROR_KIND(decode_conditioned(f.model, Matrix(3, 16), own, Matrix(3, 2)), ErrorKind::Shape);
  CHECK_ERROR_KIND(decode_conditioned(f.model, Matrix(3, 15), own, Matrix(3, 1)), ErrorKind::Shape);
  const F0Contour short_f0 = F0Contour::from_hz(std::vector<double>(10, 100.0), 5.0);
  CHECK_ERROR_KIND(convert(u.spectrum, short_f0, own, own, f.model, nullptr), ErrorKind::LengthMismatch);
}

TEST_CASE("conversion through a prosody model") {
  const Fixture& f = trained();
  const SpectrumCorpus pc = build_prosody_corpus(f.utts);
  CHECK(pc.data.features.cols() == 513);
  CHECK(pc.data.f0_cond.cols() == 0);
  NetworkSpec ps = dense_preset(513, 0);
  TrainedModel prosody = train_pipeline(pc.data, ps, LossWeights{1.0, 200.0}, quick_optim(2), 3);
  prosody.meta = pc.meta;
  const Utterance& u = f.utts.front();
  const ConversionResult r = convert(u.spectrum, u.f0, EmotionCode(0), EmotionCode(1), f.model, &prosody);
  CHECK(r.f0.voiced() == u.f0.voiced());
  for (std::size_t t = 0; t < r.f0.size(); ++t) {
    if (u.f0.voiced()[t]) {
      CHECK(r.f0.values()[t] > 0.0);
    } else {
      CHECK(r.f0.values()[t] == 0.0);
    }
  }
  CHECK(r.spectrum.data().cols() == 16);
  CHECK_ERROR_KIND(convert(u.spectrum, u.f0, EmotionCode(0), EmotionCode(1), prosody, nullptr), ErrorKind::State);
}

TEST_CASE("emotion probe") {
  const Fixture& f = trained();
  const auto& d = f.corpus.data;
  CHECK(latent_emotion_probe(d.features, d.labels) > 0.9);

  std::vector<int> shuffled = d.labels;
  SeededRng rng(12);
  for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
  const double chance = latent_emotion_probe(d.features, shuffled);
  CHECK(chance >= 0.35);
  CHECK(chance <= 0.65);

  CHECK(latent_emotion_probe(d.features, d.labels, ProbeOptions{3}) ==
        latent_emotion_probe(d.features, d.labels, ProbeOptions{3}));
  std::vector<int> lonely(d.labels.size(), 0);
  lonely[0] = 1;
  CHECK_ERROR_KIND(latent_emotion_probe(d.features, lonely), ErrorKind::Data);
  CHECK_ERROR_KIND(latent_emotion_probe(d.features, std::vector<int>(d.labels.size(), 0)), ErrorKind::Data);
}

TEST_CASE("model files round trip") {
  const Fixture& f = trained();
  const auto dir = test::scratch("model");
  save_model(dir / "m", f.model);
  const TrainedModel back = load_model(dir / "m");
  CHECK(back.trained);
  CHECK(back.seed == f.model.seed);
  CHECK(back.history == f.model.history);
  CHECK(network_spec_to_json(back.spec) == network_spec_to_json(f.model.spec));
  CHECK(back.meta.scale_min == f.model.meta.scale_min);
  CHECK(back.meta.f0_stats.mean == f.model.meta.f0_stats.mean);
  REQUIRE(back.params.decoder.size() == f.model.params.decoder.size());
  for (std::size_t i = 0; i < back.params.decoder.size(); ++i)
    for (std::size_t j = 0; j < back.params.decoder[i].size(); ++j)
      CHECK(back.params.decoder[i][j] == static_cast<double>(static_cast<float>(f.model.params.decoder[i][j])));
  save_model(dir / "again", back);
  CHECK(load_model(dir / "again").params == back.params);

  CHECK_ERROR_KIND(load_model(dir / "missing"), ErrorKind::Io);
  std::filesystem::create_directories(dir / "broken");
  write_file_atomic(dir / "broken" / "manifest.json", "{\"format\": \"evc-model\"");
  CHECK_ERROR_KIND(load_model(dir / "broken"), ErrorKind::Config);
  std::filesystem::remove(dir / "again" / "params" / "critic_00.evcf");
  CHECK_ERROR_KIND(load_model(dir / "again"), ErrorKind::Io);
}
