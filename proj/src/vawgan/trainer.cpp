#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "evc/error.hpp"
#include "evc/vawgan.hpp"

namespace evc::vawgan {

std::string_view to_string(PipelineKind k) { return k == PipelineKind::Spectrum ? "spectrum" : "prosody"; }
std::string_view to_string(F0CondMode m) { return m == F0CondMode::NormLogF0 ? "norm_log_f0" : "raw_hz"; }

void validate(const TrainingData& d) {
  if (d.features.rows() == 0 || d.features.cols() == 0) fail(ErrorKind::Data, "training set is empty");
  if (d.labels.size() != d.features.rows())
    fail(ErrorKind::Shape, "training set has " + std::to_string(d.features.rows()) + " examples but " +
                               std::to_string(d.labels.size()) + " labels");
  if (d.f0_cond.rows() != d.features.rows() && !(d.f0_cond.cols() == 0))
    fail(ErrorKind::Shape, "F0 condition has " + std::to_string(d.f0_cond.rows()) + " rows, expected " +
                               std::to_string(d.features.rows()));
  if (d.n_emotions < 2) fail(ErrorKind::Config, "training needs at least 2 emotion classes");
  for (int y : d.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= d.n_emotions)
      fail(ErrorKind::Config, "label " + std::to_string(y) + " outside 0.." + std::to_string(d.n_emotions - 1));
  for (double v : d.features.data())
    if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "training features contain non-finite values");
}

void validate(const OptimConfig& o) {
  if (!std::isfinite(o.lr) || o.lr < 0.0) fail(ErrorKind::Config, "learning rate must be finite and >= 0");
  if (!(o.decay >= 0.0 && o.decay < 1.0)) fail(ErrorKind::Config, "RMSProp decay must be in [0, 1)");
  if (!(o.eps > 0.0)) fail(ErrorKind::Config, "RMSProp eps must be > 0");
  if (!(o.clip > 0.0) || !std::isfinite(o.clip)) fail(ErrorKind::Config, "clip value must be finite and > 0");
  if (o.epochs == 0 || o.batch == 0 || o.n_critic == 0)
    fail(ErrorKind::Config, "epochs, batch and n_critic must be >= 1");
}

OptimConfig paper_optim() {
  OptimConfig o;
  o.lr = 1e-5;
  o.batch = 256;
  o.epochs = 45;
  return o;
}

namespace {

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) std::copy(m.row(idx[i]).begin(), m.row(idx[i]).end(), out.row(i).begin());
  return out;
}

ad::Tensor to_tensor(const Matrix& m) { return ad::Tensor(ad::Shape{m.rows(), m.cols()}, m.data()); }

// [B, emotion + f0] decoder condition.
ad::Tensor condition(std::span<const int> labels, const Matrix& f0, std::size_t n_classes) {
  const std::size_t width = n_classes + f0.cols();
  ad::Tensor c(ad::Shape{labels.size(), width});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    c[i * width + static_cast<std::size_t>(labels[i])] = 1.0;
    for (std::size_t j = 0; j < f0.cols(); ++j) c[i * width + n_classes + j] = f0(i, j);
  }
  return c;
}

bool finite(std::span<const ad::Tensor> ts) {
  for (const auto& t : ts)
    if (!t.all_finite()) return false;
  return true;
}

[[noreturn]] void diverged(std::size_t epoch, const std::string& what) {
  fail(ErrorKind::TrainingDiverged, "epoch " + std::to_string(epoch) + ": " + what);
}

}  // namespace

TrainedModel train_pipeline(const TrainingData& data, const NetworkSpec& spec, const LossWeights& w,
                            const OptimConfig& opt, std::uint64_t seed, const EpochCallback& on_epoch) {
  validate(data);
  validate(spec);
  validate(w);
  validate(opt);
  if (data.features.cols() != spec.input_dim)
    fail(ErrorKind::Shape, "features are " + std::to_string(data.features.cols()) + "-dim, network expects " +
                               std::to_string(spec.input_dim));
  if (data.f0_cond.cols() != spec.cond.f0)
    fail(ErrorKind::Shape, "F0 condition is " + std::to_string(data.f0_cond.cols()) + " wide, network expects " +
                               std::to_string(spec.cond.f0));
  if (data.n_emotions > spec.cond.emotion)
    fail(ErrorKind::Shape, std::to_string(data.n_emotions) + " emotions exceed the network's " +
                               std::to_string(spec.cond.emotion) + " classes");

  SeededRng root(seed);
  SeededRng init_rng = root.fork(1);
  TrainedModel m;
  m.spec = spec;
  m.weights = w;
  m.optim = opt;
  m.seed = seed;
  m.params = init_params(spec, init_rng, opt.clip);

  const std::size_t n = data.features.rows();
  const std::size_t L = spec.latent_dim;
  const std::size_t n_enc = m.params.encoder.size();

  std::vector<ad::Tensor> gen_params;
  gen_params.insert(gen_params.end(), m.params.encoder.begin(), m.params.encoder.end());
  gen_params.insert(gen_params.end(), m.params.decoder.begin(), m.params.decoder.end());
  std::vector<ad::Tensor>& critic_params = m.params.critic;
  ad::RmsPropState gen_state = ad::make_rmsprop_state(gen_params);
  ad::RmsPropState critic_state = ad::make_rmsprop_state(critic_params);
  const ad::RmsPropConfig rms{opt.lr, opt.decay, opt.eps};

  std::vector<std::vector<std::size_t>> by_class(data.n_emotions);
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  std::vector<std::size_t> order(n);
  std::vector<ad::Tensor> gen_grads(gen_params.size()), critic_grads(critic_params.size());
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    SeededRng rng = root.fork(100 + epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    EpochStats acc;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += opt.batch) {
      const std::size_t b = std::min(opt.batch, n - start);
      const std::span<const std::size_t> idx(order.data() + start, b);
      std::vector<int> labels(b);
      for (std::size_t i = 0; i < b; ++i) labels[i] = data.labels[idx[i]];
      const Matrix f0 = gather_rows(data.f0_cond.cols() ? data.f0_cond : Matrix(n, 0), idx);

      ad::Tape tape;
      const auto enc = bind_params(tape, std::span<const ad::Tensor>(gen_params.data(), n_enc), true);
      const auto dec = bind_params(tape, std::span<const ad::Tensor>(gen_params.data() + n_enc, gen_params.size() - n_enc), true);
      const auto cri = bind_params(tape, critic_params, true);

      try {
        ad::Var x = tape.constant(to_tensor(gather_rows(data.features, idx)));
        ad::Var h = run_stack(spec.encoder, enc, x);
        ad::Var mu = ad::slice_cols(h, 0, L);
        ad::Var lv = ad::slice_cols(h, L, 2 * L);
        ad::Var z = reparameterize(mu, lv, rng);
        ad::Var cond = tape.constant(condition(labels, f0, spec.cond.emotion));
        const ad::Var zc[] = {z, cond};
        ad::Var xhat = run_stack(spec.decoder, dec, ad::concat(zc, 1));

        ad::Var real = x;
        ad::Var fake = xhat;
        if (opt.target_only_real) {
          // Fakes are decoded towards one target class; reals come from it.
          const auto t = static_cast<std::size_t>(rng.below(data.n_emotions));
          const auto& pool = by_class[t];
          if (pool.empty()) fail(ErrorKind::Data, "emotion " + std::to_string(t) + " has no training frames");
          std::vector<std::size_t> pick(b);
          for (auto& p : pick) p = pool[rng.below(pool.size())];
          real = tape.constant(to_tensor(gather_rows(data.features, pick)));
          const std::vector<int> tl(b, static_cast<int>(t));
          const ad::Var zt[] = {z, tape.constant(condition(tl, f0, spec.cond.emotion))};
          fake = run_stack(spec.decoder, dec, ad::concat(zt, 1));
        }
        ad::Var d_real = run_stack(spec.critic, cri, real);
        ad::Var d_fake = run_stack(spec.critic, cri, fake);

        ad::Var vae = vae_objective(x, xhat, mu, lv, w);
        const AdversarialLosses adv = critic_losses(d_real, d_fake, w);

        const double mse = ad::mean(ad::square(ad::sub(x, xhat))).value().item();
        const double kl = kl_to_standard_normal(mu, lv).value().item();
        const double lc = adv.critic_loss.value().item();
        const double lg = adv.gen_adv_loss.value().item();
        if (!std::isfinite(mse) || !std::isfinite(kl) || !std::isfinite(lc) || !std::isfinite(lg))
          diverged(epoch, "loss is not finite");

        tape.backward(adv.critic_loss);
        for (std::size_t i = 0; i < cri.size(); ++i) critic_grads[i] = tape.grad(cri[i]);

        const bool gen_step = (step + 1) % opt.n_critic == 0;
        if (gen_step) {
          tape.backward(ad::add(vae, adv.gen_adv_loss));
          for (std::size_t i = 0; i < enc.size(); ++i) gen_grads[i] = tape.grad(enc[i]);
          for (std::size_t i = 0; i < dec.size(); ++i) gen_grads[n_enc + i] = tape.grad(dec[i]);
        }

        ad::rmsprop_step(critic_params, critic_grads, critic_state, rms);
        ad::clip_weights(critic_params, opt.clip);
        if (gen_step) ad::rmsprop_step(gen_params, gen_grads, gen_state, rms);

        acc.recon_mse += mse;
        acc.kl += kl;
        acc.critic_loss += lc;
        acc.gen_adv_loss += lg;
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Range || e.kind() == ErrorKind::NonFinite) diverged(epoch, e.what());
        throw;
      }
      if (!finite(gen_params) || !finite(critic_params)) diverged(epoch, "parameters are not finite");
      ++batches;
      ++step;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    acc.recon_mse *= inv;
    acc.kl *= inv;
    acc.critic_loss *= inv;
    acc.gen_adv_loss *= inv;
    m.history.push_back(acc);
    if (on_epoch) on_epoch(epoch, acc);
  }

  m.params.encoder.assign(gen_params.begin(), gen_params.begin() + static_cast<std::ptrdiff_t>(n_enc));
  m.params.decoder.assign(gen_params.begin() + static_cast<std::ptrdiff_t>(n_enc), gen_params.end());
  m.trained = true;
  return m;
}

SpectrumCorpus build_spectrum_corpus(const std::vector<Utterance>& utts, F0CondMode mode) {
  if (utts.empty()) fail(ErrorKind::Data, "corpus has no utterances");
  const std::size_t dim = utts.front().spectrum.dim();
  std::size_t total = 0;
  int max_label = 0;
  for (const auto& u : utts) {
    if (u.spectrum.dim() != dim)
      fail(ErrorKind::Shape, "utterance " + u.id + " is " + std::to_string(u.spectrum.dim()) + "-dim, corpus is " +
                                 std::to_string(dim) + "-dim");
    if (u.f0.size() != u.spectrum.n_frames())
      fail(ErrorKind::LengthMismatch, "utterance " + u.id + " has " + std::to_string(u.spectrum.n_frames()) +
                                          " spectral frames and " + std::to_string(u.f0.size()) + " F0 frames");
    if (u.emotion < 0) fail(ErrorKind::Config, "utterance " + u.id + " has a negative emotion label");
    total += u.spectrum.n_frames();
    max_label = std::max(max_label, u.emotion);
  }

  Matrix pooled(total, dim);
  std::size_t r = 0;
  std::vector<LogF0Track> logs;
  for (const auto& u : utts) {
    for (std::size_t i = 0; i < u.spectrum.n_frames(); ++i, ++r)
      std::copy(u.spectrum.frame(i).begin(), u.spectrum.frame(i).end(), pooled.row(r).begin());
    logs.push_back(to_log(interpolate_unvoiced(u.f0)));
  }
  const FeatureSequence range_src = normalize_spectrum(FeatureSequence(std::move(pooled), 5.0));

  SpectrumCorpus c;
  c.meta.kind = PipelineKind::Spectrum;
  c.meta.scale_min = range_src.norm_meta()->scale_min;
  c.meta.scale_max = range_src.norm_meta()->scale_max;
  c.meta.f0_mode = mode;
  c.meta.f0_stats = pooled_log_stats(logs);

  c.data.features = Matrix(total, dim);
  c.data.f0_cond = Matrix(total, 1);
  c.data.n_emotions = static_cast<std::size_t>(max_label) + 1;
  c.data.n_emotions = std::max<std::size_t>(c.data.n_emotions, 2);
  r = 0;
  for (std::size_t k = 0; k < utts.size(); ++k) {
    const auto& u = utts[k];
    const FeatureSequence norm = spectrum_frames(c.meta, u.spectrum);
    std::vector<double> hz(logs[k].values.size());
    for (std::size_t i = 0; i < hz.size(); ++i) hz[i] = std::exp(logs[k].values[i]);
    const Matrix cond = f0_condition(c.meta, hz);
    for (std::size_t i = 0; i < norm.n_frames(); ++i, ++r) {
      std::copy(norm.frame(i).begin(), norm.frame(i).end(), c.data.features.row(r).begin());
      c.data.f0_cond(r, 0) = cond(i, 0);
      c.data.labels.push_back(u.emotion);
    }
  }
  return c;
}

SpectrumCorpus build_prosody_corpus(const std::vector<Utterance>& utts) {
  if (utts.empty()) fail(ErrorKind::Data, "corpus has no utterances");
  std::size_t shortest = utts.front().f0.size();
  int max_label = 0;
  for (const auto& u : utts) {
    shortest = std::min(shortest, u.f0.size());
    max_label = std::max(max_label, u.emotion);
  }
  SpectrumCorpus c;
  c.meta.kind = PipelineKind::Prosody;
  c.meta.wavelet = WaveletConfig::for_length(shortest);
  c.meta.wavelet.tau0_ms = utts.front().f0.frame_shift_ms();

  std::vector<Matrix> frames;
  std::size_t total = 0;
  for (const auto& u : utts) {
    const LogF0Track norm = znorm(to_log(interpolate_unvoiced(u.f0))).first;
    frames.push_back(scaleogram_to_features(cwt_forward(norm, c.meta.wavelet)).data());
    total += frames.back().rows();
  }
  c.meta.scale_norm = fit_scale_norm(frames);
  const std::size_t dim = frames.front().cols();
  c.data.features = Matrix(total, dim);
  c.data.f0_cond = Matrix(total, 0);
  c.data.n_emotions = std::max<std::size_t>(static_cast<std::size_t>(max_label) + 1, 2);
  std::size_t r = 0;
  for (std::size_t k = 0; k < utts.size(); ++k) {
    const Matrix z = apply_scale_norm(frames[k], c.meta.scale_norm);
    for (std::size_t i = 0; i < z.rows(); ++i, ++r) {
      std::copy(z.row(i).begin(), z.row(i).end(), c.data.features.row(r).begin());
      c.data.labels.push_back(utts[k].emotion);
    }
  }
  return c;
}

FeatureSequence spectrum_frames(const PipelineMeta& meta, const FeatureSequence& spectrum) {
  if (meta.kind != PipelineKind::Spectrum) fail(ErrorKind::State, "model is not a spectrum pipeline");
  NormMeta range;
  range.scale_min = meta.scale_min;
  range.scale_max = meta.scale_max;
  return normalize_spectrum(spectrum, &range);
}

Matrix f0_condition(const PipelineMeta& meta, std::span<const double> f0_hz) {
  Matrix out(f0_hz.size(), 1);
  for (std::size_t i = 0; i < f0_hz.size(); ++i) {
    if (!(f0_hz[i] > 0.0) || !std::isfinite(f0_hz[i]))
      fail(ErrorKind::Domain, "F0 condition needs positive Hz, frame " + std::to_string(i));
    out(i, 0) = meta.f0_mode == F0CondMode::RawHz ? f0_hz[i]
                                                  : (std::log(f0_hz[i]) - meta.f0_stats.mean) / meta.f0_stats.std;
  }
  return out;
}

Matrix prosody_frames(const PipelineMeta& meta, const LogF0Track& normalized) {
  if (meta.kind != PipelineKind::Prosody) fail(ErrorKind::State, "model is not a prosody pipeline");
  return apply_scale_norm(scaleogram_to_features(cwt_forward(normalized, meta.wavelet)).data(), meta.scale_norm);
}

}  // namespace evc::vawgan
