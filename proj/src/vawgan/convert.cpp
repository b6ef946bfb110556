#include <cmath>
#include <string>

#include "evc/error.hpp"
#include "evc/vawgan.hpp"

namespace evc::vawgan {
namespace {

void require_trained(const TrainedModel& m, const char* what) {
  if (!m.trained) fail(ErrorKind::State, std::string(what) + ": model has not been trained");
}

ad::Tensor to_tensor(const Matrix& m) { return ad::Tensor(ad::Shape{m.rows(), m.cols()}, m.data()); }

Matrix to_matrix(const ad::Tensor& t) { return Matrix(t.dim(0), t.dim(1), t.values()); }

void require_rows(const Matrix& x, std::size_t dim, const char* what) {
  if (x.rows() == 0) fail(ErrorKind::Shape, std::string(what) + ": input has no frames");
  if (x.cols() != dim)
    fail(ErrorKind::Shape, std::string(what) + ": input is " + std::to_string(x.cols()) + "-dim, model expects " +
                               std::to_string(dim));
}

std::pair<ad::Var, ad::Var> run_encoder(ad::Tape& tape, const TrainedModel& m, const Matrix& x) {
  require_rows(x, m.spec.input_dim, "encode");
  const auto enc = bind_params(tape, m.params.encoder, false);
  ad::Var h = run_stack(m.spec.encoder, enc, tape.constant(to_tensor(x)));
  const std::size_t L = m.spec.latent_dim;
  return {ad::slice_cols(h, 0, L), ad::slice_cols(h, L, 2 * L)};
}

}  // namespace

Matrix encode_mean(const TrainedModel& m, const Matrix& x) {
  ad::Tape tape;
  return to_matrix(run_encoder(tape, m, x).first.value());
}

Matrix encode_sample(const TrainedModel& m, const Matrix& x, SeededRng& rng) {
  ad::Tape tape;
  const auto [mu, lv] = run_encoder(tape, m, x);
  return to_matrix(reparameterize(mu, lv, rng).value());
}

Matrix decode_conditioned(const TrainedModel& m, const Matrix& z, const EmotionCode& emotion, const Matrix& f0_cond) {
  if (z.cols() != m.spec.latent_dim)
    fail(ErrorKind::Shape, "decode: latent is " + std::to_string(z.cols()) + "-dim, model expects " +
                               std::to_string(m.spec.latent_dim));
  if (z.rows() == 0) fail(ErrorKind::Shape, "decode: no frames");
  if (f0_cond.cols() != m.spec.cond.f0 || (f0_cond.cols() > 0 && f0_cond.rows() != z.rows()))
    fail(ErrorKind::Shape, "decode: F0 condition is " + std::to_string(f0_cond.rows()) + "x" +
                               std::to_string(f0_cond.cols()) + ", expected " + std::to_string(z.rows()) + "x" +
                               std::to_string(m.spec.cond.f0));
  if (static_cast<std::size_t>(emotion.n_classes()) != m.spec.cond.emotion)
    fail(ErrorKind::Shape, "decode: emotion code has " + std::to_string(emotion.n_classes()) +
                               " classes, model expects " + std::to_string(m.spec.cond.emotion));
  const std::size_t n = z.rows(), width = m.spec.decoder_input_dim(), L = m.spec.latent_dim;
  const std::vector<double> hot = one_hot(emotion);
  ad::Tensor in(ad::Shape{n, width});
  for (std::size_t i = 0; i < n; ++i) {
    double* row = in.data() + i * width;
    std::copy(z.row(i).begin(), z.row(i).end(), row);
    std::copy(hot.begin(), hot.end(), row + L);
    for (std::size_t j = 0; j < f0_cond.cols(); ++j) row[L + hot.size() + j] = f0_cond(i, j);
  }
  ad::Tape tape;
  const auto dec = bind_params(tape, m.params.decoder, false);
  return to_matrix(run_stack(m.spec.decoder, dec, tape.constant(std::move(in))).value());
}

Matrix reconstruct(const TrainedModel& m, const Matrix& x, const EmotionCode& emotion, const Matrix& f0_cond) {
  return decode_conditioned(m, encode_mean(m, x), emotion, f0_cond);
}

ConversionResult convert(const FeatureSequence& spectrum, const F0Contour& source_f0, const EmotionCode& source,
                         const EmotionCode& target, const TrainedModel& spectrum_model,
                         const TrainedModel* prosody_model, const ConvertOptions& options) {
  require_trained(spectrum_model, "convert");
  if (spectrum_model.meta.kind != PipelineKind::Spectrum)
    fail(ErrorKind::State, "convert: first model is not a spectrum pipeline");
  if (source.n_classes() != target.n_classes())
    fail(ErrorKind::Config, "source and target emotion codes use different class counts");
  if (spectrum.n_frames() != source_f0.size())
    fail(ErrorKind::LengthMismatch, "convert: " + std::to_string(spectrum.n_frames()) + " spectral frames vs " +
                                        std::to_string(source_f0.size()) + " F0 frames");

  const LogF0Track interp = interpolate_unvoiced(source_f0);
  std::vector<double> f0_hz = interp.values;

  if (prosody_model != nullptr) {
    require_trained(*prosody_model, "convert");
    if (prosody_model->meta.kind != PipelineKind::Prosody)
      fail(ErrorKind::State, "convert: second model is not a prosody pipeline");
    auto [norm, stats] = znorm(to_log(interp));
    const Matrix frames = prosody_frames(prosody_model->meta, norm);
    const Matrix empty(frames.rows(), 0);
    const Matrix converted = reconstruct(*prosody_model, frames, target, empty);
    CwtScaleogram s = cwt_forward(norm, prosody_model->meta.wavelet);
    s.coeffs = invert_scale_norm(converted, prosody_model->meta.scale_norm).transposed();
    const LogF0Track back = cwt_inverse(s);
    f0_hz = denormalize(back, options.target_f0_stats.value_or(stats)).values;
  }

  const FeatureSequence norm = spectrum_frames(spectrum_model.meta, spectrum);
  const Matrix cond = f0_condition(spectrum_model.meta, f0_hz);
  Matrix decoded = reconstruct(spectrum_model, norm.data(), target, cond);

  NormMeta meta = *norm.norm_meta();
  FeatureSequence out_norm(decoded, spectrum.frame_shift_ms(), meta);
  std::vector<double> hz_out(f0_hz.size());
  for (std::size_t i = 0; i < hz_out.size(); ++i) hz_out[i] = source_f0.voiced()[i] ? f0_hz[i] : 0.0;
  return ConversionResult{denormalize_spectrum(out_norm), std::move(decoded),
                          F0Contour(std::move(hz_out), source_f0.voiced(), source_f0.frame_shift_ms())};
}

}  // namespace evc::vawgan
