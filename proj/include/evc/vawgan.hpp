#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evc/autodiff.hpp"
#include "evc/cwt.hpp"
#include "evc/f0prep.hpp"
#include "evc/features.hpp"
#include "evc/network.hpp"
#include "evc/optim.hpp"
#include "evc/rng.hpp"

namespace evc::vawgan {

// ---- objective ---------------------------------------------------------

struct GaussianPosterior {
  std::vector<double> mean;
  std::vector<double> log_var;
};

void validate(const GaussianPosterior& post);

/// 0.5 * sum_d (mu^2 + sigma^2 - 1 - log sigma^2)
double kl_to_standard_normal(const GaussianPosterior& post);

/// Same on the tape. Rank-1 inputs give the KL of one posterior; [B, D]
/// inputs give the mean over the B rows.
ad::Var kl_to_standard_normal(ad::Var mean, ad::Var log_var);

/// z = mu + exp(log_var / 2) * eps with eps ~ N(0, I) drawn from rng.
std::vector<double> reparameterize(const GaussianPosterior& post, SeededRng& rng);
ad::Var reparameterize(ad::Var mean, ad::Var log_var, SeededRng& rng);

struct LossWeights {
  double alpha = 1.0;
  double recon_weight = 1.0;
};

void validate(const LossWeights& w);

/// KL + recon_weight * mean squared error. Negated lower bound under a
/// unit-variance Gaussian decoder.
ad::Var vae_objective(ad::Var x, ad::Var recon, ad::Var mean, ad::Var log_var, const LossWeights& w);

struct AdversarialLosses {
  ad::Var critic_loss;   // -(mean(d_real) - mean(d_fake))
  ad::Var gen_adv_loss;  // -alpha * mean(d_fake)
};

AdversarialLosses critic_losses(ad::Var d_real, ad::Var d_fake, const LossWeights& w);

// ---- toy corpus --------------------------------------------------------

struct ToyDatasetSpec {
  std::size_t n_emotions = 2;
  std::size_t utts_per_emotion = 16;
  std::size_t frames = 128;
  std::size_t dim = 32;
  double tilt = 1.0;         // log-spectral slope magnitude, sign set by emotion
  double f0_coupling = 0.5;  // strength of the F0-dependent ripple
  std::uint64_t seed = 0;
};

void validate(const ToyDatasetSpec& spec);

struct Utterance {
  std::string id;
  int emotion = 0;
  FeatureSequence spectrum;  // positive, linear power
  F0Contour f0;
};

/// Emotion k has log-spectral tilt delta * (1 - 2k / (n - 1)) and F0 around
/// 120 + 60k Hz. Emotion 0 gets a slow modulation; the others a faster one
/// with jitter. Every utterance also has short unvoiced runs.
std::vector<Utterance> gen_toy_dataset(const ToyDatasetSpec& spec);

// ---- training ----------------------------------------------------------

/// One example per row.
struct TrainingData {
  Matrix features;
  std::vector<int> labels;
  Matrix f0_cond;  // rows == features.rows(); 0 or 1 columns
  std::size_t n_emotions = 2;
};

void validate(const TrainingData& data);

struct OptimConfig {
  double lr = 1e-3;
  double decay = 0.9;
  double eps = 1e-8;
  double clip = 0.01;
  std::size_t epochs = 200;
  std::size_t batch = 64;
  std::size_t n_critic = 1;  // critic steps per encoder/decoder step
  bool target_only_real = false;
};

void validate(const OptimConfig& opt);

/// Training and learning-rate settings used for full-size runs.
OptimConfig paper_optim();

struct EpochStats {
  double recon_mse = 0.0;
  double kl = 0.0;
  double critic_loss = 0.0;
  double gen_adv_loss = 0.0;

  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

enum class PipelineKind { Spectrum, Prosody };
enum class F0CondMode { NormLogF0, RawHz };

std::string_view to_string(PipelineKind k);
std::string_view to_string(F0CondMode m);

/// Feature-side statistics a pipeline needs at conversion time.
struct PipelineMeta {
  PipelineKind kind = PipelineKind::Spectrum;
  std::vector<double> scale_min;  // spectrum: corpus log-spectral range
  std::vector<double> scale_max;
  F0CondMode f0_mode = F0CondMode::NormLogF0;
  NormStats f0_stats;             // spectrum: corpus log-F0 statistics
  WaveletConfig wavelet;          // prosody
  ScaleNormStats scale_norm;      // prosody
};

struct TrainedModel {
  NetworkSpec spec;
  LossWeights weights;
  OptimConfig optim;
  std::uint64_t seed = 0;
  ModelParams params;
  std::vector<EpochStats> history;
  PipelineMeta meta;
  bool trained = false;
};

using EpochCallback = std::function<void(std::size_t epoch, const EpochStats&)>;

/// Encoder/decoder descend vae_objective + gen_adv_loss while the critic
/// descends critic_loss; both are updated from the same forward pass and
/// the critic is clipped to [-clip, clip] after each of its steps.
/// TrainingDiverged names the epoch when a loss stops being finite.
TrainedModel train_pipeline(const TrainingData& data, const NetworkSpec& spec, const LossWeights& w,
                            const OptimConfig& opt, std::uint64_t seed, const EpochCallback& on_epoch = {});

struct SpectrumCorpus {
  TrainingData data;
  PipelineMeta meta;
};

/// Normalizes every spectrum with the pooled corpus range and attaches the
/// per-frame F0 condition.
SpectrumCorpus build_spectrum_corpus(const std::vector<Utterance>& utts, F0CondMode mode = F0CondMode::NormLogF0);

/// Per-utterance normalized log-F0, CWT with one grid for the whole corpus,
/// then per-scale z-normalization. One frame of coefficients per example.
SpectrumCorpus build_prosody_corpus(const std::vector<Utterance>& utts);

/// Normalized spectral frames of one utterance under a trained model's range.
FeatureSequence spectrum_frames(const PipelineMeta& meta, const FeatureSequence& spectrum);
/// Decoder F0 condition column for an interpolated Hz track.
Matrix f0_condition(const PipelineMeta& meta, std::span<const double> f0_hz);
/// Normalized scaleogram frames of a normalized log-F0 track.
Matrix prosody_frames(const PipelineMeta& meta, const LogF0Track& normalized);

// ---- inference ---------------------------------------------------------

/// Posterior means, one row per frame.
Matrix encode_mean(const TrainedModel& m, const Matrix& x);
/// Reparameterized samples, one row per frame.
Matrix encode_sample(const TrainedModel& m, const Matrix& x, SeededRng& rng);

/// Decoder applied to concat(z, one_hot(emotion), f0_cond) row by row.
Matrix decode_conditioned(const TrainedModel& m, const Matrix& z, const EmotionCode& emotion, const Matrix& f0_cond);

/// Decode of the posterior mean with the given condition.
Matrix reconstruct(const TrainedModel& m, const Matrix& x, const EmotionCode& emotion, const Matrix& f0_cond);

struct ConvertOptions {
  /// Log-F0 statistics used to undo the normalization of the converted
  /// contour; the source utterance's own statistics when empty.
  std::optional<NormStats> target_f0_stats;
};

struct ConversionResult {
  FeatureSequence spectrum;  // positive, source frame energies
  Matrix normalized;         // decoder output before denormalization
  F0Contour f0;              // converted Hz, source voicing
};

/// Prosody model converts the scaleogram and its inverse gives the new F0;
/// the spectrum decoder then consumes it frame by frame. With no prosody
/// model the source F0 is kept.
ConversionResult convert(const FeatureSequence& spectrum, const F0Contour& source_f0, const EmotionCode& source,
                         const EmotionCode& target, const TrainedModel& spectrum_model,
                         const TrainedModel* prosody_model, const ConvertOptions& options = {});

// ---- probe -------------------------------------------------------------

struct ProbeOptions {
  std::uint64_t seed = 0;
  double test_fraction = 0.3;
  std::size_t steps = 500;
  double lr = 0.5;
};

/// Held-out accuracy of a softmax regression from rows to labels. Features
/// are standardized with training-split statistics; the split is stratified.
double latent_emotion_probe(const Matrix& latents, std::span<const int> labels, const ProbeOptions& options = {});

// ---- persistence -------------------------------------------------------

/// manifest.json plus one EVCF file per parameter tensor (f32 payload).
void save_model(const std::filesystem::path& dir, const TrainedModel& m);
TrainedModel load_model(const std::filesystem::path& dir);

std::string history_to_json(const std::vector<EpochStats>& history);

}  // namespace evc::vawgan
