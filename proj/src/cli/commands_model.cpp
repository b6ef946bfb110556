#include <algorithm>
#include <ostream>

#include <json.hpp>

#include "commands.hpp"
#include "evc/cli.hpp"
#include "evc/error.hpp"
#include "evc/evcf.hpp"
#include "evc/vawgan.hpp"

namespace evc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evc::vawgan;

constexpr const char* kLabelsFile = "labels.json";

void write_corpus(const fs::path& dir, const std::vector<Utterance>& utts) {
  fs::create_directories(dir);
  json labels = json::array();
  for (const auto& u : utts) {
    write_features(dir / (u.id + ".sp.evcf"), u.spectrum);
    write_features(dir / (u.id + ".f0.evcf"), FeatureSequence::column(u.f0.values(), u.f0.frame_shift_ms()));
    labels.push_back({{"id", u.id}, {"emotion", u.emotion}});
  }
  write_file_atomic(dir / kLabelsFile, json{{"utterances", labels}}.dump(2) + "\n");
}

std::vector<Utterance> read_corpus(const fs::path& dir, unsigned jobs) {
  json j;
  try {
    j = json::parse(read_file(dir / kLabelsFile));
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, (dir / kLabelsFile).string() + ": " + e.what());
  }
  std::vector<std::pair<std::string, int>> entries;
  try {
    for (const auto& e : j.at("utterances")) entries.emplace_back(e.at("id").get<std::string>(), e.at("emotion").get<int>());
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, (dir / kLabelsFile).string() + ": " + e.what());
  }
  if (entries.empty()) fail(ErrorKind::Data, (dir / kLabelsFile).string() + " lists no utterances");
  std::vector<std::optional<Utterance>> loaded(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const auto& [id, emo] = entries[i];
    FeatureSequence sp = read_features(dir / (id + ".sp.evcf"));
    F0Contour f0 = read_f0(dir / (id + ".f0.evcf"));
    loaded[i] = Utterance{id, emo, std::move(sp), std::move(f0)};
  });
  std::vector<Utterance> out;
  for (auto& u : loaded) out.push_back(std::move(*u));
  return out;
}

struct ToyOpts {
  fs::path out_dir;
  ToyDatasetSpec spec;
};

void run_gen_toy(ToyOpts o, const Context& ctx) {
  o.spec.seed = ctx.seed;
  const auto utts = gen_toy_dataset(o.spec);
  write_corpus(o.out_dir, utts);
  ctx.out << o.out_dir.string() << ": " << utts.size() << " utterances, " << o.spec.n_emotions << " emotions\n";
}

struct TrainOpts {
  std::string pipeline;
  fs::path data, model_dir, history;
  std::string f0_mode = "norm_log_f0";
  PipelineConfig config;
  bool quiet = false;
};

void run_train(TrainOpts o, const Context& ctx) {
  PipelineConfig& cfg = o.config;
  cfg.seed = ctx.seed;
  cfg.paths.features = o.data;
  cfg.paths.models = o.model_dir;
  cfg.paths.reports = o.history;
  validate(cfg);

  F0CondMode mode;
  if (o.f0_mode == "norm_log_f0")
    mode = F0CondMode::NormLogF0;
  else if (o.f0_mode == "raw_hz")
    mode = F0CondMode::RawHz;
  else
    fail(ErrorKind::Config, "unknown --f0-mode '" + o.f0_mode + "'");

  std::vector<Utterance> utts;
  if (o.data.empty()) {
    ToyDatasetSpec toy;
    toy.seed = cfg.seed;
    utts = gen_toy_dataset(toy);
  } else {
    utts = read_corpus(o.data, ctx.jobs);
  }

  SpectrumCorpus corpus;
  if (o.pipeline == "spectrum")
    corpus = build_spectrum_corpus(utts, mode);
  else if (o.pipeline == "prosody")
    corpus = build_prosody_corpus(utts);
  else
    fail(ErrorKind::Config, "unknown pipeline '" + o.pipeline + "'");

  const NetworkSpec spec =
      preset_by_name(cfg.preset, corpus.data.features.cols(), corpus.data.f0_cond.cols(), kDefaultEmotionClasses);
  EpochCallback progress;
  if (!o.quiet)
    progress = [&ctx](std::size_t e, const EpochStats& s) {
      ctx.err << "epoch " << e << ": recon " << s.recon_mse << " kl " << s.kl << " critic " << s.critic_loss
              << " gen " << s.gen_adv_loss << "\n";
    };
  TrainedModel m = train_pipeline(corpus.data, spec, cfg.weights, cfg.optim, cfg.seed, progress);
  m.meta = corpus.meta;
  save_model(o.model_dir, m);
  const std::string hist = history_to_json(m.history);
  write_file_atomic(o.model_dir / "history.json", hist);
  if (!o.history.empty()) write_file_atomic(o.history, hist);
  const EpochStats& last = m.history.back();
  ctx.out << o.model_dir.string() << ": " << o.pipeline << " model, " << corpus.data.features.rows() << " frames, "
          << m.history.size() << " epochs, final recon MSE " << last.recon_mse << " (epoch 0: "
          << m.history.front().recon_mse << ")\n";
}

struct ConvertOpts {
  fs::path spectrum_model, prosody_model, sp, f0, in_dir, out_dir, target_f0_stats;
  int source = -1;
  int target = -1;
  bool keep_source_f0 = false;
};

void run_convert(const ConvertOpts& o, const Context& ctx) {
  PipelineConfig cfg;
  cfg.paths.features = o.in_dir.empty() ? o.sp : o.in_dir;
  cfg.paths.f0 = o.f0;
  cfg.paths.models = o.spectrum_model;
  cfg.paths.reports = o.out_dir;
  validate(cfg);

  const TrainedModel spectrum = load_model(o.spectrum_model);
  std::optional<TrainedModel> prosody;
  if (!o.prosody_model.empty())
    prosody = load_model(o.prosody_model);
  else if (!o.keep_source_f0)
    fail(ErrorKind::State, "no prosody model given; pass --prosody-model or --keep-source-f0");
  if (prosody && o.prosody_model == o.spectrum_model)
    fail(ErrorKind::Config, "spectrum and prosody models must be different directories");

  const int classes = static_cast<int>(spectrum.spec.cond.emotion);
  const EmotionCode source(o.source, classes), target(o.target, classes);
  ConvertOptions copts;
  if (!o.target_f0_stats.empty()) copts.target_f0_stats = norm_stats_from_json(read_file(o.target_f0_stats));

  std::vector<std::pair<fs::path, fs::path>> jobs;
  if (!o.in_dir.empty()) {
    if (!o.sp.empty() || !o.f0.empty()) fail(ErrorKind::Config, "--in-dir excludes --sp/--f0");
    std::vector<fs::path> sps;
    for (const auto& e : fs::directory_iterator(o.in_dir)) {
      const std::string name = e.path().filename().string();
      if (name.size() > 8 && name.ends_with(".sp.evcf")) sps.push_back(e.path());
    }
    std::sort(sps.begin(), sps.end());
    for (const auto& p : sps) jobs.emplace_back(p, p.parent_path() / (utterance_stem(p) + ".f0.evcf"));
    if (jobs.empty()) fail(ErrorKind::Data, o.in_dir.string() + " holds no *.sp.evcf files");
  } else {
    if (o.sp.empty() || o.f0.empty()) fail(ErrorKind::Config, "give --sp and --f0, or --in-dir");
    jobs.emplace_back(o.sp, o.f0);
  }

  fs::create_directories(o.out_dir);
  std::vector<std::string> lines(jobs.size());
  parallel_for(jobs.size(), ctx.jobs, [&](std::size_t i) {
    const auto& [sp_path, f0_path] = jobs[i];
    const FeatureSequence sp = read_features(sp_path);
    const F0Contour f0 = read_f0(f0_path, sp.frame_shift_ms());
    const ConversionResult r = convert(sp, f0, source, target, spectrum, prosody ? &*prosody : nullptr, copts);
    const std::string stem = utterance_stem(sp_path);
    write_features(o.out_dir / (stem + ".sp.evcf"), r.spectrum);
    write_features(o.out_dir / (stem + ".f0.evcf"), FeatureSequence::column(r.f0.values(), r.f0.frame_shift_ms()));
    lines[i] = stem + ": " + std::to_string(sp.n_frames()) + " frames converted";
  });
  for (const auto& l : lines) ctx.out << l << "\n";
}

}  // namespace

void add_model_commands(CLI::App& app, CommandList& cmds) {
  {
    auto o = std::make_shared<ToyOpts>();
    CLI::App* sub = app.add_subcommand("gen-toy", "Write a synthetic labeled corpus (spectra + F0)");
    sub->add_option("--out-dir", o->out_dir, "Output directory")->required();
    sub->add_option("--emotions", o->spec.n_emotions, "Emotion classes")->capture_default_str();
    sub->add_option("--utts", o->spec.utts_per_emotion, "Utterances per emotion")->capture_default_str();
    sub->add_option("--frames", o->spec.frames, "Frames per utterance")->capture_default_str();
    sub->add_option("--dim", o->spec.dim, "Spectral bins per frame")->capture_default_str();
    sub->add_option("--tilt", o->spec.tilt, "Spectral tilt magnitude")->capture_default_str();
    sub->add_option("--coupling", o->spec.f0_coupling, "F0-to-spectrum coupling")->capture_default_str();
    cmds.emplace_back(sub, [o](const Context& c) { run_gen_toy(*o, c); });
  }
  {
    auto o = std::make_shared<TrainOpts>();
    auto& cfg = o->config;
    CLI::App* sub = app.add_subcommand("train", "Train a spectrum or prosody VAW-GAN pipeline");
    sub->add_option("--pipeline", o->pipeline, "spectrum or prosody")->required();
    sub->add_option("--data", o->data, "Corpus directory written by gen-toy (default: toy corpus from --seed)");
    sub->add_option("--model-dir", o->model_dir, "Output model directory")->required();
    sub->add_option("--history", o->history, "Extra copy of the loss history JSON");
    sub->add_option("--preset", cfg.preset, "Network preset: dense or paper")->capture_default_str();
    sub->add_option("--epochs", cfg.optim.epochs, "Training epochs")->capture_default_str();
    sub->add_option("--batch", cfg.optim.batch, "Batch size in frames")->capture_default_str();
    sub->add_option("--lr", cfg.optim.lr, "RMSProp learning rate")->capture_default_str();
    sub->add_option("--decay", cfg.optim.decay, "RMSProp decay")->capture_default_str();
    sub->add_option("--clip", cfg.optim.clip, "Critic weight clip c")->capture_default_str();
    sub->add_option("--n-critic", cfg.optim.n_critic, "Critic steps per generator step")->capture_default_str();
    sub->add_flag("--target-only-real", cfg.optim.target_only_real,
                  "Critic compares fakes with real frames of the target emotion only");
    sub->add_option("--alpha", cfg.weights.alpha, "Adversarial weight")->capture_default_str();
    sub->add_option("--recon-weight", cfg.weights.recon_weight, "Reconstruction weight")->capture_default_str();
    sub->add_option("--f0-mode", o->f0_mode, "Spectrum F0 condition: norm_log_f0 or raw_hz")->capture_default_str();
    sub->add_flag("-q,--quiet", o->quiet, "No per-epoch progress on stderr");
    cmds.emplace_back(sub, [o](const Context& c) { run_train(*o, c); });
  }
  {
    auto o = std::make_shared<ConvertOpts>();
    CLI::App* sub = app.add_subcommand("convert", "Convert utterances to a target emotion");
    sub->add_option("--spectrum-model", o->spectrum_model, "Trained spectrum model directory")->required();
    sub->add_option("--prosody-model", o->prosody_model, "Trained prosody model directory");
    sub->add_flag("--keep-source-f0", o->keep_source_f0, "Skip prosody conversion and keep the source F0");
    sub->add_option("--sp", o->sp, "Source spectrum (EVCF)");
    sub->add_option("--f0", o->f0, "Source F0 (EVCF or CSV)");
    sub->add_option("--in-dir", o->in_dir, "Directory of <utt>.sp.evcf + <utt>.f0.evcf pairs");
    sub->add_option("--source-emotion", o->source, "Source emotion index")->required();
    sub->add_option("--target-emotion", o->target, "Target emotion index")->required();
    sub->add_option("--target-f0-stats", o->target_f0_stats,
                    "Log-F0 stats JSON used to denormalize the converted F0 (default: source statistics)");
    sub->add_option("--out-dir", o->out_dir, "Output directory")->required();
    cmds.emplace_back(sub, [o](const Context& c) { run_convert(*o, c); });
  }
}

}  // namespace evc::cli
