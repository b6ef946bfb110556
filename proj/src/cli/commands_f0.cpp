#include <cmath>
#include <ostream>
#include <sstream>

#include "commands.hpp"
#include "evc/cwt.hpp"
#include "evc/error.hpp"
#include "evc/evcf.hpp"
#include "evc/f0prep.hpp"

namespace evc::cli {
namespace {

namespace fs = std::filesystem;

constexpr double kF0RoundTripTol = 1e-9;
constexpr double kCwtRoundTripTol = 0.05;

fs::path sidecar_for(fs::path p) { return p.replace_extension(".json"); }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

LogF0Track read_track(const fs::path& path, TrackStage stage) {
  const FeatureSequence seq = read_features(path);
  if (seq.dim() != 1)
    fail(ErrorKind::Shape, path.string() + " holds " + std::to_string(seq.dim()) + "-dim frames, expected a 1-dim track");
  return LogF0Track{seq.column_values(0), seq.frame_shift_ms(), stage};
}

void write_track(const fs::path& path, const LogF0Track& t) {
  ensure_parent(path);
  write_features(path, FeatureSequence::column(t.values, t.frame_shift_ms));
}

struct F0PrepOpts {
  std::vector<fs::path> inputs;
  fs::path out, out_dir;
  double frame_shift = 5.0;
  bool verify = false;
};

void run_f0prep(const F0PrepOpts& o, const Context& ctx) {
  std::vector<std::string> lines(o.inputs.size());
  parallel_for(o.inputs.size(), ctx.jobs, [&](std::size_t i) {
    const fs::path& in = o.inputs[i];
    const fs::path dst = output_for(in, o.inputs.size(), o.out, o.out_dir, ".lf0.evcf");
    const LogF0Track interp = interpolate_unvoiced(read_f0(in, o.frame_shift));
    const auto [norm, stats] = znorm(to_log(interp));
    write_track(dst, norm);
    write_file_atomic(sidecar_for(dst), norm_stats_to_json(stats));
    std::ostringstream line;
    line << dst.string() << ": " << norm.size() << " frames, log-F0 mean " << stats.mean << ", std " << stats.std;
    if (o.verify) {
      const LogF0Track back = denormalize(read_track(dst, TrackStage::Normalized), stats);
      double worst = 0.0;
      for (std::size_t t = 0; t < back.size(); ++t)
        worst = std::max(worst, std::abs(back.values[t] - interp.values[t]) / interp.values[t]);
      // The file stores f32, so the check runs against the in-memory track as well.
      const LogF0Track exact = denormalize(norm, stats);
      double worst_exact = 0.0;
      for (std::size_t t = 0; t < exact.size(); ++t)
        worst_exact = std::max(worst_exact, std::abs(exact.values[t] - interp.values[t]) / interp.values[t]);
      if (worst_exact > kF0RoundTripTol)
        fail(ErrorKind::Range, in.string() + ": round trip error " + std::to_string(worst_exact) + " exceeds 1e-9");
      line << "; round trip ok (max rel err " << worst_exact << ", " << worst << " through f32 file)";
    }
    lines[i] = line.str();
  });
  for (const auto& l : lines) ctx.out << l << "\n";
}

struct CwtOpts {
  std::vector<fs::path> inputs;
  fs::path out, out_dir;
  int n_scales = 513;
  double s_min = 1.0;
  double s_max = 0.0;
  std::string spacing = "log";
  bool verify = false;
};

WaveletConfig wavelet_for(const CwtOpts& o, std::size_t n, double tau0) {
  WaveletConfig c = WaveletConfig::for_length(n);
  c.n_scales = o.n_scales;
  c.s_min = o.s_min;
  if (o.s_max > 0.0)
    c.s_max = o.s_max;
  else
    c.s_max = std::max(2.0 * c.s_min, std::min(512.0, static_cast<double>(n / 2)));
  c.spacing = scale_spacing_from_string(o.spacing);
  c.tau0_ms = tau0;
  validate(c);
  return c;
}

void run_cwt(const CwtOpts& o, const Context& ctx) {
  std::vector<std::string> lines(o.inputs.size());
  parallel_for(o.inputs.size(), ctx.jobs, [&](std::size_t i) {
    const fs::path& in = o.inputs[i];
    const fs::path dst = output_for(in, o.inputs.size(), o.out, o.out_dir, ".cwt.evcf");
    const LogF0Track track = read_track(in, TrackStage::Normalized);
    const CwtScaleogram s = cwt_forward(track, wavelet_for(o, track.size(), track.frame_shift_ms));
    ensure_parent(dst);
    write_features(dst, scaleogram_to_features(s));
    write_file_atomic(sidecar_for(dst), scaleogram_sidecar_json(s));
    std::ostringstream line;
    line << dst.string() << ": " << s.scales.size() << " scales x " << s.source_len << " frames";
    if (o.verify) {
      const double e = relative_rmse(track.values, cwt_inverse(s).values);
      if (e > kCwtRoundTripTol)
        fail(ErrorKind::Range, in.string() + ": CWT round trip relative RMSE " + std::to_string(e) + " exceeds 5%");
      line << "; round trip ok (relative RMSE " << e << ")";
    }
    lines[i] = line.str();
  });
  for (const auto& l : lines) ctx.out << l << "\n";
}

struct IcwtOpts {
  fs::path input, sidecar, out, reference;
};

void run_icwt(const IcwtOpts& o, const Context& ctx) {
  const fs::path side = o.sidecar.empty() ? sidecar_for(o.input) : o.sidecar;
  const CwtScaleogram s = scaleogram_from_features(read_features(o.input), read_file(side));
  const LogF0Track r = cwt_inverse(s);
  write_track(o.out, r);
  ctx.out << o.out.string() << ": " << r.size() << " frames";
  if (!o.reference.empty()) {
    const LogF0Track ref = read_track(o.reference, TrackStage::Normalized);
    const double e = relative_rmse(ref.values, r.values);
    if (e > kCwtRoundTripTol)
      fail(ErrorKind::Range, "round trip relative RMSE " + std::to_string(e) + " exceeds 5%");
    ctx.out << "; round trip ok (relative RMSE " << e << ")";
  }
  ctx.out << "\n";
}

}  // namespace

void add_f0_commands(CLI::App& app, CommandList& cmds) {
  {
    auto o = std::make_shared<F0PrepOpts>();
    CLI::App* sub = app.add_subcommand("f0prep", "Interpolate, log and z-normalize F0 contours");
    sub->add_option("inputs", o->inputs, "F0 files (1-dim EVCF in Hz, or CSV frame,hz,voiced)")->required();
    sub->add_option("-o,--out", o->out, "Output track (single input); stats go next to it as .json");
    sub->add_option("--out-dir", o->out_dir, "Output directory, one <utt>.lf0.evcf + .lf0.json per input");
    sub->add_option("--frame-shift", o->frame_shift, "Frame shift in ms for CSV input")->capture_default_str();
    sub->add_flag("--verify", o->verify, "Check that denormalization reproduces the interpolated contour");
    cmds.emplace_back(sub, [o](const Context& c) { run_f0prep(*o, c); });
  }
  {
    auto o = std::make_shared<CwtOpts>();
    CLI::App* sub = app.add_subcommand("cwt", "Mexican-hat CWT of normalized log-F0 tracks");
    sub->add_option("inputs", o->inputs, "Normalized log-F0 tracks (1-dim EVCF)")->required();
    sub->add_option("-o,--out", o->out, "Output scaleogram (single input); sidecar goes next to it as .json");
    sub->add_option("--out-dir", o->out_dir, "Output directory, one <utt>.cwt.evcf + .cwt.json per input");
    sub->add_option("--n-scales", o->n_scales, "Number of scales")->capture_default_str();
    sub->add_option("--s-min", o->s_min, "Finest scale in frames")->capture_default_str();
    sub->add_option("--s-max", o->s_max, "Coarsest scale in frames (0 = min(512, frames/2))")->capture_default_str();
    sub->add_option("--spacing", o->spacing, "Scale spacing: log or linear")->capture_default_str();
    sub->add_flag("--verify", o->verify, "Invert and require relative RMSE <= 5%");
    cmds.emplace_back(sub, [o](const Context& c) { run_cwt(*o, c); });
  }
  {
    auto o = std::make_shared<IcwtOpts>();
    CLI::App* sub = app.add_subcommand("icwt", "Reconstruct a normalized log-F0 track from a scaleogram");
    sub->add_option("input", o->input, "Scaleogram EVCF written by cwt")->required();
    sub->add_option("--sidecar", o->sidecar, "Scale grid JSON (default: input with .json extension)");
    sub->add_option("-o,--out", o->out, "Output track")->required();
    sub->add_option("--verify", o->reference, "Reference track; require relative RMSE <= 5% against it");
    cmds.emplace_back(sub, [o](const Context& c) { run_icwt(*o, c); });
  }
}

}  // namespace evc::cli
