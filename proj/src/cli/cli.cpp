#include "evc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iostream>
#include <thread>

#include "commands.hpp"

namespace evc::cli {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::BadMagic:
    case ErrorKind::BadVersion:
    case ErrorKind::Truncated:
    case ErrorKind::LengthMismatch:
    case ErrorKind::NonFinite:
    case ErrorKind::Parse:
      return kExitIo;
    case ErrorKind::TrainingDiverged:
      return kExitDiverged;
    case ErrorKind::Pairing:
      return kExitPairing;
    default:
      return kExitConfig;
  }
}

void validate(const PipelineConfig& c) {
  const std::filesystem::path* paths[] = {&c.paths.features, &c.paths.f0, &c.paths.models, &c.paths.reports};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      if (!paths[i]->empty() && paths[i]->lexically_normal() == paths[j]->lexically_normal())
        fail(ErrorKind::Config, "path " + paths[i]->string() + " is used for two different roles");
  if (c.preset != "dense" && c.preset != "paper") fail(ErrorKind::Config, "unknown network preset '" + c.preset + "'");
  validate(c.wavelet);
  vawgan::validate(c.weights);
  vawgan::validate(c.optim);
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& f) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  const std::size_t count = std::min<std::size_t>(jobs, n);
  for (std::size_t w = 0; w < count; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : workers) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string utterance_stem(const std::filesystem::path& p) {
  const std::string name = p.filename().string();
  const auto dot = name.find('.');
  return dot == std::string::npos || dot == 0 ? name : name.substr(0, dot);
}

std::filesystem::path output_for(const std::filesystem::path& input, std::size_t n_inputs,
                                 const std::filesystem::path& out, const std::filesystem::path& out_dir,
                                 const std::string& suffix) {
  if (!out.empty()) {
    if (n_inputs != 1) fail(ErrorKind::Config, "--out takes a single input; use --out-dir for several");
    return out;
  }
  if (out_dir.empty()) fail(ErrorKind::Config, "one of --out or --out-dir is required");
  return out_dir / (utterance_stem(input) + suffix);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Emotional voice conversion toolkit: F0 preprocessing, CWT, VAW-GAN training, conversion and "
               "evaluation"};
  app.name(args.empty() ? "evc" : std::filesystem::path(args.front()).filename().string());
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  app.add_option("--seed", seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads for per-utterance work (0 = all cores)")->capture_default_str();
  app.config_formatter(make_json_config());
  app.set_config("--config", "", "JSON file with option values; nested objects configure subcommands");
  app.require_subcommand(1);

  CommandList cmds;
  add_f0_commands(app, cmds);
  add_model_commands(app, cmds);
  add_eval_command(app, cmds);

  try {
    try {
      std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
      app.parse(rev);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitConfig;
    }
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    const Context ctx{out, err, seed, jobs};
    for (auto& [sub, runner] : cmds) {
      if (sub->parsed()) {
        runner(ctx);
        return kExitOk;
      }
    }
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: IoError: " << e.what() << "\n";
    return kExitIo;
  }
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace evc::cli
