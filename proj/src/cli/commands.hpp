#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

namespace evc::cli {

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

using Runner = std::function<void(const Context&)>;
using CommandList = std::vector<std::pair<CLI::App*, Runner>>;

void add_f0_commands(CLI::App& app, CommandList& cmds);
void add_model_commands(CLI::App& app, CommandList& cmds);
void add_eval_command(CLI::App& app, CommandList& cmds);

std::shared_ptr<CLI::Config> make_json_config();

/// Runs f(0..n-1) on up to `jobs` threads. The error of the lowest failing
/// index is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& f);

/// File name up to the first dot: "utt01.sp.evcf" -> "utt01".
std::string utterance_stem(const std::filesystem::path& p);

/// Output path for one input: `out` when given (single input only),
/// otherwise out_dir / (stem + suffix).
std::filesystem::path output_for(const std::filesystem::path& input, std::size_t n_inputs,
                                 const std::filesystem::path& out, const std::filesystem::path& out_dir,
                                 const std::string& suffix);

}  // namespace evc::cli
