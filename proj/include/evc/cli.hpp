#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "evc/cwt.hpp"
#include "evc/error.hpp"
#include "evc/vawgan.hpp"

namespace evc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,
  kExitConfig = 2,
  kExitDiverged = 3,
  kExitPairing = 4,
};

int exit_code(ErrorKind kind);

struct PipelinePaths {
  std::filesystem::path features;
  std::filesystem::path f0;
  std::filesystem::path models;
  std::filesystem::path reports;
};

/// Everything one train or convert run depends on.
struct PipelineConfig {
  PipelinePaths paths;
  WaveletConfig wavelet;
  std::string preset = "dense";
  vawgan::LossWeights weights{1.0, 200.0};
  vawgan::OptimConfig optim;
  std::uint64_t seed = 0;
};

/// ConfigError when two non-empty paths coincide or the preset is unknown.
void validate(const PipelineConfig& config);

/// Parses and runs one command line. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main_entry(int argc, char** argv);

}  // namespace evc::cli
