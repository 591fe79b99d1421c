#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vibci/dsp_filters.hpp"
#include "vibci/learner.hpp"
#include "vibci/signal_model.hpp"
#include "vibci/spectral.hpp"
#include "vibci/synthcortex.hpp"

namespace vibci {

enum class DataSource { synth, files };

/// Everything an experiment run depends on besides input files.
struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::filesystem::path out_dir = "results";

  ProtocolSpec protocol = ProtocolSpec::builtin(ProtocolId::P3a);
  double rate = 256.0;

  DataSource source = DataSource::synth;
  std::size_t train_sessions = 13;  // synthetic sessions per split
  std::size_t test_sessions = 6;
  std::vector<std::filesystem::path> train_manifests;
  std::vector<std::filesystem::path> test_manifests;

  FilterChain filters = FilterChain::standard();
  WelchParams welch;
  Band band;
  TuningOptions tuning;
  SynthConfig synth;
  std::string plot_electrode = "AF4";

  /// Throws ValidationError on inconsistent values or missing input files.
  void validate() const;
};

/// Parses the INI-style config. Relative data paths are resolved against
/// the config file's directory. Unknown sections or keys are errors.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& source = "<string>");

/// Commented config listing every key with its default value.
std::string default_config_text();

}  // namespace vibci
