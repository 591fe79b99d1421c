// vibci command-line front end.
//
//   vibci synth --protocol P3a --seed 7 --out s1/
//   vibci preprocess s1/recording.csv --out clean/
//   vibci psd s1/session.json --electrode AF4 --out psd/
//   vibci train s1/session.json s2/session.json --out model/
//   vibci evaluate model/model.json s3/session.json --out eval/
//   vibci run --config exp.ini --seed 7 --out results/
//   vibci report results/results.json --out rendered/
//
// Exit codes: 0 success, 2 usage or validation error, 1 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vibci/config.hpp"
#include "vibci/error.hpp"
#include "vibci/formats.hpp"
#include "vibci/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vibci;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  std::optional<std::string> electrode;
  std::optional<std::string> protocol;
};

void add_common(CLI::App& cmd, CommonFlags& flags) {
  cmd.add_option("--config", flags.config, "Experiment config file (INI)");
  cmd.add_option("--seed", flags.seed, "Global seed");
  cmd.add_option("--out", flags.out, "Output directory");
  cmd.add_option("--electrode", flags.electrode, "Electrode for PSD curves");
  cmd.add_option("--protocol", flags.protocol, "Protocol id (P1a, P1b, P1c, P1d, P2a, P3a)");
}

ExperimentConfig resolve_config(const CommonFlags& flags) {
  ExperimentConfig cfg = flags.config ? load_config(*flags.config) : ExperimentConfig{};
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out) cfg.out_dir = *flags.out;
  if (flags.electrode) cfg.plot_electrode = *flags.electrode;
  if (flags.protocol) cfg.protocol = ProtocolSpec::builtin(parse_protocol_id(*flags.protocol));
  cfg.validate();
  return cfg;
}

fs::path out_dir(const CommonFlags& flags, const ExperimentConfig& cfg) {
  const fs::path dir = flags.out ? *flags.out : cfg.out_dir;
  fs::create_directories(dir);
  return dir;
}

std::vector<SessionFeatures> features_of(const std::vector<fs::path>& manifests,
                                         const ExperimentConfig& cfg) {
  std::vector<SessionFeatures> out;
  for (const auto& m : manifests)
    out.push_back(session_features(load_session_files(m), cfg.filters, cfg.welch, cfg.band));
  return out;
}

int cmd_synth(const CommonFlags& flags, const std::string& id) {
  const auto cfg = resolve_config(flags);
  const auto session_id = id.empty() ? to_string(cfg.protocol.id) + "-" + std::to_string(cfg.seed) : id;
  auto session = synthesize_session(cfg.protocol, cfg.synth, cfg.seed, session_id);
  const auto dir = out_dir(flags, cfg);
  save_recording(session.recording, dir / session.manifest.recording);
  save_session(session.manifest, dir / "session.json");
  std::cout << session_id << ": " << session.manifest.plan.trials.size() << " trials, "
            << session.recording.samples() << " samples -> " << dir.string() << "\n";
  return kExitOk;
}

int cmd_preprocess(const CommonFlags& flags, const fs::path& input) {
  const auto cfg = resolve_config(flags);
  const auto recording = load_recording(input);
  const auto stages = cfg.filters.at_rate(recording.rate()).design();
  const auto clean = preprocess(recording, stages);
  const auto dir = out_dir(flags, cfg);
  save_recording(clean, dir / input.filename());
  std::ofstream coeffs(dir / "filters.txt");
  for (const auto& stage : stages) write_sections(coeffs, stage);
  std::cout << input.string() << " -> " << (dir / input.filename()).string() << "\n";
  return kExitOk;
}

int cmd_psd(const CommonFlags& flags, const std::vector<fs::path>& manifests) {
  const auto cfg = resolve_config(flags);
  std::vector<LabeledPsd> psds;
  for (const auto& f : features_of(manifests, cfg)) psds.insert(psds.end(), f.psds.begin(), f.psds.end());
  const auto curves = class_curves(psds, cfg.plot_electrode);
  const auto dir = out_dir(flags, cfg);
  for (const auto& c : curves) {
    const auto path = dir / (cfg.plot_electrode + "_" + c.label.name() + ".tsv");
    write_text(path, render_curve_tsv(c.curve));
    std::cout << path.string() << "\n";
  }
  write_text(dir / (cfg.plot_electrode + ".svg"), render_curves_svg(curves, cfg.plot_electrode));
  return kExitOk;
}

int cmd_train(const CommonFlags& flags, const std::vector<fs::path>& manifests) {
  const auto cfg = resolve_config(flags);
  const auto sessions = features_of(manifests, cfg);
  const auto tuning = tune_hyperparameters(gather(sessions, cfg.band), cfg.seed, cfg.tuning);
  const auto dir = out_dir(flags, cfg);
  save_model(tuning.model, dir / "model.json");
  std::cout << "electrodes:";
  for (const auto& e : tuning.electrodes) std::cout << " " << e;
  std::cout << "\nC: " << tuning.C << "\nvalidation accuracy: " << tuning.validation_accuracy << "\n";
  return kExitOk;
}

int cmd_evaluate(const CommonFlags& flags, const fs::path& model_path,
                 const std::vector<fs::path>& manifests) {
  const auto cfg = resolve_config(flags);
  const auto model = load_model(model_path);
  const auto data = gather(features_of(manifests, cfg), cfg.band).select(model.electrodes);
  const auto result = evaluate(model, data);
  std::ostringstream text;
  write_confusion(text, result.confusion, "evaluation");
  const auto dir = out_dir(flags, cfg);
  write_text(dir / "confusion.txt", text.str());
  const auto bits = wolpaw_bitrate(std::max<std::size_t>(2, result.confusion.classes.size()),
                                   result.accuracy, cfg.protocol.trial_duration);
  std::cout << "accuracy: " << result.accuracy << " (" << result.confusion.correct() << "/"
            << result.confusion.total() << ")\nbit rate: " << bits.bits_per_minute << " bits/min\n"
            << text.str();
  return kExitOk;
}

int cmd_run(const CommonFlags& flags) {
  const auto cfg = resolve_config(flags);
  const auto result = run_experiment(cfg);
  write_bundle(result, cfg.out_dir);
  std::cout << render_table(result);
  return kExitOk;
}

int cmd_report(const CommonFlags& flags, const fs::path& results) {
  const fs::path dir = flags.out ? *flags.out : results.parent_path();
  render_report(results, dir);
  std::cout << read_text(dir / "table.txt");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual-imagery BCI offline pipeline"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  CommonFlags flags;

  std::string session_id;
  fs::path input;
  fs::path model_path;
  std::vector<fs::path> manifests;

  auto* synth = app.add_subcommand("synth", "Generate one synthetic session (recording + manifest)");
  add_common(*synth, flags);
  synth->add_option("--id", session_id, "Session id (default: <protocol>-<seed>)");

  auto* pre = app.add_subcommand("preprocess", "Filter a recording with the configured chain");
  add_common(*pre, flags);
  pre->add_option("recording", input, "Recording file")->required()->check(CLI::ExistingFile);

  auto* psd = app.add_subcommand("psd", "Class-averaged PSD curves of one electrode");
  add_common(*psd, flags);
  psd->add_option("sessions", manifests, "Session manifests")->required()->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "Tune and train a model on session files");
  add_common(*train, flags);
  train->add_option("sessions", manifests, "Session manifests")->required()->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("evaluate", "Score a model on session files");
  add_common(*eval, flags);
  eval->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  eval->add_option("sessions", manifests, "Session manifests")->required()->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "Full experiment; writes the result bundle");
  add_common(*run, flags);

  auto* report = app.add_subcommand("report", "Re-render tables and curves from results.json");
  add_common(*report, flags);
  report->add_option("results", input, "results.json")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(flags, session_id);
    if (*pre) return cmd_preprocess(flags, input);
    if (*psd) return cmd_psd(flags, manifests);
    if (*train) return cmd_train(flags, manifests);
    if (*eval) return cmd_evaluate(flags, model_path, manifests);
    if (*run) return cmd_run(flags);
    if (*report) return cmd_report(flags, input);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? kExitUsage : kExitRuntime;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
