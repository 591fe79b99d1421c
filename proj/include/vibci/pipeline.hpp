#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vibci/config.hpp"
#include "vibci/formats.hpp"
#include "vibci/learner.hpp"
#include "vibci/metrics.hpp"
#include "vibci/spectral.hpp"

namespace vibci {

inline constexpr const char* kResultsSchema = "vibci-results";
inline constexpr int kResultsMajorVersion = 1;
inline constexpr int kResultsMinorVersion = 0;

struct LoadedSession {
  SessionManifest manifest;
  Recording recording;
};

/// Schedules and renders one synthetic session.
LoadedSession synthesize_session(const ProtocolSpec& protocol, const SynthConfig& synth,
                                 std::uint64_t seed, std::string session_id);

/// Reads a manifest and its recording and checks that every trial fits.
LoadedSession load_session_files(const std::filesystem::path& manifest_path);

/// Per-trial output of preprocess -> window -> Welch -> features.
struct SessionFeatures {
  std::vector<FeatureVector> features;  // every signal electrode
  std::vector<LabeledPsd> psds;         // full PSD of every trial
  double bin_width = 0.0;
};

SessionFeatures session_features(const LoadedSession& session, const FilterChain& filters,
                                 const WelchParams& welch, Band band);

/// Every session's feature vectors as one dataset.
Dataset gather(std::span<const SessionFeatures> sessions, Band band);

struct ClassCurve {
  TaskClass label;
  PsdCurve curve;
};

/// Class-averaged PSD curves of one electrode, classes in canonical order.
std::vector<ClassCurve> class_curves(std::span<const LabeledPsd> psds, const std::string& electrode);

struct ExperimentResult {
  std::string session_label;  // Table I row name
  ProtocolSpec protocol;
  std::uint64_t seed = 0;
  std::vector<std::string> train_sessions;
  std::vector<std::string> test_sessions;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  ConfusionMatrix train_confusion;
  ConfusionMatrix test_confusion;
  std::vector<std::string> electrodes;
  double C = 0.0;
  double validation_accuracy = 0.0;
  std::vector<CandidateScore> audit;
  Bitrate bitrate;
  std::string plot_electrode;
  std::vector<ClassCurve> curves;
  LinearModel model;
};

/// "5 Hz w/ s.", "Mult. freq.", "Pure VI", ...
std::string session_label(ProtocolId id);

/// Full run: sessions -> features -> tuning on the training split -> retrain
/// on all training data -> evaluation on the test sessions. Throws
/// ValidationError if a session appears in both splits; other failures are
/// rethrown as StageError naming the stage.
ExperimentResult run_experiment(const ExperimentConfig& config);

std::string results_to_json(const ExperimentResult& result);
/// Rejects unknown schema names and major versions.
ExperimentResult results_from_json(const std::string& text, const std::string& source = "<string>");

std::string render_table(const ExperimentResult& result);
std::string render_confusion(const ExperimentResult& result);
std::string render_curve_tsv(const PsdCurve& curve);
/// Static SVG line plot of class curves (log power axis).
std::string render_curves_svg(std::span<const ClassCurve> curves, const std::string& electrode);

/// results.json, table.txt, confusion.txt, model.json, psd/<electrode>_<class>.tsv
/// and psd/<electrode>.svg under `dir`.
void write_bundle(const ExperimentResult& result, const std::filesystem::path& dir);
/// Re-renders table.txt, confusion.txt and the curve files from a results file.
void render_report(const std::filesystem::path& results_path, const std::filesystem::path& dir);

}  // namespace vibci
