#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "vibci/learner.hpp"
#include "vibci/signal_model.hpp"

namespace vibci {

inline constexpr int kRecordingFormatVersion = 1;
inline constexpr int kSessionFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;

// Recording file: '#'-prefixed header (format line, rate, units, ground,
// reference, provenance), a line of signal channel names, then one
// comma-separated row per time step with shortest round-trip decimals.

void write_recording(std::ostream& out, const Recording& recording);
/// Throws ParseError carrying the 1-based line number of the first problem.
Recording read_recording(std::istream& in, const std::string& source = "<stream>");

void save_recording(const Recording& recording, const std::filesystem::path& path);
Recording load_recording(const std::filesystem::path& path);

/// Session manifest (JSON): session id, protocol definition, rate, seed,
/// recording path relative to the manifest, and every trial.
struct SessionManifest {
  std::string session_id;
  SessionPlan plan;
  std::filesystem::path recording;  // as written in the file

  /// Recording path resolved against the manifest's directory.
  std::filesystem::path recording_path(const std::filesystem::path& manifest_path) const;
};

std::string session_to_json(const SessionManifest& manifest);
SessionManifest session_from_json(const std::string& text, const std::string& source = "<string>");
void save_session(const SessionManifest& manifest, const std::filesystem::path& path);
SessionManifest load_session(const std::filesystem::path& path);

/// Model file (JSON) with classes, electrodes, C, scaler and weights.
std::string model_to_json(const LinearModel& model);
LinearModel model_from_json(const std::string& text, const std::string& source = "<string>");
void save_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace vibci
