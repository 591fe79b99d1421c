#include "vibci/formats.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "vibci/error.hpp"

namespace vibci {

using nlohmann::json;

namespace {

std::string shortest(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view text, double& value) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

template <typename T>
T field(const json& j, const char* key, const std::string& source) {
  if (!j.contains(key)) throw ParseError(source, 0, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("bad field '") + key + "': " + e.what());
  }
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset only; report line 0 when unknown
    std::size_t line = 1;
    for (std::size_t i = 0; i < text.size() && i < e.byte; ++i)
      if (text[i] == '\n') ++line;
    throw ParseError(source, line, e.what());
  }
}

void check_version(const json& j, const char* format, int supported, const std::string& source) {
  if (field<std::string>(j, "format", source) != format)
    throw ParseError(source, 0, std::string("not a ") + format + " file");
  const int major = field<int>(j, "version", source);
  if (major != supported)
    throw ParseError(source, 0, "unsupported " + std::string(format) + " version " +
                                    std::to_string(major));
}

json protocol_to_json(const ProtocolSpec& p) {
  json classes = json::array();
  for (const auto& c : p.classes) classes.push_back(c.name());
  return {{"id", to_string(p.id)},
          {"trial_duration", p.trial_duration},
          {"trials_per_class", p.trials_per_class},
          {"classes", classes},
          {"window", {p.window_start, p.window_end}},
          {"auditory_costimulus", p.auditory_costimulus}};
}

ProtocolSpec protocol_from_json(const json& j, const std::string& source) {
  ProtocolSpec p;
  try {
    p.id = parse_protocol_id(field<std::string>(j, "id", source));
    p.trial_duration = field<double>(j, "trial_duration", source);
    p.trials_per_class = field<std::size_t>(j, "trials_per_class", source);
    for (const auto& name : field<std::vector<std::string>>(j, "classes", source))
      p.classes.push_back(TaskClass::parse(name));
    const auto window = field<std::vector<double>>(j, "window", source);
    if (window.size() != 2) throw ParseError(source, 0, "window needs two values");
    p.window_start = window[0];
    p.window_end = window[1];
    p.auditory_costimulus = field<bool>(j, "auditory_costimulus", source);
    p.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ParseError(source, 0, e.what());
  }
  return p;
}

}  // namespace

void write_recording(std::ostream& out, const Recording& rec) {
  out << "# vibci-recording " << kRecordingFormatVersion << '\n';
  out << "# rate: " << shortest(rec.rate()) << '\n';
  out << "# units: uV\n";
  out << "# ground: " << rec.layout().ground().name << '\n';
  out << "# reference: " << rec.layout().reference().name << '\n';
  out << "# provenance: " << rec.provenance() << '\n';
  const auto& names = rec.layout().signal_names();
  for (std::size_t ch = 0; ch < names.size(); ++ch) out << (ch ? "," : "") << names[ch];
  out << '\n';
  std::string line;
  for (std::size_t i = 0; i < rec.samples(); ++i) {
    line.clear();
    for (std::size_t ch = 0; ch < rec.channels(); ++ch) {
      if (ch) line += ',';
      line += shortest(rec.data()(ch, i));
    }
    line += '\n';
    out << line;
  }
}

Recording read_recording(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&] {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next() || !line.starts_with("# vibci-recording "))
    throw ParseError(source, line_no ? line_no : 1, "missing '# vibci-recording' format line");
  {
    const auto version = trim(std::string_view(line).substr(18));
    const auto major = version.substr(0, version.find('.'));
    if (major != std::to_string(kRecordingFormatVersion))
      throw ParseError(source, line_no, "unsupported recording format version '" +
                                            std::string(version) + "'");
  }

  double rate = 0.0;
  std::string ground, reference, provenance, units;
  bool have_rate = false;
  while (next() && line.starts_with('#')) {
    const std::string_view body = trim(std::string_view(line).substr(1));
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) throw ParseError(source, line_no, "malformed header line");
    const auto key = trim(body.substr(0, colon));
    const auto value = trim(body.substr(colon + 1));
    if (key == "rate") {
      if (!parse_double(value, rate) || !(rate > 0.0) || !std::isfinite(rate))
        throw ParseError(source, line_no, "bad sampling rate '" + std::string(value) + "'");
      have_rate = true;
    } else if (key == "units") {
      units = value;
    } else if (key == "ground") {
      ground = value;
    } else if (key == "reference") {
      reference = value;
    } else if (key == "provenance") {
      provenance = value;
    }
  }
  if (in.eof() && line.starts_with('#')) throw ParseError(source, line_no, "missing channel header");
  if (!have_rate) throw ParseError(source, line_no, "header has no rate");
  if (units != "uV") throw ParseError(source, line_no, "units must be uV");

  std::vector<Channel> channels;
  for (auto name : split_commas(line)) channels.push_back({std::string(name), ChannelRole::signal});
  channels.push_back({ground, ChannelRole::ground});
  channels.push_back({reference, ChannelRole::reference});
  std::optional<ChannelLayout> layout;
  try {
    layout.emplace(std::move(channels));
  } catch (const ValidationError& e) {
    throw ParseError(source, line_no, e.what());
  }

  const std::size_t n_channels = layout->signal_count();
  std::vector<double> values;
  while (next()) {
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != n_channels)
      throw ParseError(source, line_no, "expected " + std::to_string(n_channels) + " columns, found " +
                                            std::to_string(cells.size()));
    for (auto cell : cells) {
      double v = 0.0;
      if (!parse_double(cell, v) || !std::isfinite(v))
        throw ParseError(source, line_no, "bad sample value '" + std::string(cell) + "'");
      values.push_back(v);
    }
  }
  const std::size_t n_samples = values.size() / n_channels;
  if (n_samples == 0) throw ParseError(source, line_no, "recording has no samples");

  Matrix data(n_channels, n_samples);
  for (std::size_t i = 0; i < n_samples; ++i)
    for (std::size_t ch = 0; ch < n_channels; ++ch) data(ch, i) = values[i * n_channels + ch];
  return Recording(rate, std::move(data), std::move(*layout), std::move(provenance));
}

void save_recording(const Recording& recording, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_recording(out, recording);
  if (!out) throw Error("write failed for " + path.string());
}

Recording load_recording(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open recording " + path.string());
  return read_recording(in, path.string());
}

std::filesystem::path SessionManifest::recording_path(const std::filesystem::path& manifest_path) const {
  if (recording.is_absolute()) return recording;
  return manifest_path.parent_path() / recording;
}

std::string session_to_json(const SessionManifest& m) {
  json trials = json::array();
  for (const auto& t : m.plan.trials)
    trials.push_back({{"index", t.index},
                      {"label", t.label.name()},
                      {"start_sample", t.start_sample},
                      {"duration_samples", t.duration_samples}});
  json j = {{"format", "vibci-session"},
            {"version", kSessionFormatVersion},
            {"session_id", m.session_id},
            {"protocol", protocol_to_json(m.plan.protocol)},
            {"rate", m.plan.rate},
            {"seed", m.plan.seed},
            {"recording", m.recording.generic_string()},
            {"trials", trials}};
  return j.dump(2) + "\n";
}

SessionManifest session_from_json(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  check_version(j, "vibci-session", kSessionFormatVersion, source);
  SessionManifest m;
  m.session_id = field<std::string>(j, "session_id", source);
  if (m.session_id.empty()) throw ParseError(source, 0, "empty session_id");
  m.recording = field<std::string>(j, "recording", source);
  m.plan.protocol = protocol_from_json(field<json>(j, "protocol", source), source);
  m.plan.rate = field<double>(j, "rate", source);
  m.plan.seed = field<std::uint64_t>(j, "seed", source);
  if (!(m.plan.rate > 0.0)) throw ParseError(source, 0, "rate must be > 0");

  std::size_t expected_start = 0;
  for (const auto& t : field<json>(j, "trials", source)) {
    TrialDescriptor d;
    d.index = field<std::size_t>(t, "index", source);
    try {
      d.label = TaskClass::parse(field<std::string>(t, "label", source));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(source, 0, e.what());
    }
    d.start_sample = field<std::size_t>(t, "start_sample", source);
    d.duration_samples = field<std::size_t>(t, "duration_samples", source);
    d.protocol = m.plan.protocol.id;
    if (d.start_sample < expected_start)
      throw ParseError(source, 0, "trial " + std::to_string(d.index) + " overlaps its predecessor");
    expected_start = d.end_sample();
    m.plan.trials.push_back(d);
  }
  if (m.plan.trials.empty()) throw ParseError(source, 0, "manifest lists no trials");
  return m;
}

void save_session(const SessionManifest& manifest, const std::filesystem::path& path) {
  write_text(path, session_to_json(manifest));
}

SessionManifest load_session(const std::filesystem::path& path) {
  return session_from_json(read_text(path), path.string());
}

std::string model_to_json(const LinearModel& model) {
  json classes = json::array();
  for (const auto& c : model.classes) classes.push_back(c.name());
  json weights = json::array();
  for (std::size_t k = 0; k < model.weights.rows(); ++k) {
    const auto row = model.weights.row(k);
    weights.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json j = {{"format", "vibci-model"},
            {"version", kModelFormatVersion},
            {"classes", classes},
            {"electrodes", model.electrodes},
            {"C", model.C},
            {"scaler", {{"mean", model.scaler.mean}, {"scale", model.scaler.scale}}},
            {"weights", weights},
            {"biases", model.biases}};
  return j.dump(2) + "\n";
}

LinearModel model_from_json(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  check_version(j, "vibci-model", kModelFormatVersion, source);
  LinearModel m;
  try {
    for (const auto& name : field<std::vector<std::string>>(j, "classes", source))
      m.classes.push_back(TaskClass::parse(name));
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ParseError(source, 0, e.what());
  }
  m.electrodes = field<std::vector<std::string>>(j, "electrodes", source);
  m.C = field<double>(j, "C", source);
  const auto scaler = field<json>(j, "scaler", source);
  m.scaler.mean = field<std::vector<double>>(scaler, "mean", source);
  m.scaler.scale = field<std::vector<double>>(scaler, "scale", source);
  const auto rows = field<std::vector<std::vector<double>>>(j, "weights", source);
  m.biases = field<std::vector<double>>(j, "biases", source);

  const std::size_t dim = m.scaler.mean.size();
  if (m.classes.size() < 2 || rows.size() != m.classes.size() || m.biases.size() != m.classes.size())
    throw ParseError(source, 0, "class, weight and bias counts disagree");
  if (m.scaler.scale.size() != dim) throw ParseError(source, 0, "scaler size mismatch");
  for (double s : m.scaler.scale)
    if (!(s > 0.0)) throw ParseError(source, 0, "scaler scale must be > 0");
  m.weights = Matrix(rows.size(), dim);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != dim) throw ParseError(source, 0, "weight row length mismatch");
    std::copy(rows[k].begin(), rows[k].end(), m.weights.row(k).begin());
  }
  return m;
}

void save_model(const LinearModel& model, const std::filesystem::path& path) {
  write_text(path, model_to_json(model));
}

LinearModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_text(path), path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace vibci
