#include "vibci/config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "vibci/error.hpp"
#include "vibci/formats.hpp"

namespace vibci {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

class Reader {
public:
  Reader(const pt::ptree& tree, std::string source) : tree_(tree), source_(std::move(source)) {
    static const std::map<std::string, std::set<std::string>> known{
        {"experiment", {"seed", "out"}},
        {"protocol", {"id", "trial_duration", "trials_per_class", "classes", "window_start",
                      "window_end", "rate"}},
        {"data", {"source", "train_sessions", "test_sessions", "train", "test"}},
        {"filters", {"lowpass_hz", "lowpass_order", "notch_low_hz", "notch_high_hz", "notch_order",
                     "bandpass_low_hz", "bandpass_high_hz", "bandpass_order"}},
        {"spectral", {"seg_len", "overlap", "band_low_hz", "band_high_hz"}},
        {"tuning", {"c_grid", "max_electrodes", "tolerance", "max_epochs",
                    "search_tolerance", "search_max_epochs"}},
        {"synth", {"pink_beta", "pink_sigma", "white_sigma", "line_hz", "line_amplitude",
                   "fundamental", "harmonics", "vi_attenuation", "gains"}},
        {"report", {"electrode"}}};
    for (const auto& [section, keys] : tree_) {
      auto it = known.find(section);
      if (it == known.end()) throw ValidationError(source_ + ": unknown section [" + section + "]");
      for (const auto& [key, value] : keys)
        if (!it->second.contains(key))
          throw ValidationError(source_ + ": unknown key '" + key + "' in [" + section + "]");
    }
  }

  bool has(const std::string& path) const { return tree_.get_child_optional(pt::ptree::path_type(path, '.')).has_value(); }

  std::string text(const std::string& path) const {
    return tree_.get<std::string>(pt::ptree::path_type(path, '.'));
  }

  template <typename T>
  void get(const std::string& path, T& target) const {
    if (!has(path)) return;
    try {
      target = tree_.get<T>(pt::ptree::path_type(path, '.'));
    } catch (const pt::ptree_error&) {
      throw ValidationError(source_ + ": bad value for " + path + " ('" + text(path) + "')");
    }
  }

  std::vector<double> numbers(const std::string& path) const {
    std::vector<double> out;
    for (const auto& item : split_list(text(path))) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ValidationError(source_ + ": bad number '" + item + "' in " + path);
      }
    }
    return out;
  }

private:
  const pt::ptree& tree_;
  std::string source_;
};

}  // namespace

void ExperimentConfig::validate() const {
  protocol.validate();
  if (!(rate > 0.0)) throw ValidationError("rate must be > 0");
  seconds_to_samples(protocol.trial_duration, rate);
  seconds_to_samples(protocol.window_start, rate);
  seconds_to_samples(protocol.window_end, rate);
  try {
    const auto chain = filters.at_rate(rate);
    chain.lowpass.validate();
    chain.notch.validate();
    chain.bandpass.validate();
  } catch (const DesignError& e) {
    throw ValidationError(std::string("filters: ") + e.what());
  }
  if (welch.seg_len < 8) throw ValidationError("welch seg_len must be >= 8");
  if (welch.seg_len > seconds_to_samples(protocol.window_end - protocol.window_start, rate))
    throw ValidationError("welch seg_len exceeds the analysis window");
  if (!(welch.overlap >= 0.0 && welch.overlap < 1.0)) throw ValidationError("welch overlap must be in [0, 1)");
  if (!(band.lo >= 0.0 && band.lo <= band.hi && band.hi <= rate / 2.0))
    throw ValidationError("feature band must satisfy 0 <= low <= high <= Nyquist");
  if (tuning.c_grid.empty()) throw ValidationError("tuning c_grid is empty");
  for (double c : tuning.c_grid)
    if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("tuning c_grid values must be > 0");
  for (const auto* solver : {&tuning.solver, &tuning.final_solver}) {
    if (!(solver->tolerance > 0.0)) throw ValidationError("tuning tolerance must be > 0");
    if (solver->max_epochs == 0) throw ValidationError("tuning max_epochs must be > 0");
  }
  if (!synth.layout.signal_index(plot_electrode))
    throw ValidationError("report electrode '" + plot_electrode + "' is not a signal channel");

  if (source == DataSource::synth) {
    synth.validate();
    if (std::abs(synth.rate - rate) > 1e-9 * rate) throw ValidationError("synth rate differs from protocol rate");
    if (train_sessions == 0 || test_sessions == 0)
      throw ValidationError("synthetic runs need at least one train and one test session");
  } else {
    if (train_manifests.empty() || test_manifests.empty())
      throw ValidationError("file runs need train and test session manifests");
    for (const auto* list : {&train_manifests, &test_manifests})
      for (const auto& p : *list)
        if (!std::filesystem::exists(p)) throw ValidationError("session manifest not found: " + p.string());
  }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& source) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(source, e.line(), e.message());
  }
  const Reader r(tree, source);
  ExperimentConfig cfg;

  r.get("experiment.seed", cfg.seed);
  if (r.has("experiment.out")) cfg.out_dir = r.text("experiment.out");

  if (r.has("protocol.id")) {
    const auto id = parse_protocol_id(r.text("protocol.id"));
    if (id != ProtocolId::custom) {
      cfg.protocol = ProtocolSpec::builtin(id);
    } else {
      cfg.protocol = ProtocolSpec{};
      cfg.protocol.id = ProtocolId::custom;
    }
  }
  r.get("protocol.trial_duration", cfg.protocol.trial_duration);
  r.get("protocol.trials_per_class", cfg.protocol.trials_per_class);
  r.get("protocol.window_start", cfg.protocol.window_start);
  r.get("protocol.window_end", cfg.protocol.window_end);
  r.get("protocol.rate", cfg.rate);
  if (r.has("protocol.classes")) {
    cfg.protocol.classes.clear();
    for (const auto& name : split_list(r.text("protocol.classes")))
      cfg.protocol.classes.push_back(TaskClass::parse(name));
  }

  if (r.has("data.source")) {
    const auto s = r.text("data.source");
    if (s == "synth") cfg.source = DataSource::synth;
    else if (s == "files") cfg.source = DataSource::files;
    else throw ValidationError(source + ": data.source must be 'synth' or 'files'");
  }
  r.get("data.train_sessions", cfg.train_sessions);
  r.get("data.test_sessions", cfg.test_sessions);
  auto paths = [&](const std::string& key) {
    std::vector<std::filesystem::path> out;
    if (!r.has(key)) return out;
    for (const auto& item : split_list(r.text(key))) {
      std::filesystem::path p(item);
      out.push_back(p.is_absolute() ? p : base_dir / p);
    }
    return out;
  };
  cfg.train_manifests = paths("data.train");
  cfg.test_manifests = paths("data.test");

  r.get("filters.lowpass_order", cfg.filters.lowpass.order);
  r.get("filters.notch_order", cfg.filters.notch.order);
  r.get("filters.bandpass_order", cfg.filters.bandpass.order);
  r.get("filters.lowpass_hz", cfg.filters.lowpass.edges[0]);
  r.get("filters.notch_low_hz", cfg.filters.notch.edges[0]);
  r.get("filters.notch_high_hz", cfg.filters.notch.edges[1]);
  r.get("filters.bandpass_low_hz", cfg.filters.bandpass.edges[0]);
  r.get("filters.bandpass_high_hz", cfg.filters.bandpass.edges[1]);
  cfg.filters = cfg.filters.at_rate(cfg.rate);

  r.get("spectral.seg_len", cfg.welch.seg_len);
  r.get("spectral.overlap", cfg.welch.overlap);
  r.get("spectral.band_low_hz", cfg.band.lo);
  r.get("spectral.band_high_hz", cfg.band.hi);

  if (r.has("tuning.c_grid")) cfg.tuning.c_grid = r.numbers("tuning.c_grid");
  r.get("tuning.max_electrodes", cfg.tuning.max_electrodes);
  r.get("tuning.tolerance", cfg.tuning.final_solver.tolerance);
  r.get("tuning.max_epochs", cfg.tuning.final_solver.max_epochs);
  r.get("tuning.search_tolerance", cfg.tuning.solver.tolerance);
  r.get("tuning.search_max_epochs", cfg.tuning.solver.max_epochs);

  cfg.synth.rate = cfg.rate;
  r.get("synth.pink_beta", cfg.synth.pink_beta);
  r.get("synth.pink_sigma", cfg.synth.pink_sigma);
  r.get("synth.white_sigma", cfg.synth.white_sigma);
  r.get("synth.line_hz", cfg.synth.line_hz);
  r.get("synth.line_amplitude", cfg.synth.line_amplitude);
  r.get("synth.fundamental", cfg.synth.response.fundamental);
  if (r.has("synth.harmonics")) cfg.synth.response.harmonics = r.numbers("synth.harmonics");
  r.get("synth.vi_attenuation", cfg.synth.vi_attenuation);
  if (r.has("synth.gains")) {
    const auto g = r.text("synth.gains");
    if (g == "standard") {
      cfg.synth.gains = SpatialGains::standard(cfg.synth.layout);
    } else if (g.starts_with("only:")) {
      cfg.synth.gains = SpatialGains::only(cfg.synth.layout, split_list(g.substr(5)));
    } else {
      throw ValidationError(source + ": synth.gains must be 'standard' or 'only:<electrodes>'");
    }
  }

  r.get("report.electrode", cfg.plot_electrode);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_config(read_text(path), base, path.string());
}

std::string default_config_text() {
  return R"(; vibci experiment configuration. Every key is optional; the values shown
; are the defaults. Lines starting with ';' or '#' are comments.

[experiment]
; global seed; scheduling, synthesis, the tuning split and the solver derive from it
seed = 7
; output directory for the result bundle
out = results

[protocol]
; P1a, P1b, P1c, P1d, P2a, P3a or custom (custom needs every key below)
id = P3a
; sampling rate in Hz
rate = 256
; for custom protocols or overrides:
; trial_duration = 9
; trials_per_class = 20
; classes = VI-5, VI-7, REST
; window_start = 3
; window_end = 7

[data]
; synth: generate sessions in memory; files: read session manifests
source = synth
; synthetic sessions per split (13 x 60 = 780 train, 6 x 60 = 360 test trials for P3a)
train_sessions = 13
test_sessions = 6
; files mode: comma-separated manifest paths, relative to this file
; train = s1/session.json, s2/session.json
; test = s3/session.json

[filters]
; Butterworth prototype orders; band designs realize twice as many poles
lowpass_hz = 60
lowpass_order = 4
notch_low_hz = 48
notch_high_hz = 52
notch_order = 4
bandpass_low_hz = 2
bandpass_high_hz = 36
bandpass_order = 8

[spectral]
; Welch segment length in samples and fractional overlap
seg_len = 512
overlap = 0.5
; feature band, inclusive
band_low_hz = 2
band_high_hz = 36

[tuning]
; regularization candidates
c_grid = 0.03125, 0.125, 0.5, 2, 8, 32
; cap on greedily selected electrodes, 0 for none
max_electrodes = 0
; dual solver stopping rule for the final model: max |projected gradient| and epoch cap
tolerance = 0.0001
max_epochs = 10000
; looser rule used while scoring candidates on the split
search_tolerance = 0.001
search_max_epochs = 1000

[synth]
; 1/f^beta background, per trial and electrode (µV standard deviation)
pink_beta = 1
pink_sigma = 1.5
white_sigma = 0.5
line_hz = 50
line_amplitude = 5
; evoked response amplitude (µV) and harmonic amplitudes at 2f, 3f, ...
fundamental = 2
harmonics = 0.5
; VI response relative to SSVEP
vi_attenuation = 0.3
; standard, or only:<electrode list> (unit gain there, zero elsewhere)
gains = standard

[report]
; electrode for the class-averaged PSD curves
electrode = AF4
)";
}

}  // namespace vibci
