#include "vibci/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vibci/error.hpp"
#include "vibci/rng.hpp"

namespace vibci {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTrainStream = 0x1000;
constexpr std::uint64_t kTestStream = 0x2000;
constexpr std::uint64_t kTuneStream = 0x3000;

template <typename F>
auto stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const ValidationError& e) {
    throw StageError(name, e.what(), true);
  } catch (const Error& e) {
    throw StageError(name, e.what(), false);
  }
}

std::string percent(double fraction) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << fraction * 100.0 << '%';
  return ss.str();
}

json confusion_to_json(const ConfusionMatrix& m) {
  json classes = json::array();
  for (const auto& c : m.classes) classes.push_back(c.name());
  return {{"classes", classes}, {"counts", m.counts}};
}

ConfusionMatrix confusion_from_json(const json& j) {
  std::vector<TaskClass> classes;
  for (const auto& name : j.at("classes").get<std::vector<std::string>>())
    classes.push_back(TaskClass::parse(name));
  ConfusionMatrix m(classes);
  if (m.classes != classes) throw ValidationError("confusion classes not in canonical order");
  m.counts = j.at("counts").get<std::vector<std::vector<std::size_t>>>();
  if (m.counts.size() != classes.size()) throw ValidationError("confusion matrix shape mismatch");
  for (const auto& row : m.counts)
    if (row.size() != classes.size()) throw ValidationError("confusion matrix shape mismatch");
  return m;
}

std::string file_token(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  return out;
}

}  // namespace

LoadedSession synthesize_session(const ProtocolSpec& protocol, const SynthConfig& synth,
                                 std::uint64_t seed, std::string session_id) {
  SynthConfig cfg = synth;
  cfg.seed = derive_seed(seed, 1);
  SessionPlan plan = schedule_session(protocol, cfg.rate, derive_seed(seed, 0));
  Recording recording = generate_session(plan, cfg);
  return {SessionManifest{std::move(session_id), std::move(plan), "recording.csv"}, std::move(recording)};
}

LoadedSession load_session_files(const std::filesystem::path& manifest_path) {
  SessionManifest manifest = load_session(manifest_path);
  Recording recording = load_recording(manifest.recording_path(manifest_path));
  if (std::abs(recording.rate() - manifest.plan.rate) > 1e-9 * recording.rate())
    throw ValidationError(manifest_path.string() + ": manifest rate differs from recording rate");
  const std::size_t duration = seconds_to_samples(manifest.plan.protocol.trial_duration, recording.rate());
  for (const auto& t : manifest.plan.trials) {
    if (t.duration_samples != duration)
      throw ValidationError(manifest_path.string() + ": trial " + std::to_string(t.index) +
                            " duration disagrees with the protocol");
    if (t.end_sample() > recording.samples())
      throw ValidationError(manifest_path.string() + ": trial " + std::to_string(t.index) +
                            " extends past the end of the recording");
  }
  return {std::move(manifest), std::move(recording)};
}

SessionFeatures session_features(const LoadedSession& session, const FilterChain& filters,
                                 const WelchParams& welch, Band band) {
  const auto& rec = session.recording;
  const auto stages = filters.at_rate(rec.rate()).design();
  const Recording clean = preprocess(rec, stages);
  const auto& names = rec.layout().signal_names();

  SessionFeatures out;
  for (const auto& trial : session.manifest.plan.trials) {
    const Matrix window = extract_window(clean, trial, session.manifest.plan.protocol);
    PsdEstimate psd = welch_psd(window, rec.rate(), welch, names);
    out.bin_width = psd.resolution();
    out.features.push_back(extract_features(psd, band, names, trial.label));
    out.psds.push_back({std::move(psd), trial.label});
  }
  return out;
}

Dataset gather(std::span<const SessionFeatures> sessions, Band band) {
  if (sessions.empty()) throw ValidationError("no sessions to gather");
  std::vector<FeatureVector> all;
  for (const auto& s : sessions) all.insert(all.end(), s.features.begin(), s.features.end());
  return Dataset(std::move(all), band, sessions.front().bin_width);
}

std::vector<ClassCurve> class_curves(std::span<const LabeledPsd> psds, const std::string& electrode) {
  std::vector<TaskClass> labels;
  for (const auto& p : psds)
    if (std::find(labels.begin(), labels.end(), p.label) == labels.end()) labels.push_back(p.label);
  std::sort(labels.begin(), labels.end(), canonical_less);
  std::vector<ClassCurve> out;
  for (const auto& label : labels) out.push_back({label, average_psd_by_class(psds, label, electrode)});
  return out;
}

std::string session_label(ProtocolId id) {
  switch (id) {
    case ProtocolId::P1a: return "5 Hz w/ s.";
    case ProtocolId::P1b: return "7 Hz w/ s.";
    case ProtocolId::P1c: return "5 Hz w/o s.";
    case ProtocolId::P1d: return "7 Hz w/o s.";
    case ProtocolId::P2a: return "Mult. freq.";
    case ProtocolId::P3a: return "Pure VI";
    case ProtocolId::custom: break;
  }
  return "Custom";
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  stage("config", [&] {
    config.validate();
    return 0;
  });

  std::vector<LoadedSession> train_sessions;
  std::vector<LoadedSession> test_sessions;
  stage("load", [&] {
    if (config.source == DataSource::synth) {
      for (std::size_t i = 0; i < config.train_sessions; ++i)
        train_sessions.push_back(synthesize_session(config.protocol, config.synth,
                                                    derive_seed(config.seed, kTrainStream + i),
                                                    "synth-train-" + std::to_string(i)));
      for (std::size_t i = 0; i < config.test_sessions; ++i)
        test_sessions.push_back(synthesize_session(config.protocol, config.synth,
                                                   derive_seed(config.seed, kTestStream + i),
                                                   "synth-test-" + std::to_string(i)));
    } else {
      for (const auto& p : config.train_manifests) train_sessions.push_back(load_session_files(p));
      for (const auto& p : config.test_manifests) test_sessions.push_back(load_session_files(p));
    }
    return 0;
  });

  ExperimentResult result;
  result.protocol = config.protocol;
  result.session_label = session_label(config.protocol.id);
  result.seed = config.seed;
  result.plot_electrode = config.plot_electrode;

  std::set<std::string> train_ids;
  for (const auto& s : train_sessions) {
    result.train_sessions.push_back(s.manifest.session_id);
    train_ids.insert(s.manifest.session_id);
  }
  for (const auto& s : test_sessions) {
    result.test_sessions.push_back(s.manifest.session_id);
    if (train_ids.contains(s.manifest.session_id))
      throw ValidationError("session '" + s.manifest.session_id +
                            "' appears in both the training and the testing set");
  }
  for (const auto* group : {&train_sessions, &test_sessions})
    for (const auto& s : *group)
      if (!(s.manifest.plan.protocol.window_start == config.protocol.window_start &&
            s.manifest.plan.protocol.window_end == config.protocol.window_end))
        throw ValidationError("session '" + s.manifest.session_id +
                              "' uses a different analysis window than the configured protocol");

  std::vector<SessionFeatures> train_features;
  std::vector<SessionFeatures> test_features;
  stage("features", [&] {
    for (const auto& s : train_sessions)
      train_features.push_back(session_features(s, config.filters, config.welch, config.band));
    for (const auto& s : test_sessions)
      test_features.push_back(session_features(s, config.filters, config.welch, config.band));
    return 0;
  });

  const Dataset train = stage("features", [&] { return gather(train_features, config.band); });
  const Dataset test = stage("features", [&] { return gather(test_features, config.band); });

  const TuningResult tuning = stage("tune", [&] {
    return tune_hyperparameters(train, derive_seed(config.seed, kTuneStream), config.tuning);
  });
  result.electrodes = tuning.electrodes;
  result.C = tuning.C;
  result.validation_accuracy = tuning.validation_accuracy;
  result.audit = tuning.audit;
  result.model = tuning.model;

  stage("evaluate", [&] {
    const auto train_eval = evaluate(result.model, train.select(result.electrodes));
    const auto test_eval = evaluate(result.model, test.select(result.electrodes));
    result.train_count = train.size();
    result.test_count = test.size();
    result.train_accuracy = train_eval.accuracy;
    result.test_accuracy = test_eval.accuracy;
    result.train_confusion = train_eval.confusion;
    result.test_confusion = test_eval.confusion;
    result.bitrate = wolpaw_bitrate(std::max<std::size_t>(2, test_eval.confusion.classes.size()),
                                    test_eval.accuracy, config.protocol.trial_duration);
    return 0;
  });

  stage("report", [&] {
    std::vector<LabeledPsd> all;
    for (const auto* group : {&train_features, &test_features})
      for (const auto& s : *group) all.insert(all.end(), s.psds.begin(), s.psds.end());
    result.curves = class_curves(all, config.plot_electrode);
    return 0;
  });
  return result;
}

std::string results_to_json(const ExperimentResult& r) {
  json audit = json::array();
  for (const auto& a : r.audit)
    audit.push_back({{"electrodes", a.electrodes}, {"C", a.C}, {"accuracy", a.accuracy}});
  json curves = json::array();
  for (const auto& c : r.curves)
    curves.push_back({{"class", c.label.name()}, {"freqs", c.curve.freqs}, {"power", c.curve.power}});
  json protocol_classes = json::array();
  for (const auto& c : r.protocol.classes) protocol_classes.push_back(c.name());

  json j = {
      {"schema", kResultsSchema},
      {"version", std::to_string(kResultsMajorVersion) + "." + std::to_string(kResultsMinorVersion)},
      {"session_label", r.session_label},
      {"protocol",
       {{"id", to_string(r.protocol.id)},
        {"trial_duration", r.protocol.trial_duration},
        {"trials_per_class", r.protocol.trials_per_class},
        {"classes", protocol_classes},
        {"window", {r.protocol.window_start, r.protocol.window_end}},
        {"auditory_costimulus", r.protocol.auditory_costimulus}}},
      {"seed", r.seed},
      {"train_sessions", r.train_sessions},
      {"test_sessions", r.test_sessions},
      {"train_count", r.train_count},
      {"test_count", r.test_count},
      {"train_accuracy", r.train_accuracy},
      {"test_accuracy", r.test_accuracy},
      {"train_confusion", confusion_to_json(r.train_confusion)},
      {"test_confusion", confusion_to_json(r.test_confusion)},
      {"tuning",
       {{"electrodes", r.electrodes},
        {"C", r.C},
        {"validation_accuracy", r.validation_accuracy},
        {"audit", audit}}},
      {"bitrate",
       {{"bits_per_trial", r.bitrate.bits_per_trial},
        {"bits_per_minute", r.bitrate.bits_per_minute},
        {"below_chance", r.bitrate.below_chance}}},
      {"psd_electrode", r.plot_electrode},
      {"psd_curves", curves},
      {"model", json::parse(model_to_json(r.model))}};
  return j.dump(2) + "\n";
}

ExperimentResult results_from_json(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, 0, e.what());
  }
  try {
    if (j.at("schema").get<std::string>() != kResultsSchema)
      throw ParseError(source, 0, "not a results file");
    const auto version = j.at("version").get<std::string>();
    if (version.substr(0, version.find('.')) != std::to_string(kResultsMajorVersion))
      throw ParseError(source, 0, "unsupported results version " + version);

    ExperimentResult r;
    r.session_label = j.at("session_label").get<std::string>();
    const auto& p = j.at("protocol");
    r.protocol.id = parse_protocol_id(p.at("id").get<std::string>());
    r.protocol.trial_duration = p.at("trial_duration").get<double>();
    r.protocol.trials_per_class = p.at("trials_per_class").get<std::size_t>();
    for (const auto& name : p.at("classes").get<std::vector<std::string>>())
      r.protocol.classes.push_back(TaskClass::parse(name));
    const auto window = p.at("window").get<std::vector<double>>();
    r.protocol.window_start = window.at(0);
    r.protocol.window_end = window.at(1);
    r.protocol.auditory_costimulus = p.at("auditory_costimulus").get<bool>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.train_sessions = j.at("train_sessions").get<std::vector<std::string>>();
    r.test_sessions = j.at("test_sessions").get<std::vector<std::string>>();
    r.train_count = j.at("train_count").get<std::size_t>();
    r.test_count = j.at("test_count").get<std::size_t>();
    r.train_accuracy = j.at("train_accuracy").get<double>();
    r.test_accuracy = j.at("test_accuracy").get<double>();
    r.train_confusion = confusion_from_json(j.at("train_confusion"));
    r.test_confusion = confusion_from_json(j.at("test_confusion"));
    const auto& t = j.at("tuning");
    r.electrodes = t.at("electrodes").get<std::vector<std::string>>();
    r.C = t.at("C").get<double>();
    r.validation_accuracy = t.at("validation_accuracy").get<double>();
    for (const auto& a : t.at("audit"))
      r.audit.push_back({a.at("electrodes").get<std::vector<std::string>>(), a.at("C").get<double>(),
                         a.at("accuracy").get<double>()});
    const auto& b = j.at("bitrate");
    r.bitrate = {b.at("bits_per_trial").get<double>(), b.at("bits_per_minute").get<double>(),
                 b.at("below_chance").get<bool>()};
    r.plot_electrode = j.at("psd_electrode").get<std::string>();
    for (const auto& c : j.at("psd_curves"))
      r.curves.push_back({TaskClass::parse(c.at("class").get<std::string>()),
                          {c.at("freqs").get<std::vector<double>>(), c.at("power").get<std::vector<double>>()}});
    r.model = model_from_json(j.at("model").dump(), source);
    return r;
  } catch (const json::exception& e) {
    throw ParseError(source, 0, e.what());
  }
}

std::string render_table(const ExperimentResult& r) {
  std::ostringstream out;
  out << "# Classification accuracy and data-set sizes\n";
  out << std::left << std::setw(14) << "Session" << std::right << std::setw(12) << "Train acc."
      << std::setw(12) << "Test acc." << std::setw(10) << "Train #" << std::setw(10) << "Test #" << '\n';
  out << std::left << std::setw(14) << r.session_label << std::right << std::setw(12)
      << percent(r.train_accuracy) << std::setw(12) << percent(r.test_accuracy) << std::setw(10)
      << r.train_count << std::setw(10) << r.test_count << '\n';
  out << '\n';
  out << "protocol: " << to_string(r.protocol.id) << '\n';
  out << "electrodes: ";
  for (std::size_t i = 0; i < r.electrodes.size(); ++i) out << (i ? "," : "") << r.electrodes[i];
  out << '\n';
  out << "C: " << r.C << '\n';
  out << "validation accuracy: " << percent(r.validation_accuracy) << '\n';
  out << "chance level: " << percent(1.0 / static_cast<double>(std::max<std::size_t>(1, r.test_confusion.classes.size())))
      << '\n';
  out << "bit-rate: " << std::fixed << std::setprecision(2) << r.bitrate.bits_per_minute
      << " bits/min (" << std::setprecision(4) << r.bitrate.bits_per_trial << " bits/trial, "
      << std::setprecision(0) << r.protocol.trial_duration << " s trials)"
      << (r.bitrate.below_chance ? " [below chance, clamped to 0]" : "") << '\n';
  return out.str();
}

std::string render_confusion(const ExperimentResult& r) {
  std::ostringstream out;
  write_confusion(out, r.train_confusion, r.session_label + " train");
  out << '\n';
  write_confusion(out, r.test_confusion, r.session_label + " test");
  return out.str();
}

std::string render_curve_tsv(const PsdCurve& curve) {
  std::ostringstream out;
  out << "# freq_hz\tpower_uv2_per_hz\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < curve.freqs.size(); ++k)
    out << curve.freqs[k] << '\t' << curve.power[k] << '\n';
  return out.str();
}

std::string render_curves_svg(std::span<const ClassCurve> curves, const std::string& electrode) {
  constexpr double width = 640, height = 400, left = 60, right = 20, top = 30, bottom = 40;
  constexpr double f_max = 40.0;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  double lo = 1e300, hi = -1e300;
  for (const auto& c : curves)
    for (std::size_t k = 0; k < c.curve.freqs.size(); ++k)
      if (c.curve.freqs[k] > 0.0 && c.curve.freqs[k] <= f_max && c.curve.power[k] > 0.0) {
        lo = std::min(lo, std::log10(c.curve.power[k]));
        hi = std::max(hi, std::log10(c.curve.power[k]));
      }
  if (!(lo < hi)) {
    lo = -1.0;
    hi = 1.0;
  }
  auto x = [&](double f) { return left + (width - left - right) * f / f_max; };
  auto y = [&](double p) { return top + (height - top - bottom) * (hi - std::log10(p)) / (hi - lo); };

  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">Class-averaged PSD, "
      << electrode << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
      << "\" stroke=\"black\"/>\n";
  for (int f = 0; f <= 40; f += 5)
    out << "<text x=\"" << x(f) - 6 << "\" y=\"" << height - bottom + 16
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << f << "</text>\n";
  out << "<text x=\"" << (width / 2) << "\" y=\"" << height - 6
      << "\" font-family=\"sans-serif\" font-size=\"12\">Frequency (Hz)</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = colors[i % std::size(colors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < curves[i].curve.freqs.size(); ++k) {
      const double f = curves[i].curve.freqs[k];
      const double p = curves[i].curve.power[k];
      if (f <= 0.0 || f > f_max || p <= 0.0) continue;
      out << x(f) << ',' << y(p) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << width - right - 90 << "\" y=\"" << top + 16 * (i + 1) << "\" fill=\"" << color
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << curves[i].label.name() << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

namespace {

void write_rendered(const ExperimentResult& r, const std::filesystem::path& dir) {
  write_text(dir / "table.txt", render_table(r));
  write_text(dir / "confusion.txt", render_confusion(r));
  for (const auto& c : r.curves)
    write_text(dir / "psd" / (file_token(r.plot_electrode) + "_" + file_token(c.label.name()) + ".tsv"),
               render_curve_tsv(c.curve));
  write_text(dir / "psd" / (file_token(r.plot_electrode) + ".svg"), render_curves_svg(r.curves, r.plot_electrode));
}

}  // namespace

void write_bundle(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "results.json", results_to_json(result));
  save_model(result.model, dir / "model.json");
  write_rendered(result, dir);
}

void render_report(const std::filesystem::path& results_path, const std::filesystem::path& dir) {
  const auto result = results_from_json(read_text(results_path), results_path.string());
  std::filesystem::create_directories(dir);
  write_rendered(result, dir);
}

}  // namespace vibci
