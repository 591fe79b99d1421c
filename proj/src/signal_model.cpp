#include "vibci/signal_model.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <set>

#include "vibci/error.hpp"
#include "vibci/rng.hpp"

namespace vibci {

namespace {

std::string format_hz(double hz) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), hz);
  return std::string(buf.data(), end);
}

}  // namespace

bool is_known_electrode(std::string_view name) {
  static constexpr std::array<std::string_view, 8> extras{"Nz", "A1", "A2", "M1",
                                                          "M2", "T3", "T4", "T5"};
  if (std::find(extras.begin(), extras.end(), name) != extras.end() || name == "T6") return true;

  // Longest prefix first so "FC" is not read as "F" + "C...".
  static constexpr std::array<std::string_view, 13> prefixes{
      "Fp", "AF", "FT", "FC", "TP", "CP", "PO", "F", "T", "C", "P", "O", "I"};
  for (auto prefix : prefixes) {
    if (!name.starts_with(prefix)) continue;
    const auto suffix = name.substr(prefix.size());
    if (suffix == "z") return true;
    int number = 0;
    auto [ptr, ec] = std::from_chars(suffix.data(), suffix.data() + suffix.size(), number);
    if (ec == std::errc{} && ptr == suffix.data() + suffix.size() && !suffix.starts_with('0') &&
        number >= 1 && number <= 10)
      return true;
    return false;
  }
  return false;
}

ChannelLayout::ChannelLayout(std::vector<Channel> channels) : channels_(std::move(channels)) {
  std::set<std::string> seen;
  int grounds = 0;
  int references = 0;
  for (const auto& ch : channels_) {
    if (!is_known_electrode(ch.name))
      throw ValidationError("unknown electrode label '" + ch.name + "'");
    if (!seen.insert(ch.name).second)
      throw ValidationError("duplicate channel name '" + ch.name + "'");
    switch (ch.role) {
      case ChannelRole::signal: signal_names_.push_back(ch.name); break;
      case ChannelRole::ground: ++grounds; break;
      case ChannelRole::reference: ++references; break;
    }
  }
  if (grounds != 1 || references != 1)
    throw ValidationError("layout needs exactly one ground and one reference channel");
  if (signal_names_.empty()) throw ValidationError("layout has no signal channels");
}

ChannelLayout ChannelLayout::standard() {
  static const std::array<const char*, 15> sites{"AF4", "F4", "F8", "O1", "O2", "Pz", "P3", "P4",
                                                 "Fz",  "Cz", "Oz", "T7", "T8", "P7", "P8"};
  std::vector<Channel> channels;
  for (const char* site : sites) channels.push_back({site, ChannelRole::signal});
  channels.push_back({"AFz", ChannelRole::ground});
  channels.push_back({"A2", ChannelRole::reference});
  return ChannelLayout(std::move(channels));
}

std::optional<std::size_t> ChannelLayout::signal_index(std::string_view name) const {
  auto it = std::find(signal_names_.begin(), signal_names_.end(), name);
  if (it == signal_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - signal_names_.begin());
}

const Channel& ChannelLayout::ground() const {
  return *std::find_if(channels_.begin(), channels_.end(),
                       [](const Channel& c) { return c.role == ChannelRole::ground; });
}

const Channel& ChannelLayout::reference() const {
  return *std::find_if(channels_.begin(), channels_.end(),
                       [](const Channel& c) { return c.role == ChannelRole::reference; });
}

Recording::Recording(double rate, Matrix data, ChannelLayout layout, std::string provenance)
    : rate_(rate), data_(std::move(data)), layout_(std::move(layout)),
      provenance_(std::move(provenance)) {
  if (!(rate_ > 0.0) || !std::isfinite(rate_)) throw ValidationError("sampling rate must be > 0");
  if (data_.cols() == 0) throw ValidationError("recording has no samples");
  if (data_.rows() != layout_.signal_count())
    throw ValidationError("recording has " + std::to_string(data_.rows()) +
                          " rows but layout has " + std::to_string(layout_.signal_count()) +
                          " signal channels");
  for (double v : data_.flat())
    if (!std::isfinite(v)) throw ValidationError("recording contains a non-finite sample");
}

Recording Recording::with_data(Matrix data) const {
  return Recording(rate_, std::move(data), layout_, provenance_);
}

void TaskClass::validate() const {
  if (kind == TaskKind::rest) {
    if (frequency) throw ValidationError("REST class cannot carry a frequency");
    return;
  }
  if (!frequency || !(*frequency > 0.0) || !std::isfinite(*frequency))
    throw ValidationError("SSVEP/VI class needs a positive frequency");
}

std::string TaskClass::name() const {
  switch (kind) {
    case TaskKind::rest: return "REST";
    case TaskKind::ssvep: return "SSVEP-" + format_hz(frequency.value_or(0.0));
    case TaskKind::vi: return "VI-" + format_hz(frequency.value_or(0.0));
  }
  return {};
}

TaskClass TaskClass::parse(std::string_view name) {
  if (name == "REST") return rest();
  TaskKind kind;
  std::string_view rest_of;
  if (name.starts_with("SSVEP-")) {
    kind = TaskKind::ssvep;
    rest_of = name.substr(6);
  } else if (name.starts_with("VI-")) {
    kind = TaskKind::vi;
    rest_of = name.substr(3);
  } else {
    throw ValidationError("unknown task class '" + std::string(name) + "'");
  }
  double hz = 0.0;
  auto [ptr, ec] = std::from_chars(rest_of.data(), rest_of.data() + rest_of.size(), hz);
  if (ec != std::errc{} || ptr != rest_of.data() + rest_of.size())
    throw ValidationError("bad frequency in task class '" + std::string(name) + "'");
  TaskClass out{kind, hz};
  out.validate();
  return out;
}

bool canonical_less(const TaskClass& a, const TaskClass& b) {
  if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  return a.frequency.value_or(0.0) < b.frequency.value_or(0.0);
}

std::string to_string(ProtocolId id) {
  switch (id) {
    case ProtocolId::P1a: return "P1a";
    case ProtocolId::P1b: return "P1b";
    case ProtocolId::P1c: return "P1c";
    case ProtocolId::P1d: return "P1d";
    case ProtocolId::P2a: return "P2a";
    case ProtocolId::P3a: return "P3a";
    case ProtocolId::custom: return "custom";
  }
  return "custom";
}

ProtocolId parse_protocol_id(std::string_view text) {
  for (auto id : builtin_protocols)
    if (to_string(id) == text) return id;
  if (text == "custom") return ProtocolId::custom;
  throw ValidationError("unknown protocol id '" + std::string(text) + "'");
}

std::vector<TaskClass> class_set(ProtocolId id) {
  switch (id) {
    case ProtocolId::P1a:
    case ProtocolId::P1c: return {TaskClass::ssvep(5), TaskClass::vi(5), TaskClass::rest()};
    case ProtocolId::P1b:
    case ProtocolId::P1d: return {TaskClass::ssvep(7), TaskClass::vi(7), TaskClass::rest()};
    case ProtocolId::P2a:
      return {TaskClass::ssvep(5), TaskClass::ssvep(7), TaskClass::vi(5), TaskClass::vi(7),
              TaskClass::rest()};
    case ProtocolId::P3a: return {TaskClass::vi(5), TaskClass::vi(7), TaskClass::rest()};
    case ProtocolId::custom: break;
  }
  throw ValidationError("custom protocols have no built-in class set; supply classes explicitly");
}

ProtocolSpec ProtocolSpec::builtin(ProtocolId id) {
  ProtocolSpec spec;
  spec.id = id;
  spec.classes = class_set(id);
  switch (id) {
    case ProtocolId::P1a:
    case ProtocolId::P1b:
      spec.auditory_costimulus = true;
      [[fallthrough]];
    case ProtocolId::P1c:
    case ProtocolId::P1d:
      spec.trial_duration = 6;
      spec.trials_per_class = 15;
      spec.window_start = 2;
      spec.window_end = 6;
      break;
    case ProtocolId::P2a:
      spec.trial_duration = 6;
      spec.trials_per_class = 18;
      spec.window_start = 2;
      spec.window_end = 6;
      break;
    case ProtocolId::P3a:
      spec.trial_duration = 9;
      spec.trials_per_class = 20;
      spec.window_start = 3;
      spec.window_end = 7;
      break;
    case ProtocolId::custom: break;
  }
  return spec;
}

void ProtocolSpec::validate() const {
  if (classes.empty()) throw ValidationError("protocol has no classes");
  if (trials_per_class == 0) throw ValidationError("protocol has zero trials per class");
  if (!(trial_duration > 0.0)) throw ValidationError("trial duration must be > 0");
  if (!(window_start >= 0.0 && window_start < window_end && window_end <= trial_duration))
    throw ValidationError("analysis window must satisfy 0 <= start < end <= trial duration");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    classes[i].validate();
    for (std::size_t j = 0; j < i; ++j)
      if (classes[i] == classes[j])
        throw ValidationError("duplicate class " + classes[i].name() + " in protocol");
  }
}

std::size_t seconds_to_samples(double seconds, double rate) {
  const double exact = seconds * rate;
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-9 * std::max(1.0, std::abs(exact)) || rounded < 0)
    throw ValidationError("duration of " + format_hz(seconds) + " s is not a whole number of samples at " +
                          format_hz(rate) + " Hz");
  return static_cast<std::size_t>(rounded);
}

SessionPlan schedule_session(const ProtocolSpec& protocol, double rate, std::uint64_t seed) {
  protocol.validate();
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ValidationError("sampling rate must be > 0");
  const std::size_t duration = seconds_to_samples(protocol.trial_duration, rate);

  std::vector<std::size_t> order;
  order.reserve(protocol.classes.size() * protocol.trials_per_class);
  for (std::size_t c = 0; c < protocol.classes.size(); ++c)
    order.insert(order.end(), protocol.trials_per_class, c);
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);

  SessionPlan plan{protocol, rate, {}, seed};
  plan.trials.reserve(order.size());
  for (std::size_t k = 0; k < order.size(); ++k)
    plan.trials.push_back({k, protocol.classes[order[k]], k * duration, duration, protocol.id});
  return plan;
}

}  // namespace vibci
