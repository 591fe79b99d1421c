#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vibci/matrix.hpp"

namespace vibci {

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

enum class ChannelRole { signal, ground, reference };

struct Channel {
  std::string name;
  ChannelRole role = ChannelRole::signal;

  friend bool operator==(const Channel&, const Channel&) = default;
};

/// True for labels of the extended 10-20 (10-10) system, plus earlobe and
/// mastoid sites (A1, A2, M1, M2). Case-sensitive.
bool is_known_electrode(std::string_view name);

/// Ordered electrode layout. Exactly one ground and one reference; names unique
/// and drawn from the 10-20 label set.
class ChannelLayout {
public:
  explicit ChannelLayout(std::vector<Channel> channels);

  /// 15 signal sites in acquisition order, AFz ground, A2 reference.
  static ChannelLayout standard();

  const std::vector<Channel>& channels() const noexcept { return channels_; }
  const std::vector<std::string>& signal_names() const noexcept { return signal_names_; }
  std::size_t signal_count() const noexcept { return signal_names_.size(); }

  /// Row index of a signal channel, or nullopt if absent or not a signal role.
  std::optional<std::size_t> signal_index(std::string_view name) const;

  const Channel& ground() const;
  const Channel& reference() const;

  friend bool operator==(const ChannelLayout& a, const ChannelLayout& b) {
    return a.channels_ == b.channels_;
  }

private:
  std::vector<Channel> channels_;
  std::vector<std::string> signal_names_;
};

// ---------------------------------------------------------------------------
// Recordings
// ---------------------------------------------------------------------------

/// Multichannel EEG in microvolts; one row per signal channel of `layout`.
class Recording {
public:
  Recording(double rate, Matrix data, ChannelLayout layout, std::string provenance = {});

  double rate() const noexcept { return rate_; }
  const Matrix& data() const noexcept { return data_; }
  const ChannelLayout& layout() const noexcept { return layout_; }
  const std::string& provenance() const noexcept { return provenance_; }
  std::size_t samples() const noexcept { return data_.cols(); }
  std::size_t channels() const noexcept { return data_.rows(); }

  /// Same rate, layout and provenance tag with new samples.
  Recording with_data(Matrix data) const;

  friend bool operator==(const Recording&, const Recording&) = default;

private:
  double rate_;
  Matrix data_;
  ChannelLayout layout_;
  std::string provenance_;
};

// ---------------------------------------------------------------------------
// Tasks and protocols
// ---------------------------------------------------------------------------

enum class TaskKind { ssvep, vi, rest };

struct TaskClass {
  TaskKind kind = TaskKind::rest;
  std::optional<double> frequency;

  static TaskClass ssvep(double hz) { return {TaskKind::ssvep, hz}; }
  static TaskClass vi(double hz) { return {TaskKind::vi, hz}; }
  static TaskClass rest() { return {TaskKind::rest, std::nullopt}; }

  /// Throws ValidationError unless frequency is present iff kind != rest and positive.
  void validate() const;

  /// "SSVEP-5", "VI-7", "REST". Non-integral frequencies keep their decimals.
  std::string name() const;
  static TaskClass parse(std::string_view name);

  friend bool operator==(const TaskClass&, const TaskClass&) = default;
};

/// Canonical ordering: SSVEP before VI before REST, lower frequency first.
bool canonical_less(const TaskClass& a, const TaskClass& b);

enum class ProtocolId { P1a, P1b, P1c, P1d, P2a, P3a, custom };

std::string to_string(ProtocolId id);
ProtocolId parse_protocol_id(std::string_view text);

inline constexpr ProtocolId builtin_protocols[] = {ProtocolId::P1a, ProtocolId::P1b,
                                                   ProtocolId::P1c, ProtocolId::P1d,
                                                   ProtocolId::P2a, ProtocolId::P3a};

struct ProtocolSpec {
  ProtocolId id = ProtocolId::custom;
  double trial_duration = 0.0;  // seconds
  std::size_t trials_per_class = 0;
  std::vector<TaskClass> classes;
  double window_start = 0.0;  // seconds into the trial
  double window_end = 0.0;
  bool auditory_costimulus = false;

  static ProtocolSpec builtin(ProtocolId id);

  /// Throws ValidationError on empty classes, zero trials, or a window outside the trial.
  void validate() const;

  friend bool operator==(const ProtocolSpec&, const ProtocolSpec&) = default;
};

/// Class set of a built-in protocol. Throws ValidationError for `custom`.
std::vector<TaskClass> class_set(ProtocolId id);

struct TrialDescriptor {
  std::size_t index = 0;
  TaskClass label;
  std::size_t start_sample = 0;
  std::size_t duration_samples = 0;
  ProtocolId protocol = ProtocolId::custom;

  std::size_t end_sample() const noexcept { return start_sample + duration_samples; }

  friend bool operator==(const TrialDescriptor&, const TrialDescriptor&) = default;
};

struct SessionPlan {
  ProtocolSpec protocol;
  double rate = 0.0;
  std::vector<TrialDescriptor> trials;
  std::uint64_t seed = 0;

  std::size_t total_samples() const noexcept {
    return trials.empty() ? 0 : trials.back().end_sample();
  }

  friend bool operator==(const SessionPlan&, const SessionPlan&) = default;
};

/// Number of samples in `seconds` at `rate`; throws ValidationError unless integral.
std::size_t seconds_to_samples(double seconds, double rate);

/// Seeded random trial order: the label multiset (each class trials_per_class
/// times, in class order) permuted by Fisher-Yates with Rng(seed). Trials abut.
SessionPlan schedule_session(const ProtocolSpec& protocol, double rate, std::uint64_t seed);

}  // namespace vibci
