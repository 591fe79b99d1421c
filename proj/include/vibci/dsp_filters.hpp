#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vibci/matrix.hpp"
#include "vibci/signal_model.hpp"

namespace vibci {

enum class FilterKind { lowpass, bandstop, bandpass };

std::string to_string(FilterKind kind);

/// Butterworth design request. `order` is the order of the lowpass prototype;
/// band designs therefore realize 2*order poles (the usual butter() convention).
struct FilterSpec {
  FilterKind kind = FilterKind::lowpass;
  int order = 4;
  std::vector<double> edges;  // Hz; one edge for lowpass, two otherwise
  double rate = 256.0;

  void validate() const;

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

/// One biquad: b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Section {
  std::array<double, 3> b{};
  std::array<double, 3> a{1.0, 0.0, 0.0};

  /// 1 for first-order sections (b2 = a2 = 0), 2 otherwise.
  int order() const noexcept { return (a[2] == 0.0 && b[2] == 0.0) ? 1 : 2; }
};

struct DesignedFilter {
  std::vector<Section> sections;
  FilterSpec spec;

  int total_order() const noexcept;

  /// Complex response of the cascade at `hz`.
  std::complex<double> response(double hz) const;
  double magnitude(double hz) const { return std::abs(response(hz)); }
  double magnitude_db(double hz) const;

  /// Largest pole radius over all sections.
  double max_pole_radius() const;
};

/// Butterworth prototype mapped to the requested kind and discretized with
/// the pre-warped bilinear transform, factored into second-order sections.
/// Throws DesignError for edges at or above Nyquist, order outside [1, 16],
/// or a numerically unstable result.
DesignedFilter design_butterworth(const FilterSpec& spec);

/// Single causal pass through the cascade (transposed direct form II), zero
/// initial state.
void filter_causal(const DesignedFilter& filter, std::span<double> signal);

/// Forward-backward filtering of one channel. The input is extended by odd
/// reflection of 3 * total_order samples at each end and each pass starts
/// from the cascade's steady-state step response scaled by the first sample.
/// Throws LengthError if the signal has 6 * total_order samples or fewer.
std::vector<double> filtfilt(const DesignedFilter& filter, std::span<const double> signal);

/// filtfilt applied to every channel of a recording.
Recording apply_zero_phase(const DesignedFilter& filter, const Recording& recording);

/// The three-stage preprocessing chain: lowpass, line-noise notch, bandpass.
struct FilterChain {
  FilterSpec lowpass{FilterKind::lowpass, 4, {60.0}, 256.0};
  FilterSpec notch{FilterKind::bandstop, 4, {48.0, 52.0}, 256.0};
  FilterSpec bandpass{FilterKind::bandpass, 8, {2.0, 36.0}, 256.0};

  static FilterChain standard(double rate = 256.0);

  /// Copy of the chain with every stage re-targeted to `rate`.
  FilterChain at_rate(double rate) const;

  std::vector<DesignedFilter> design() const;

  friend bool operator==(const FilterChain&, const FilterChain&) = default;
};

/// Applies the chain's stages in order, each zero-phase. The chain is
/// re-targeted to the recording's rate.
Recording preprocess(const Recording& recording, const FilterChain& chain = FilterChain::standard());

/// Same, with stages that were already designed for the recording's rate.
Recording preprocess(const Recording& recording, std::span<const DesignedFilter> stages);

/// Analysis window of one trial: samples
/// [start + window_start*rate, start + window_end*rate) on every channel.
/// Throws RangeError if the window leaves the trial or the recording.
Matrix extract_window(const Recording& recording, const TrialDescriptor& trial,
                      const ProtocolSpec& protocol);

/// Writes one line per section: b0 b1 b2 a0 a1 a2, shortest round-trip decimals.
void write_sections(std::ostream& out, const DesignedFilter& filter);

}  // namespace vibci
