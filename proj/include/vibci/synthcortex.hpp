#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vibci/signal_model.hpp"

namespace vibci {

/// Evoked response of a task class: a sinusoid at the class frequency plus
/// harmonics. harmonics[h] is the amplitude at (h + 2) times the frequency.
struct ResponseConfig {
  double fundamental = 2.0;  // µV
  std::vector<double> harmonics{0.5};

  friend bool operator==(const ResponseConfig&, const ResponseConfig&) = default;
};

/// Per-electrode response multipliers for each responding class kind.
struct SpatialGains {
  std::map<std::string, double> ssvep;
  std::map<std::string, double> vi;

  /// Occipital-dominant SSVEP, right-frontal-dominant VI, 0.3 floor elsewhere.
  static SpatialGains standard(const ChannelLayout& layout);
  /// `gain` on the listed electrodes and zero everywhere else, for both kinds.
  static SpatialGains only(const ChannelLayout& layout, const std::vector<std::string>& electrodes,
                           double gain = 1.0);

  friend bool operator==(const SpatialGains&, const SpatialGains&) = default;
};

struct SynthConfig {
  double rate = 256.0;
  ChannelLayout layout = ChannelLayout::standard();

  double pink_beta = 1.0;        // power ~ 1/f^beta
  double pink_sigma = 1.5;       // µV, per trial and electrode
  double white_sigma = 0.5;      // µV
  double line_hz = 50.0;
  double line_amplitude = 5.0;   // µV

  ResponseConfig response;                                // every responding class
  std::map<std::string, ResponseConfig> class_responses;  // by class name, overrides `response`
  SpatialGains gains = SpatialGains::standard(ChannelLayout::standard());
  double vi_attenuation = 0.3;
  std::uint64_t seed = 0;

  /// Throws ValidationError on negative amplitudes, beta outside [0.5, 2],
  /// attenuation outside (0, 1], or gains missing an electrode.
  void validate() const;
  const ResponseConfig& response_for(const TaskClass& label) const;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

/// 1/f^beta noise by spectral shaping: complex Gaussian bins scaled by
/// f^(-beta/2), zero DC, inverse real FFT, then shifted to zero mean and
/// scaled to population standard deviation `sigma`. Throws for n < 64.
std::vector<double> pink_noise(std::size_t n, double beta, double sigma, std::uint64_t seed);

/// Renders a session plan. Trial k draws everything from
/// derive_seed(config.seed, k) (electrode e's noise from derive_seed of that
/// with stream e); the line component is phase-continuous over the session.
Recording generate_session(const SessionPlan& plan, const SynthConfig& config);

}  // namespace vibci
