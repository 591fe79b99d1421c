#include "vibci/synthcortex.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "vibci/error.hpp"
#include "vibci/fft.hpp"
#include "vibci/rng.hpp"

namespace vibci {

namespace {

constexpr std::uint64_t kLineStream = 0x6C696E65ULL;  // "line"

bool is_occipital(const std::string& name) { return name == "O1" || name == "O2" || name == "Oz"; }

bool is_parietal(const std::string& name) { return !name.empty() && name[0] == 'P'; }

bool is_right_frontal(const std::string& name) {
  return name == "AF4" || name == "F4" || name == "F8";
}

double gain_of(const std::map<std::string, double>& gains, const std::string& name) {
  auto it = gains.find(name);
  return it == gains.end() ? 0.0 : it->second;
}

}  // namespace

SpatialGains SpatialGains::standard(const ChannelLayout& layout) {
  SpatialGains g;
  for (const auto& name : layout.signal_names()) {
    g.ssvep[name] = is_occipital(name) ? 1.0 : is_parietal(name) ? 0.6 : 0.3;
    g.vi[name] = is_right_frontal(name) ? 1.0 : is_occipital(name) ? 0.7 : 0.3;
  }
  return g;
}

SpatialGains SpatialGains::only(const ChannelLayout& layout,
                                const std::vector<std::string>& electrodes, double gain) {
  SpatialGains g;
  for (const auto& name : layout.signal_names()) {
    const bool on = std::find(electrodes.begin(), electrodes.end(), name) != electrodes.end();
    g.ssvep[name] = on ? gain : 0.0;
    g.vi[name] = on ? gain : 0.0;
  }
  return g;
}

void SynthConfig::validate() const {
  if (!(rate > 0.0)) throw ValidationError("synth rate must be > 0");
  if (!(pink_beta >= 0.5 && pink_beta <= 2.0)) throw ValidationError("pink beta must be in [0.5, 2]");
  if (!(pink_sigma >= 0.0) || !(white_sigma >= 0.0) || !(line_amplitude >= 0.0))
    throw ValidationError("noise amplitudes must be >= 0");
  if (!(line_hz > 0.0 && line_hz < rate / 2.0))
    throw ValidationError("line frequency must be inside (0, Nyquist)");
  if (!(vi_attenuation > 0.0 && vi_attenuation <= 1.0))
    throw ValidationError("vi_attenuation must be in (0, 1]");
  auto check_response = [](const ResponseConfig& r) {
    if (!(r.fundamental >= 0.0)) throw ValidationError("response amplitudes must be >= 0");
    for (double h : r.harmonics)
      if (!(h >= 0.0)) throw ValidationError("response amplitudes must be >= 0");
  };
  check_response(response);
  for (const auto& [name, r] : class_responses) {
    TaskClass::parse(name);
    check_response(r);
  }
  for (const auto& name : layout.signal_names()) {
    if (!gains.ssvep.contains(name) || !gains.vi.contains(name))
      throw ValidationError("spatial gains missing electrode " + name);
    if (!(gains.ssvep.at(name) >= 0.0) || !(gains.vi.at(name) >= 0.0))
      throw ValidationError("spatial gains must be >= 0");
  }
}

const ResponseConfig& SynthConfig::response_for(const TaskClass& label) const {
  auto it = class_responses.find(label.name());
  return it == class_responses.end() ? response : it->second;
}

std::vector<double> pink_noise(std::size_t n, double beta, double sigma, std::uint64_t seed) {
  if (n < 64) throw ValidationError("pink noise needs at least 64 samples");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("pink noise beta must be >= 0");
  if (!(sigma >= 0.0)) throw ValidationError("pink noise sigma must be >= 0");

  RealFft fft(n);
  std::vector<std::complex<double>> spectrum(fft.bins());
  Rng rng(seed);
  for (std::size_t k = 1; k < spectrum.size(); ++k) {
    const double shape = std::pow(static_cast<double>(k), -beta / 2.0);
    const double re = rng.normal();
    const double im = rng.normal();
    spectrum[k] = {re * shape, im * shape};
  }
  if (n % 2 == 0) spectrum.back() = {spectrum.back().real(), 0.0};

  std::vector<double> out(n);
  fft.inverse(spectrum, out);
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double& v : out) {
    v -= mean;
    var += v * v;
  }
  const double sd = std::sqrt(var / static_cast<double>(n));
  const double factor = sd > 0.0 ? sigma / sd : 0.0;
  for (double& v : out) v *= factor;
  return out;
}

Recording generate_session(const SessionPlan& plan, const SynthConfig& config) {
  config.validate();
  if (std::abs(plan.rate - config.rate) > 1e-9 * config.rate)
    throw ValidationError("session plan rate does not match synth config rate");
  if (plan.trials.empty()) throw ValidationError("session plan has no trials");

  const auto& names = config.layout.signal_names();
  const double rate = config.rate;
  const double two_pi = 2.0 * std::numbers::pi;
  Matrix data(names.size(), plan.total_samples());

  Rng line_rng(derive_seed(config.seed, kLineStream));
  std::vector<double> line_phase(names.size());
  for (auto& p : line_phase) p = two_pi * line_rng.uniform();

  for (const auto& trial : plan.trials) {
    const std::uint64_t trial_seed = derive_seed(config.seed, trial.index);
    Rng rng(trial_seed);
    const std::size_t n = trial.duration_samples;

    // Phase of each component, shared by every electrode of this trial.
    std::vector<double> freqs;
    std::vector<double> amps;
    std::vector<double> phases;
    if (trial.label.kind != TaskKind::rest) {
      const auto& response = config.response_for(trial.label);
      const double f0 = *trial.label.frequency;
      const double scale = trial.label.kind == TaskKind::vi ? config.vi_attenuation : 1.0;
      freqs.push_back(f0);
      amps.push_back(response.fundamental * scale);
      for (std::size_t h = 0; h < response.harmonics.size(); ++h) {
        freqs.push_back(f0 * static_cast<double>(h + 2));
        amps.push_back(response.harmonics[h] * scale);
      }
      for (std::size_t c = 0; c < freqs.size(); ++c) phases.push_back(two_pi * rng.uniform());
    }
    const auto& gains = trial.label.kind == TaskKind::vi ? config.gains.vi : config.gains.ssvep;

    for (std::size_t e = 0; e < names.size(); ++e) {
      const std::uint64_t channel_seed = derive_seed(trial_seed, e + 1);
      auto out = data.row(e).subspan(trial.start_sample, n);
      if (config.pink_sigma > 0.0) {
        const auto pink = pink_noise(n, config.pink_beta, config.pink_sigma, channel_seed);
        std::copy(pink.begin(), pink.end(), out.begin());
      }
      Rng white(derive_seed(channel_seed, 0));
      const double g = trial.label.kind == TaskKind::rest ? 0.0 : gain_of(gains, names[e]);
      for (std::size_t i = 0; i < n; ++i) {
        const double t_trial = static_cast<double>(i) / rate;
        const double t_session = static_cast<double>(trial.start_sample + i) / rate;
        double v = out[i] + config.white_sigma * white.normal() +
                   config.line_amplitude * std::sin(two_pi * config.line_hz * t_session + line_phase[e]);
        for (std::size_t c = 0; c < freqs.size(); ++c)
          v += g * amps[c] * std::sin(two_pi * freqs[c] * t_trial + phases[c]);
        out[i] = v;
      }
    }
  }
  return Recording(rate, std::move(data), config.layout,
                   "synthetic " + to_string(plan.protocol.id) + " seed=" + std::to_string(config.seed));
}

}  // namespace vibci
