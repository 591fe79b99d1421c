#include "vibci/dsp_filters.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>

#include "vibci/error.hpp"

namespace vibci {

using cplx = std::complex<double>;

namespace {

struct Zpk {
  std::vector<cplx> zeros;
  std::vector<cplx> poles;
  double gain = 1.0;
};

double prewarp(double hz, double rate) {
  return 2.0 * rate * std::tan(std::numbers::pi * hz / rate);
}

Zpk analog_prototype(int order) {
  Zpk proto;
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + 1.0 + order) / (2.0 * order);
    proto.poles.push_back(std::polar(1.0, theta));
  }
  return proto;
}

Zpk to_lowpass(const Zpk& proto, double wo) {
  Zpk out;
  for (auto p : proto.poles) out.poles.push_back(p * wo);
  out.gain = proto.gain * std::pow(wo, static_cast<double>(proto.poles.size()));
  return out;
}

Zpk to_bandpass(const Zpk& proto, double w1, double w2) {
  const double bw = w2 - w1;
  const double wo2 = w1 * w2;
  Zpk out;
  for (auto p : proto.poles) {
    const cplx half = p * (bw / 2.0);
    const cplx root = std::sqrt(half * half - wo2);
    out.poles.push_back(half + root);
    out.poles.push_back(half - root);
  }
  out.zeros.assign(proto.poles.size(), cplx{0.0, 0.0});
  out.gain = proto.gain * std::pow(bw, static_cast<double>(proto.poles.size()));
  return out;
}

Zpk to_bandstop(const Zpk& proto, double w1, double w2) {
  const double bw = w2 - w1;
  const double wo2 = w1 * w2;
  const double wo = std::sqrt(wo2);
  Zpk out;
  cplx neg_prod{1.0, 0.0};
  for (auto p : proto.poles) {
    const cplx half = (bw / 2.0) / p;
    const cplx root = std::sqrt(half * half - wo2);
    out.poles.push_back(half + root);
    out.poles.push_back(half - root);
    neg_prod *= -p;
  }
  for (std::size_t i = 0; i < proto.poles.size(); ++i) {
    out.zeros.push_back({0.0, wo});
    out.zeros.push_back({0.0, -wo});
  }
  out.gain = proto.gain * (cplx{1.0, 0.0} / neg_prod).real();
  return out;
}

Zpk bilinear(const Zpk& analog, double rate) {
  const double fs2 = 2.0 * rate;
  Zpk out;
  cplx num{1.0, 0.0};
  cplx den{1.0, 0.0};
  for (auto z : analog.zeros) {
    out.zeros.push_back((fs2 + z) / (fs2 - z));
    num *= fs2 - z;
  }
  for (auto p : analog.poles) {
    out.poles.push_back((fs2 + p) / (fs2 - p));
    den *= fs2 - p;
  }
  // Zeros at infinity land on Nyquist.
  while (out.zeros.size() < out.poles.size()) out.zeros.push_back({-1.0, 0.0});
  out.gain = analog.gain * (num / den).real();
  return out;
}

// A root group is either a conjugate pair (stored as the upper member) or one
// or two real roots.
struct RootGroup {
  std::vector<cplx> roots;
  cplx anchor;
};

std::vector<RootGroup> group_roots(std::vector<cplx> roots) {
  constexpr double tol = 1e-10;
  std::vector<RootGroup> groups;
  std::vector<double> reals;
  for (auto r : roots) {
    if (std::abs(r.imag()) <= tol * std::max(1.0, std::abs(r))) {
      reals.push_back(r.real());
    } else if (r.imag() > 0) {
      groups.push_back({{r, std::conj(r)}, r});
    }
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i < reals.size(); i += 2) {
    RootGroup g;
    g.roots.push_back(reals[i]);
    if (i + 1 < reals.size()) g.roots.push_back(reals[i + 1]);
    g.anchor = g.roots.front();
    groups.push_back(std::move(g));
  }
  return groups;
}

std::array<double, 3> expand(const std::vector<cplx>& roots) {
  if (roots.size() == 1) return {1.0, -roots[0].real(), 0.0};
  const cplx sum = roots[0] + roots[1];
  const cplx prod = roots[0] * roots[1];
  return {1.0, -sum.real(), prod.real()};
}

std::vector<Section> to_sections(const Zpk& digital) {
  auto pole_groups = group_roots(digital.poles);
  auto zero_groups = group_roots(digital.zeros);
  if (pole_groups.size() != zero_groups.size())
    throw DesignError("cannot pair poles and zeros into second-order sections");

  // Poles closest to the unit circle pick their nearest zeros first.
  std::sort(pole_groups.begin(), pole_groups.end(), [](const RootGroup& x, const RootGroup& y) {
    return std::abs(x.anchor) > std::abs(y.anchor);
  });

  std::vector<Section> sections;
  std::vector<bool> used(zero_groups.size(), false);
  for (const auto& pg : pole_groups) {
    std::size_t best = zero_groups.size();
    double best_dist = 0.0;
    for (std::size_t i = 0; i < zero_groups.size(); ++i) {
      if (used[i] || zero_groups[i].roots.size() != pg.roots.size()) continue;
      const double d = std::abs(zero_groups[i].anchor - pg.anchor);
      if (best == zero_groups.size() || d < best_dist) {
        best = i;
        best_dist = d;
      }
    }
    if (best == zero_groups.size()) throw DesignError("unmatched pole group during factoring");
    used[best] = true;
    sections.push_back({expand(zero_groups[best].roots), expand(pg.roots)});
  }
  // The sharpest resonances end the cascade.
  std::reverse(sections.begin(), sections.end());
  for (double& coeff : sections.front().b) coeff *= digital.gain;
  return sections;
}

std::string shortest(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

// Steady-state state vectors (transposed direct form II) of each section for
// a unit step into the cascade.
std::vector<std::array<double, 2>> steady_state(const DesignedFilter& filter) {
  std::vector<std::array<double, 2>> zi;
  double input_level = 1.0;
  for (const auto& s : filter.sections) {
    const double den = s.a[0] + s.a[1] + s.a[2];
    const double gain = (s.b[0] + s.b[1] + s.b[2]) / den;
    const double y = gain * input_level;
    const double z2 = s.b[2] * input_level - s.a[2] * y;
    const double z1 = y - s.b[0] * input_level;
    zi.push_back({z1, z2});
    input_level = y;
  }
  return zi;
}

void run_cascade(const DesignedFilter& filter, std::span<double> signal,
                 std::vector<std::array<double, 2>> state) {
  for (std::size_t k = 0; k < filter.sections.size(); ++k) {
    const auto& s = filter.sections[k];
    double z1 = state[k][0];
    double z2 = state[k][1];
    for (double& x : signal) {
      const double y = s.b[0] * x + z1;
      z1 = s.b[1] * x - s.a[1] * y + z2;
      z2 = s.b[2] * x - s.a[2] * y;
      x = y;
    }
  }
}

}  // namespace

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::lowpass: return "lowpass";
    case FilterKind::bandstop: return "bandstop";
    case FilterKind::bandpass: return "bandpass";
  }
  return "lowpass";
}

void FilterSpec::validate() const {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw DesignError("filter rate must be > 0");
  if (order < 1 || order > 16) throw DesignError("filter order must be in [1, 16]");
  const std::size_t want = kind == FilterKind::lowpass ? 1 : 2;
  if (edges.size() != want)
    throw DesignError(to_string(kind) + " needs " + std::to_string(want) + " edge frequencies");
  for (double e : edges)
    if (!(e > 0.0 && e < rate / 2.0))
      throw DesignError("edge " + shortest(e) + " Hz is outside (0, Nyquist=" + shortest(rate / 2) +
                        " Hz)");
  if (want == 2 && !(edges[0] < edges[1])) throw DesignError("band edges must satisfy low < high");
}

int DesignedFilter::total_order() const noexcept {
  int n = 0;
  for (const auto& s : sections) n += s.order();
  return n;
}

cplx DesignedFilter::response(double hz) const {
  const cplx zinv = std::polar(1.0, -2.0 * std::numbers::pi * hz / spec.rate);
  const cplx zinv2 = zinv * zinv;
  cplx h{1.0, 0.0};
  for (const auto& s : sections)
    h *= (s.b[0] + s.b[1] * zinv + s.b[2] * zinv2) / (s.a[0] + s.a[1] * zinv + s.a[2] * zinv2);
  return h;
}

double DesignedFilter::magnitude_db(double hz) const { return 20.0 * std::log10(magnitude(hz)); }

double DesignedFilter::max_pole_radius() const {
  double radius = 0.0;
  for (const auto& s : sections) {
    // Roots of z^2 + a1 z + a2.
    const cplx disc = std::sqrt(cplx{s.a[1] * s.a[1] - 4.0 * s.a[2], 0.0});
    radius = std::max({radius, std::abs((-s.a[1] + disc) / 2.0), std::abs((-s.a[1] - disc) / 2.0)});
  }
  return radius;
}

DesignedFilter design_butterworth(const FilterSpec& spec) {
  spec.validate();
  const Zpk proto = analog_prototype(spec.order);
  Zpk analog;
  switch (spec.kind) {
    case FilterKind::lowpass: analog = to_lowpass(proto, prewarp(spec.edges[0], spec.rate)); break;
    case FilterKind::bandpass:
      analog = to_bandpass(proto, prewarp(spec.edges[0], spec.rate),
                           prewarp(spec.edges[1], spec.rate));
      break;
    case FilterKind::bandstop:
      analog = to_bandstop(proto, prewarp(spec.edges[0], spec.rate),
                           prewarp(spec.edges[1], spec.rate));
      break;
  }
  DesignedFilter filter{to_sections(bilinear(analog, spec.rate)), spec};
  for (const auto& s : filter.sections)
    for (double c : s.b)
      if (!std::isfinite(c)) throw DesignError("non-finite coefficient in designed filter");
  if (!(filter.max_pole_radius() < 1.0 - 1e-9))
    throw DesignError("designed " + to_string(spec.kind) + " filter is numerically unstable");
  return filter;
}

void filter_causal(const DesignedFilter& filter, std::span<double> signal) {
  run_cascade(filter, signal,
              std::vector<std::array<double, 2>>(filter.sections.size(), {0.0, 0.0}));
}

std::vector<double> filtfilt(const DesignedFilter& filter, std::span<const double> signal) {
  const std::size_t pad = 3 * static_cast<std::size_t>(filter.total_order());
  const std::size_t n = signal.size();
  if (n <= 2 * pad)
    throw LengthError("signal of " + std::to_string(n) + " samples is too short for padding of " +
                      std::to_string(pad) + " samples per side");

  std::vector<double> ext(n + 2 * pad);
  const double first = signal.front();
  const double last = signal.back();
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * first - signal[pad - i];
    ext[pad + n + i] = 2.0 * last - signal[n - 2 - i];
  }
  std::copy(signal.begin(), signal.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  const auto zi = steady_state(filter);
  auto scaled = [&zi](double level) {
    auto out = zi;
    for (auto& z : out) {
      z[0] *= level;
      z[1] *= level;
    }
    return out;
  };

  run_cascade(filter, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_cascade(filter, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

Recording apply_zero_phase(const DesignedFilter& filter, const Recording& recording) {
  if (std::abs(filter.spec.rate - recording.rate()) > 1e-9 * recording.rate())
    throw ValidationError("filter designed for " + shortest(filter.spec.rate) +
                          " Hz applied to a " + shortest(recording.rate()) + " Hz recording");
  Matrix out(recording.channels(), recording.samples());
  for (std::size_t ch = 0; ch < recording.channels(); ++ch) {
    const auto filtered = filtfilt(filter, recording.data().row(ch));
    std::copy(filtered.begin(), filtered.end(), out.row(ch).begin());
  }
  return recording.with_data(std::move(out));
}

FilterChain FilterChain::standard(double rate) { return FilterChain{}.at_rate(rate); }

FilterChain FilterChain::at_rate(double rate) const {
  FilterChain chain = *this;
  chain.lowpass.rate = rate;
  chain.notch.rate = rate;
  chain.bandpass.rate = rate;
  return chain;
}

std::vector<DesignedFilter> FilterChain::design() const {
  return {design_butterworth(lowpass), design_butterworth(notch), design_butterworth(bandpass)};
}

Recording preprocess(const Recording& recording, const FilterChain& chain) {
  const auto stages = chain.at_rate(recording.rate()).design();
  return preprocess(recording, stages);
}

Recording preprocess(const Recording& recording, std::span<const DesignedFilter> stages) {
  Recording out = recording;
  for (const auto& stage : stages) out = apply_zero_phase(stage, out);
  return out;
}

Matrix extract_window(const Recording& recording, const TrialDescriptor& trial,
                      const ProtocolSpec& protocol) {
  const double rate = recording.rate();
  const std::size_t begin = seconds_to_samples(protocol.window_start, rate);
  const std::size_t end = seconds_to_samples(protocol.window_end, rate);
  if (begin >= end) throw RangeError("empty analysis window");
  if (end > trial.duration_samples)
    throw RangeError("window ends at " + std::to_string(end) + " samples but trial " +
                     std::to_string(trial.index) + " lasts " +
                     std::to_string(trial.duration_samples));
  if (trial.end_sample() > recording.samples())
    throw RangeError("trial " + std::to_string(trial.index) + " ends at sample " +
                     std::to_string(trial.end_sample()) + " beyond the recording (" +
                     std::to_string(recording.samples()) + " samples)");

  Matrix window(recording.channels(), end - begin);
  for (std::size_t ch = 0; ch < recording.channels(); ++ch) {
    const auto src = recording.data().row(ch).subspan(trial.start_sample + begin, end - begin);
    std::copy(src.begin(), src.end(), window.row(ch).begin());
  }
  return window;
}

void write_sections(std::ostream& out, const DesignedFilter& filter) {
  for (const auto& s : filter.sections) {
    out << shortest(s.b[0]) << ' ' << shortest(s.b[1]) << ' ' << shortest(s.b[2]) << ' '
        << shortest(s.a[0]) << ' ' << shortest(s.a[1]) << ' ' << shortest(s.a[2]) << '\n';
  }
}

}  // namespace vibci
