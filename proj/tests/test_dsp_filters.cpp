#include "doctest.h"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "vibci/dsp_filters.hpp"
#include "vibci/error.hpp"
#include "vibci/rng.hpp"
#include "vibci/spectral.hpp"

using namespace vibci;

namespace {

std::vector<double> sine(double hz, double rate, std::size_t n, double amp = 1.0,
                         double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t)
    x[t] = amp * std::sin(2 * std::numbers::pi * hz * static_cast<double>(t) / rate + phase);
  return x;
}

// Amplitude of the `hz` component over samples [from, to).
double tone_amplitude(const std::vector<double>& x, double hz, double rate, std::size_t from,
                      std::size_t to) {
  double s = 0, c = 0;
  for (std::size_t t = from; t < to; ++t) {
    const double ph = 2 * std::numbers::pi * hz * static_cast<double>(t) / rate;
    s += x[t] * std::sin(ph);
    c += x[t] * std::cos(ph);
  }
  return 2 * std::hypot(s, c) / static_cast<double>(to - from);
}

Recording single_channel(std::vector<double> x, double rate = 256) {
  ChannelLayout layout({{"O1", ChannelRole::signal}, {"AFz", ChannelRole::ground},
                        {"A2", ChannelRole::reference}});
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  return Recording(rate, std::move(m), layout);
}

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("bandpass magnitude matches the closed-form Butterworth response") {
  const auto bp = design_butterworth({FilterKind::bandpass, 8, {2, 36}, 256});
  CHECK(bp.total_order() == 16);
  CHECK(std::abs(bp.magnitude_db(2) + 3.0) < 0.1);
  CHECK(std::abs(bp.magnitude_db(36) + 3.0) < 0.1);
  for (double f = 0.25; f < 128; f += 0.25)
    CHECK(bp.magnitude(f) == doctest::Approx(oracle::butter_bandpass(8, 2, 36, 256, f)).epsilon(1e-6));
}

TEST_CASE("lowpass and bandstop match their closed forms") {
  const auto lp = design_butterworth({FilterKind::lowpass, 4, {60}, 256});
  CHECK(lp.magnitude(0) == doctest::Approx(1.0).epsilon(1e-12));
  const auto bs = design_butterworth({FilterKind::bandstop, 4, {48, 52}, 256});
  CHECK(bs.magnitude_db(50) <= -20.0);
  for (double f = 0.5; f < 128; f += 0.5) {
    CHECK(lp.magnitude(f) == doctest::Approx(oracle::butter_lowpass(4, 60, 256, f)).epsilon(1e-6));
    if (std::abs(f - 50) > 1e-9)
      CHECK(bs.magnitude(f) ==
            doctest::Approx(oracle::butter_bandstop(4, 48, 52, 256, f)).epsilon(1e-6));
  }
}

TEST_CASE("designs are stable") {
  for (const auto& d : FilterChain::standard().design()) CHECK(d.max_pole_radius() < 1 - 1e-9);
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    FilterSpec spec;
    spec.rate = 128.0 * static_cast<double>(1 + rng.below(4));
    spec.order = 1 + static_cast<int>(rng.below(8));
    const double nyq = spec.rate / 2;
    const double a = 1 + rng.uniform() * (0.8 * nyq - 1);
    const double b = a + 2 + rng.uniform() * (0.9 * nyq - a - 2);
    switch (rng.below(3)) {
      case 0: spec.kind = FilterKind::lowpass; spec.edges = {a}; break;
      case 1: spec.kind = FilterKind::bandpass; spec.edges = {a, b}; break;
      default: spec.kind = FilterKind::bandstop; spec.edges = {a, b}; break;
    }
    CAPTURE(to_string(spec.kind));
    CAPTURE(spec.order);
    const auto f = design_butterworth(spec);
    CHECK(f.max_pole_radius() < 1 - 1e-9);
  }
}

TEST_CASE("lowpass magnitude is non-increasing") {
  for (int order : {1, 2, 4, 8}) {
    const auto lp = design_butterworth({FilterKind::lowpass, order, {30}, 256});
    double prev = lp.magnitude(0);
    for (double f = 0.05; f <= 128; f += 0.05) {
      const double m = lp.magnitude(f);
      CHECK(m <= prev + 1e-12);
      prev = m;
    }
  }
}

TEST_CASE("design errors") {
  CHECK_THROWS_AS(design_butterworth({FilterKind::lowpass, 4, {128}, 256}), DesignError);
  CHECK_THROWS_AS(design_butterworth({FilterKind::bandpass, 4, {36, 2}, 256}), DesignError);
  CHECK_THROWS_AS(design_butterworth({FilterKind::bandpass, 4, {2}, 256}), DesignError);
  CHECK_THROWS_AS(design_butterworth({FilterKind::lowpass, 0, {30}, 256}), DesignError);
  CHECK_THROWS_AS(design_butterworth({FilterKind::lowpass, 17, {30}, 256}), DesignError);
}

TEST_CASE("zero-phase bandpass of a 10 Hz sinusoid") {
  const auto bp = design_butterworth({FilterKind::bandpass, 8, {2, 36}, 256});
  const auto x = sine(10, 256, 4096);
  const auto y = filtfilt(bp, x);
  REQUIRE(y.size() == x.size());
  const double expected = std::pow(oracle::butter_bandpass(8, 2, 36, 256, 10), 2);
  CHECK(tone_amplitude(y, 10, 256, 1024, 3072) == doctest::Approx(expected).epsilon(0.02));
  CHECK(oracle::peak_lag(x, y, 20) == 0);
}

TEST_CASE("zero-phase holds across the passband") {
  const auto chain = FilterChain::standard().design();
  for (double hz : {4.0, 5.0, 7.0, 12.5, 20.0, 30.0}) {
    std::vector<double> y = sine(hz, 256, 2048, 1.0, 0.3);
    const auto x = y;
    for (const auto& stage : chain) y = filtfilt(stage, y);
    CAPTURE(hz);
    CHECK(oracle::peak_lag(x, y, 12) == 0);
  }
}

TEST_CASE("filtfilt is linear") {
  const auto bp = design_butterworth({FilterKind::bandpass, 8, {2, 36}, 256});
  Rng rng(5);
  std::vector<double> x(1000), y(1000), z(1000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal() * 3 + 1;
    z[i] = 2.5 * x[i] - 0.75 * y[i];
  }
  const auto fx = filtfilt(bp, x), fy = filtfilt(bp, y), fz = filtfilt(bp, z);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = fz[i] - (2.5 * fx[i] - 0.75 * fy[i]);
    num += e * e;
    den += fz[i] * fz[i];
  }
  CHECK(std::sqrt(num / den) < 1e-9);
}

TEST_CASE("filtfilt length limit") {
  const auto bp = design_butterworth({FilterKind::bandpass, 8, {2, 36}, 256});
  CHECK_THROWS_AS(filtfilt(bp, std::vector<double>(96, 1.0)), LengthError);
  CHECK_NOTHROW(filtfilt(bp, std::vector<double>(97, 1.0)));
}

TEST_CASE("full chain removes line noise") {
  const auto x = sine(50, 256, 4096, 10.0);
  const auto y = preprocess(single_channel(x));
  const auto out = to_vector(y.data().row(0));
  double in_rms = 0, out_rms = 0;
  for (std::size_t t = 512; t < 3584; ++t) {
    in_rms += x[t] * x[t];
    out_rms += out[t] * out[t];
  }
  CHECK(std::sqrt(out_rms / in_rms) <= 0.01);
  double chain = 1;
  for (const auto& d : FilterChain::standard().design()) chain *= d.magnitude(50);
  CHECK(20 * std::log10(chain * chain) <= -40.0);
}

TEST_CASE("preprocess keeps shape, zeros and removes DC") {
  const auto zero = preprocess(single_channel(std::vector<double>(2048, 0.0)));
  for (double v : zero.data().flat()) CHECK(v == 0.0);
  CHECK(zero.samples() == 2048);
  CHECK(zero.rate() == 256);

  std::vector<double> dc(2304, 100.0);
  Rng rng(4);
  for (auto& v : dc) v += rng.normal();
  const auto out = to_vector(preprocess(single_channel(dc)).data().row(0));
  CHECK(std::abs(oracle::mean(out)) <= 0.5);
}

TEST_CASE("preprocessed white noise stays inside the passband") {
  Rng rng(8);
  std::vector<double> x(8192);
  for (auto& v : x) v = rng.normal();
  const auto y = preprocess(single_channel(x));
  const auto psd = welch_psd(y.data(), 256, {512, 0.5});
  double inside = 0, total = 0;
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    total += psd.power(0, k);
    if (psd.freqs[k] >= 2 && psd.freqs[k] <= 36) inside += psd.power(0, k);
  }
  CHECK((total - inside) / total <= 0.05);
}

TEST_CASE("rate mismatch is rejected") {
  const auto bp = design_butterworth({FilterKind::bandpass, 8, {2, 36}, 256});
  CHECK_THROWS_AS(apply_zero_phase(bp, single_channel(std::vector<double>(1000), 512)),
                  ValidationError);
  // preprocess re-targets the chain instead
  CHECK_NOTHROW(preprocess(single_channel(std::vector<double>(1000), 512)));
}

TEST_CASE("analysis windows") {
  const auto layout = ChannelLayout::standard();
  Matrix m(15, 2304 * 2);
  for (std::size_t t = 0; t < m.cols(); ++t) m(0, t) = static_cast<double>(t);
  const Recording rec(256, m, layout);

  const auto p1 = ProtocolSpec::builtin(ProtocolId::P1a);
  auto w = extract_window(rec, {0, TaskClass::rest(), 0, 1536, ProtocolId::P1a}, p1);
  CHECK(w.rows() == 15);
  CHECK(w.cols() == 1024);
  CHECK(w(0, 0) == 512);
  CHECK(w(0, 1023) == 1535);

  const auto p3 = ProtocolSpec::builtin(ProtocolId::P3a);
  w = extract_window(rec, {1, TaskClass::rest(), 2304, 2304, ProtocolId::P3a}, p3);
  CHECK(w(0, 0) == 2304 + 768);
  CHECK(w(0, 1023) == 2304 + 1791);

  CHECK_THROWS_AS(extract_window(rec, {0, TaskClass::rest(), 0, 1280, ProtocolId::P1a}, p1),
                  RangeError);
  CHECK_THROWS_AS(extract_window(rec, {0, TaskClass::rest(), 4000, 1536, ProtocolId::P1a}, p1),
                  RangeError);
}

TEST_CASE("coefficient dump round-trips") {
  const auto bp = design_butterworth({FilterKind::bandpass, 8, {2, 36}, 256});
  std::ostringstream out;
  write_sections(out, bp);
  std::istringstream in(out.str());
  std::string line;
  std::size_t k = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::vector<double> coeffs;
    std::string token;
    while (fields >> token) {
      double v = 0;
      std::from_chars(token.data(), token.data() + token.size(), v);
      coeffs.push_back(v);
    }
    REQUIRE(coeffs.size() == 6);
    REQUIRE(k < bp.sections.size());
    for (int j = 0; j < 3; ++j) {
      CHECK(coeffs[j] == bp.sections[k].b[j]);
      CHECK(coeffs[3 + j] == bp.sections[k].a[j]);
    }
    ++k;
  }
  CHECK(k == bp.sections.size());
}
