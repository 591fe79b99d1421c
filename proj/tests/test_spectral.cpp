#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "vibci/error.hpp"
#include "vibci/rng.hpp"
#include "vibci/spectral.hpp"

using namespace vibci;

namespace {

double integrated(const PsdEstimate& psd, std::size_t row = 0) {
  double s = 0.0;
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) s += psd.power(row, k);
  return s * psd.resolution();
}

std::size_t argmax_bin(const PsdEstimate& psd, std::size_t row = 0) {
  const auto r = psd.power.row(row);
  return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
}

Matrix one_row(const std::vector<double>& x) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  return m;
}

std::vector<double> tone(double hz, double amp, std::size_t n, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t)
    x[t] = amp * std::sin(2 * std::numbers::pi * hz * static_cast<double>(t) / 256.0 + phase);
  return x;
}

const std::vector<std::string> kSites{"AF4", "F4", "F8", "O1", "O2", "Pz", "P3", "P4",
                                      "Fz",  "Cz", "Oz", "T7", "T8", "P7", "P8"};

}  // namespace

TEST_CASE("5 Hz sinusoid: arg-max bin and total power") {
  for (double amp : {0.5, 1.0, 3.0}) {
    const auto psd = welch_psd(one_row(tone(5, amp, 1024, 0.4)), 256, {512, 0.5});
    CHECK(psd.resolution() == 0.5);
    CHECK(psd.freqs.size() == 257);
    CHECK(psd.freqs[argmax_bin(psd)] == 5.0);
    CHECK(integrated(psd) == doctest::Approx(amp * amp / 2).epsilon(0.03));
  }
}

TEST_CASE("zero signal gives a zero PSD") {
  const auto psd = welch_psd(Matrix(2, 1024), 256, {512, 0.5});
  for (double v : psd.power.flat()) CHECK(v == 0.0);
}

TEST_CASE("white noise integrates to its variance on average") {
  Rng rng(1);
  double total = 0.0;
  for (int r = 0; r < 100; ++r) {
    std::vector<double> x(1024);
    for (auto& v : x) v = rng.normal();
    total += integrated(welch_psd(one_row(x), 256, {512, 0.5}));
  }
  CHECK(total / 100 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("Parseval on random multi-tone signals") {
  Rng rng(77);
  for (int r = 0; r < 100; ++r) {
    std::vector<double> x(1024, 0.0), used;
    const auto tones = 1 + rng.below(5);
    while (used.size() < tones) {
      const double hz = 3 + rng.uniform() * 97;
      const double amp = 0.5 + rng.uniform() * 4;
      const double phase = rng.uniform() * 2 * std::numbers::pi;
      // Tones closer than the window's main lobe beat within a segment.
      if (std::any_of(used.begin(), used.end(), [&](double u) { return std::abs(u - hz) < 2.0; })) continue;
      used.push_back(hz);
      const auto s = tone(hz, amp, x.size(), phase);
      for (std::size_t t = 0; t < x.size(); ++t) x[t] += s[t];
    }
    for (auto& v : x) v += 0.1 * rng.normal() + 3.0;
    const auto psd = welch_psd(one_row(x), 256, {512, 0.5});
    CAPTURE(r);
    CHECK(integrated(psd) == doctest::Approx(oracle::variance(x)).epsilon(0.05));
  }
}

TEST_CASE("PSD is non-negative and deterministic") {
  Rng rng(3);
  Matrix m(3, 2000);
  for (auto& v : m.flat()) v = rng.normal() * 50 + std::pow(rng.uniform(), 8) * 1e4;
  const auto a = welch_psd(m, 256, {256, 0.25});
  const auto b = welch_psd(m, 256, {256, 0.25});
  for (double v : a.power.flat()) CHECK(v >= 0.0);
  CHECK(a.power == b.power);
}

TEST_CASE("bin-centred sinusoids in noise are identified") {
  Rng rng(12);
  for (int r = 0; r < 50; ++r) {
    const double hz = 3.0 + 0.5 * static_cast<double>(rng.below(55));  // 3 .. 30 Hz
    // 10 dB over unit white noise: amplitude^2 / 2 = 10
    auto x = tone(hz, std::sqrt(20.0), 1024, rng.uniform() * 6);
    for (auto& v : x) v += rng.normal();
    const auto psd = welch_psd(one_row(x), 256, {512, 0.5});
    CAPTURE(hz);
    CHECK(psd.freqs[argmax_bin(psd)] == hz);
  }
}

TEST_CASE("Welch parameter validation") {
  const Matrix m(1, 1024);
  CHECK_THROWS_AS(welch_psd(m, 256, {2048, 0.5}), ValidationError);
  CHECK_THROWS_AS(welch_psd(m, 256, {4, 0.5}), ValidationError);
  CHECK_THROWS_AS(welch_psd(m, 256, {512, 1.0}), ValidationError);
  CHECK_THROWS_AS(welch_psd(m, 256, {512, 0.5}, {"O1", "O2"}), ValidationError);
}

TEST_CASE("feature vectors over the band") {
  Rng rng(6);
  Matrix m(15, 1024);
  for (auto& v : m.flat()) v = rng.normal();
  const auto psd = welch_psd(m, 256, {512, 0.5}, kSites);
  const auto f = extract_features(psd, {2, 36}, kSites, TaskClass::vi(5));
  CHECK(f.values.size() == 1035);
  CHECK(f.electrodes == kSites);

  const std::vector<std::string> one{"O1"};
  const auto single = extract_features(psd, {5, 5}, one, TaskClass::rest());
  REQUIRE(single.values.size() == 1);
  CHECK(single.values[0] == psd.power(3, 10));

  // subsets follow the PSD's channel order
  const std::vector<std::string> swapped{"O2", "AF4"};
  const auto sub = extract_features(psd, {2, 36}, swapped, TaskClass::rest());
  CHECK(sub.electrodes == std::vector<std::string>{"AF4", "O2"});
  CHECK(sub.values[0] == psd.power(0, 4));
  CHECK(sub.values[69] == psd.power(4, 4));

  const std::vector<std::string> unknown{"Cz", "C3"};
  CHECK_THROWS_AS(extract_features(psd, {2, 36}, unknown, TaskClass::rest()), ValidationError);
  CHECK_THROWS_AS(extract_features(psd, {36, 2}, kSites, TaskClass::rest()), ValidationError);
  CHECK_THROWS_AS(extract_features(psd, {2.1, 2.2}, kSites, TaskClass::rest()), ValidationError);
  CHECK_THROWS_AS(extract_features(psd, {2, 300}, kSites, TaskClass::rest()), ValidationError);
}

TEST_CASE("features scale with the square of the input") {
  Rng rng(10);
  Matrix m(15, 1024);
  for (auto& v : m.flat()) v = rng.normal();
  Matrix scaled = m;
  for (auto& v : scaled.flat()) v *= 3.0;
  const auto a = extract_features(welch_psd(m, 256, {}, kSites), {}, kSites, TaskClass::rest());
  const auto b = extract_features(welch_psd(scaled, 256, {}, kSites), {}, kSites, TaskClass::rest());
  for (std::size_t i = 0; i < a.values.size(); ++i)
    CHECK(b.values[i] == doctest::Approx(9.0 * a.values[i]).epsilon(1e-9));
}

TEST_CASE("class averaging") {
  Rng rng(2);
  std::vector<LabeledPsd> trials;
  for (int i = 0; i < 4; ++i) {
    Matrix m(2, 1024);
    for (auto& v : m.flat()) v = rng.normal();
    trials.push_back({welch_psd(m, 256, {}, {"O1", "O2"}), i == 0 ? TaskClass::vi(5) : TaskClass::rest()});
  }
  const auto one = average_psd_by_class(trials, TaskClass::vi(5), "O2");
  CHECK(one.freqs == trials[0].psd.freqs);
  for (std::size_t k = 0; k < one.power.size(); ++k) CHECK(one.power[k] == trials[0].psd.power(1, k));

  const auto rest = average_psd_by_class(trials, TaskClass::rest(), "O1");
  for (std::size_t k = 0; k < rest.power.size(); ++k) {
    const double mean =
        (trials[1].psd.power(0, k) + trials[2].psd.power(0, k) + trials[3].psd.power(0, k)) / 3;
    CHECK(rest.power[k] == doctest::Approx(mean).epsilon(1e-12));
  }
  CHECK_THROWS_AS(average_psd_by_class(trials, TaskClass::vi(7), "O1"), ValidationError);
  CHECK_THROWS_AS(average_psd_by_class(trials, TaskClass::rest(), "Cz"), ValidationError);
}

TEST_CASE("dataset bookkeeping") {
  auto fv = [](double v, TaskClass c) {
    return FeatureVector{{v, v + 1, v + 2, v + 3}, c, {"O1", "O2"}};
  };
  Dataset d({fv(1, TaskClass::rest()), fv(2, TaskClass::vi(7)), fv(3, TaskClass::vi(5))}, {5, 5.5},
            0.5);
  CHECK(d.dimension() == 4);
  CHECK(d.bins_per_electrode() == 2);
  CHECK(d.classes() == std::vector<TaskClass>{TaskClass::vi(5), TaskClass::vi(7), TaskClass::rest()});
  CHECK(d.labels() == std::vector<std::size_t>{2, 1, 0});

  const std::vector<std::string> o2{"O2"};
  const auto s = d.select(o2);
  CHECK(s.dimension() == 2);
  CHECK(s.features()[0].values == std::vector<double>{3, 4});

  const std::vector<std::size_t> rows{0, 1};
  const auto sub = d.subset(rows);
  CHECK(sub.classes() == std::vector<TaskClass>{TaskClass::vi(7), TaskClass::rest()});
  CHECK(Dataset::concat(d, sub).size() == 5);
  CHECK_THROWS_AS(Dataset::concat(d, s), ValidationError);
  CHECK_THROWS_AS(Dataset({}, {}, 0.5), ValidationError);
}
