#include "doctest.h"

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "vibci/error.hpp"
#include "vibci/metrics.hpp"

using namespace vibci;

namespace {

// A one-feature model that predicts class k for feature value k.
LinearModel lookup_model(const std::vector<TaskClass>& classes) {
  LinearModel m;
  m.classes = classes;
  m.electrodes = {"O1"};
  m.scaler = {{0.0}, {1.0}};
  m.weights = Matrix(classes.size(), 1);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    m.weights(k, 0) = 2.0 * static_cast<double>(k);
    m.biases.push_back(-static_cast<double>(k * k));
  }
  return m;
}

FeatureVector fv(double v, TaskClass label) { return {{v}, label, {"O1"}}; }

const std::vector<TaskClass> kP3a{TaskClass::vi(5), TaskClass::vi(7), TaskClass::rest()};

}  // namespace

TEST_CASE("Wolpaw bit rate reference values") {
  CHECK(wolpaw_bitrate(3, 1.0, 6).bits_per_minute == doctest::Approx(15.85).epsilon(0.01 / 15.85));
  CHECK(std::abs(wolpaw_bitrate(3, 1.0, 6).bits_per_minute - 15.849625) < 1e-5);
  CHECK(wolpaw_bitrate(2, 0.5, 6).bits_per_minute == 0.0);
  CHECK(wolpaw_bitrate(2, 0.5, 60).bits_per_minute == 0.0);
  const auto pure_vi = wolpaw_bitrate(3, 0.7139, 9);
  CHECK(std::abs(pure_vi.bits_per_minute - 2.90) <= 0.02);
  // the same accuracy at 6 s per trial lands near the "approximately 4" figure
  CHECK(std::abs(wolpaw_bitrate(3, 0.7139, 6).bits_per_minute - 4.35) <= 0.02);
}

TEST_CASE("bit rate matches the formula and clamps below chance") {
  for (std::size_t n = 2; n <= 6; ++n) {
    const double chance = 1.0 / static_cast<double>(n);
    CHECK(wolpaw_bitrate(n, chance, 4).bits_per_minute == doctest::Approx(0.0));
    double prev = -1;
    for (int i = 0; i <= 100; ++i) {
      const double p = i / 100.0;
      const auto b = wolpaw_bitrate(n, p, 5);
      if (p < chance) {
        CHECK(b.below_chance);
        CHECK(b.bits_per_trial == 0.0);
        continue;
      }
      CHECK_FALSE(b.below_chance);
      CHECK(b.bits_per_trial == doctest::Approx(oracle::wolpaw_bits(n, p)).epsilon(1e-12));
      CHECK(b.bits_per_minute == doctest::Approx(b.bits_per_trial * 12).epsilon(1e-12));
      CHECK(b.bits_per_minute >= prev - 1e-12);
      prev = b.bits_per_minute;
    }
  }
  CHECK_THROWS_AS(wolpaw_bitrate(1, 0.5, 6), ValidationError);
  CHECK_THROWS_AS(wolpaw_bitrate(3, 1.5, 6), ValidationError);
  CHECK_THROWS_AS(wolpaw_bitrate(3, 0.5, 0), ValidationError);
}

TEST_CASE("perfect predictions give a diagonal matrix") {
  const auto model = lookup_model(kP3a);
  std::vector<FeatureVector> f;
  for (int i = 0; i < 60; ++i) f.push_back(fv(i % 3, kP3a[i % 3]));
  const auto e = evaluate(model, Dataset(f, {5, 5}, 0.5));
  CHECK(e.accuracy == 1.0);
  CHECK(e.confusion.total() == 60);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(e.confusion.counts[i][j] == (i == j ? 20u : 0u));
}

TEST_CASE("reported accuracies correspond to whole trial counts") {
  CHECK(std::round(0.7139 * 360) == 257);
  CHECK(std::round(257.0 / 360 * 10000) / 100 == 71.39);
  CHECK(std::round(0.8111 * 180) == 146);
  CHECK(std::round(146.0 / 180 * 10000) / 100 == 81.11);

  ConfusionMatrix m(kP3a);
  for (int i = 0; i < 360; ++i) m.add(kP3a[i % 3], i < 257 ? kP3a[i % 3] : kP3a[(i + 1) % 3]);
  CHECK(m.correct() == 257);
  CHECK(m.accuracy() == doctest::Approx(0.7139).epsilon(1e-4));
}

TEST_CASE("confusion matrices add over disjoint test sets") {
  const auto model = lookup_model(kP3a);
  std::vector<FeatureVector> a, b;
  for (int i = 0; i < 30; ++i) a.push_back(fv((i * 7) % 3, kP3a[i % 3]));
  for (int i = 0; i < 21; ++i) b.push_back(fv((i * 5) % 3, kP3a[(i + 1) % 3]));
  auto all = a;
  all.insert(all.end(), b.begin(), b.end());
  auto sum = evaluate(model, Dataset(a, {5, 5}, 0.5)).confusion;
  sum += evaluate(model, Dataset(b, {5, 5}, 0.5)).confusion;
  CHECK(sum == evaluate(model, Dataset(all, {5, 5}, 0.5)).confusion);

  ConfusionMatrix other({TaskClass::vi(5)});
  CHECK_THROWS_AS(sum += other, ValidationError);
}

TEST_CASE("matrix covers test classes the model never saw") {
  const auto model = lookup_model({TaskClass::vi(5), TaskClass::rest()});
  const std::vector<FeatureVector> f{fv(0, TaskClass::vi(5)), fv(1, TaskClass::vi(7))};
  const auto e = evaluate(model, Dataset(f, {5, 5}, 0.5));
  CHECK(e.confusion.classes == kP3a);
  CHECK(e.confusion.counts[1][2] == 1);
  CHECK(e.accuracy == 0.5);
}

TEST_CASE("binomial interval") {
  const auto ci = binomial_ci95(1.0 / 3.0, 360);
  CHECK(ci.lo == doctest::Approx(0.2846).epsilon(1e-3));
  CHECK(ci.hi == doctest::Approx(0.3820).epsilon(1e-3));
  CHECK(ci.contains(1.0 / 3.0));
  CHECK_FALSE(ci.contains(0.40));
}

TEST_CASE("confusion text block") {
  ConfusionMatrix m(kP3a);
  m.add(TaskClass::vi(5), TaskClass::vi(5));
  m.add(TaskClass::rest(), TaskClass::vi(7));
  std::ostringstream out;
  write_confusion(out, m, "test");
  const std::string text = out.str();
  CHECK(text.find("# test") == 0);
  CHECK(text.find("VI-5") != std::string::npos);
  std::istringstream lines(text);
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 5);
}
