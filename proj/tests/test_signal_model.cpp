#include "doctest.h"

#include <algorithm>
#include <limits>
#include <map>

#include "vibci/error.hpp"
#include "vibci/rng.hpp"
#include "vibci/signal_model.hpp"

using namespace vibci;

TEST_CASE("standard layout has 15 signal sites plus ground and reference") {
  const auto layout = ChannelLayout::standard();
  CHECK(layout.signal_count() == 15);
  CHECK(layout.channels().size() == 17);
  CHECK(layout.ground().name == "AFz");
  CHECK(layout.reference().name == "A2");
  CHECK(layout.signal_names().front() == "AF4");
  CHECK(layout.signal_index("O2") == 4u);
  CHECK_FALSE(layout.signal_index("AFz").has_value());
  CHECK_FALSE(layout.signal_index("Xx").has_value());
}

TEST_CASE("layout validation") {
  using R = ChannelRole;
  CHECK_THROWS_AS(ChannelLayout({{"O1", R::signal}, {"O1", R::signal}, {"Fz", R::ground},
                                 {"A2", R::reference}}),
                  ValidationError);
  CHECK_THROWS_AS(ChannelLayout({{"O1", R::signal}, {"Fz", R::reference}}), ValidationError);
  CHECK_THROWS_AS(ChannelLayout({{"Q9", R::signal}, {"Fz", R::ground}, {"A2", R::reference}}),
                  ValidationError);
  CHECK_NOTHROW(ChannelLayout({{"O1", R::signal}, {"Fz", R::ground}, {"A2", R::reference}}));
  CHECK(is_known_electrode("POz"));
  CHECK_FALSE(is_known_electrode("pz"));
}

TEST_CASE("recording validation") {
  const auto layout = ChannelLayout::standard();
  CHECK_NOTHROW(Recording(256, Matrix(15, 10), layout));
  CHECK_THROWS_AS(Recording(256, Matrix(14, 10), layout), ValidationError);
  CHECK_THROWS_AS(Recording(0, Matrix(15, 10), layout), ValidationError);
  CHECK_THROWS_AS(Recording(256, Matrix(15, 0), layout), ValidationError);
  Matrix bad(15, 10);
  bad(3, 4) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Recording(256, bad, layout), ValidationError);
}

TEST_CASE("task class names") {
  CHECK(TaskClass::ssvep(5).name() == "SSVEP-5");
  CHECK(TaskClass::vi(7).name() == "VI-7");
  CHECK(TaskClass::rest().name() == "REST");
  CHECK(TaskClass::vi(7.5).name() == "VI-7.5");
  for (const auto* name : {"SSVEP-5", "VI-7", "REST", "VI-7.5"})
    CHECK(TaskClass::parse(name).name() == name);
  CHECK_THROWS_AS(TaskClass::parse("VI"), ValidationError);
  CHECK_THROWS_AS(TaskClass::parse("REST-5"), ValidationError);
  CHECK_THROWS_AS(TaskClass::parse("VI--5"), ValidationError);
  CHECK_THROWS_AS((TaskClass{TaskKind::rest, 5.0}).validate(), ValidationError);
  CHECK_THROWS_AS((TaskClass{TaskKind::vi, std::nullopt}).validate(), ValidationError);
}

TEST_CASE("canonical order puts SSVEP before VI before REST") {
  std::vector<TaskClass> v{TaskClass::rest(), TaskClass::vi(7), TaskClass::ssvep(7),
                           TaskClass::vi(5), TaskClass::ssvep(5)};
  std::sort(v.begin(), v.end(), canonical_less);
  std::vector<std::string> names;
  for (const auto& c : v) names.push_back(c.name());
  CHECK(names == std::vector<std::string>{"SSVEP-5", "SSVEP-7", "VI-5", "VI-7", "REST"});
}

TEST_CASE("class sets of the built-in protocols") {
  CHECK(class_set(ProtocolId::P1a) ==
        std::vector<TaskClass>{TaskClass::ssvep(5), TaskClass::vi(5), TaskClass::rest()});
  CHECK(class_set(ProtocolId::P3a) ==
        std::vector<TaskClass>{TaskClass::vi(5), TaskClass::vi(7), TaskClass::rest()});
  CHECK(class_set(ProtocolId::P2a).size() == 5);
  CHECK_THROWS_AS(class_set(ProtocolId::custom), ValidationError);
  CHECK(parse_protocol_id("P2a") == ProtocolId::P2a);
  CHECK_THROWS_AS(parse_protocol_id("P9"), ValidationError);
}

TEST_CASE("schedule_session trial counts and durations") {
  struct Expect {
    ProtocolId id;
    std::size_t trials;
    std::size_t samples;
  };
  for (auto e : {Expect{ProtocolId::P1a, 45, 1536}, Expect{ProtocolId::P1b, 45, 1536},
                 Expect{ProtocolId::P1c, 45, 1536}, Expect{ProtocolId::P1d, 45, 1536},
                 Expect{ProtocolId::P2a, 90, 1536}, Expect{ProtocolId::P3a, 60, 2304}}) {
    CAPTURE(to_string(e.id));
    const auto protocol = ProtocolSpec::builtin(e.id);
    const auto plan = schedule_session(protocol, 256, 11);
    REQUIRE(plan.trials.size() == e.trials);
    std::map<std::string, std::size_t> counts;
    for (const auto& t : plan.trials) {
      CHECK(t.duration_samples == e.samples);
      ++counts[t.label.name()];
    }
    for (const auto& c : protocol.classes) CHECK(counts[c.name()] == protocol.trials_per_class);
    CHECK(plan.total_samples() ==
          seconds_to_samples(protocol.trial_duration * static_cast<double>(e.trials), 256));
  }
}

TEST_CASE("scheduling is seeded and permutes the canonical multiset") {
  const auto protocol = ProtocolSpec::builtin(ProtocolId::P2a);
  CHECK(schedule_session(protocol, 256, 5) == schedule_session(protocol, 256, 5));
  CHECK_FALSE(schedule_session(protocol, 256, 5) == schedule_session(protocol, 256, 6));

  std::vector<std::string> expected;
  for (const auto& c : protocol.classes)
    for (std::size_t k = 0; k < protocol.trials_per_class; ++k) expected.push_back(c.name());
  std::sort(expected.begin(), expected.end());

  Rng seeds(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto plan = schedule_session(protocol, 256, seeds());
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < plan.trials.size(); ++k) {
      const auto& t = plan.trials[k];
      labels.push_back(t.label.name());
      CHECK(t.index == k);
      if (k + 1 < plan.trials.size()) CHECK(t.end_sample() <= plan.trials[k + 1].start_sample);
    }
    std::sort(labels.begin(), labels.end());
    REQUIRE(labels == expected);
  }
}

TEST_CASE("protocol validation") {
  auto p = ProtocolSpec::builtin(ProtocolId::P1a);
  p.window_end = 7;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = ProtocolSpec::builtin(ProtocolId::P1a);
  p.classes.clear();
  CHECK_THROWS_AS(p.validate(), ValidationError);
  CHECK_THROWS_AS(seconds_to_samples(0.3, 250.5), ValidationError);
  CHECK(seconds_to_samples(9, 256) == 2304);
}

TEST_CASE("rng helpers") {
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  Rng a(3), b(3);
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
  Rng r(9);
  std::vector<int> hits(5);
  for (int i = 0; i < 5000; ++i) ++hits[r.below(5)];
  for (int h : hits) CHECK(h > 850);
  double sum = 0, sq = 0;
  for (int i = 0; i < 20000; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / 20000) < 0.03);
  CHECK(std::abs(sq / 20000 - 1) < 0.05);
}
