#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "vibci/learner.hpp"
#include "vibci/signal_model.hpp"
#include "vibci/spectral.hpp"

namespace vibci {

/// counts(true, predicted) over classes in canonical order.
struct ConfusionMatrix {
  std::vector<TaskClass> classes;
  std::vector<std::vector<std::size_t>> counts;

  explicit ConfusionMatrix(std::vector<TaskClass> classes = {});

  std::size_t total() const;
  std::size_t correct() const;
  double accuracy() const;
  std::size_t index(const TaskClass& label) const;
  void add(const TaskClass& truth, const TaskClass& predicted);

  /// Element-wise sum; the class lists must match.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Evaluation {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
};

/// Predicts every example of `test`. The matrix covers the union of the
/// model's and the test set's classes in canonical order.
Evaluation evaluate(const LinearModel& model, const Dataset& test);

struct Bitrate {
  double bits_per_trial = 0.0;
  double bits_per_minute = 0.0;
  bool below_chance = false;  // accuracy < 1/N, clamped to zero
};

/// Wolpaw information transfer rate. Throws ValidationError for N < 2,
/// accuracy outside [0, 1], or a non-positive trial duration.
Bitrate wolpaw_bitrate(std::size_t n_classes, double accuracy, double trial_seconds);

/// Two-sided 95% normal-approximation binomial interval around p for n trials.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};
Interval binomial_ci95(double p, std::size_t n);

/// Integer grid with class headers, one row per true class.
void write_confusion(std::ostream& out, const ConfusionMatrix& matrix, const std::string& title);

}  // namespace vibci
