#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vibci/matrix.hpp"
#include "vibci/signal_model.hpp"
#include "vibci/spectral.hpp"

namespace vibci {

/// Per-feature standardization fitted on training data. Features with zero
/// variance pass through unchanged (mean 0, scale 1).
struct Scaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static Scaler fit(const Dataset& data);
  std::vector<double> transform(std::span<const double> x) const;
  /// Standardized copy of every example, one row per example.
  Matrix transform(const Dataset& data) const;

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

struct SolverOptions {
  double tolerance = 1e-4;  // on max |projected gradient|
  std::size_t max_epochs = 10000;
  // Jump to the optimum of the final free face once the tolerance is met.
  bool finish = true;
};

/// Dual coordinate descent result for one binary hinge-loss problem.
struct DualSolution {
  std::vector<double> alpha;
  std::vector<double> weights;  // sum_i alpha_i y_i x_i
  double bias = 0.0;            // sum_i alpha_i y_i (bias feature fixed at 1)
  double objective = 0.0;       // dual objective sum(alpha) - |w|^2/2 - b^2/2
  double kkt_violation = 0.0;   // max |projected gradient| over all examples
  std::size_t epochs = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // dual objective after every epoch
};

/// L2-regularized hinge-loss SVM on the rows of `x` (labels +1 / -1) with a
/// regularized bias, solved in the dual: maximize sum(a) - a'Qa/2 over
/// 0 <= a_i <= C, Q_ij = y_i y_j (x_i.x_j + 1). Each epoch visits the active
/// coordinates in a fresh Rng(seed) permutation; coordinates pinned at a
/// bound are shrunk away and restored before convergence is declared.
/// A non-empty `start` (clipped to the box) replaces the all-zero start.
DualSolution solve_dual(const Matrix& x, std::span<const double> labels, double C,
                        std::uint64_t seed, const SolverOptions& options = {},
                        std::span<const double> start = {});

/// One-vs-rest linear SVM over standardized features.
struct LinearModel {
  std::vector<TaskClass> classes;       // canonical order; row k of weights
  std::vector<std::string> electrodes;  // feature layout
  double C = 1.0;
  Scaler scaler;
  Matrix weights;  // [classes x features], in standardized feature space
  std::vector<double> biases;

  std::size_t dimension() const noexcept { return weights.cols(); }

  /// w_k . standardize(x) + b_k for every class.
  std::vector<double> scores(std::span<const double> features) const;
  /// Index of the arg-max score; exact ties go to the lowest index.
  std::size_t predict_index(std::span<const double> features) const;

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct TrainReport {
  std::vector<DualSolution> per_class;
};

/// Fits the scaler, standardizes, and solves one binary dual problem per
/// class (class k positive, the rest negative). Needs at least two classes
/// with two examples each.
LinearModel train_svm(const Dataset& data, double C, std::uint64_t seed,
                      const SolverOptions& options = {}, TrainReport* report = nullptr);

/// Throws ValidationError if the feature's electrodes or length do not match.
TaskClass predict(const LinearModel& model, const FeatureVector& feature);

struct CandidateScore {
  std::vector<std::string> electrodes;
  double C = 0.0;
  double accuracy = 0.0;
};

struct TuningOptions {
  std::vector<double> c_grid{0.03125, 0.125, 0.5, 2.0, 8.0, 32.0};
  std::size_t max_electrodes = 0;  // 0: no limit
  /// Solver budget for scoring candidates on the split.
  SolverOptions solver{1e-3, 1000, false};
  /// Solver for the final model retrained on the whole training set.
  SolverOptions final_solver{};
};

struct TuningResult {
  std::vector<std::string> electrodes;
  double C = 0.0;
  double validation_accuracy = 0.0;
  std::vector<CandidateScore> audit;  // every (subset, C) evaluated, in evaluation order
  std::uint64_t split_seed = 0;
  LinearModel model;  // retrained on the whole training set

  friend bool operator==(const TuningResult& a, const TuningResult& b) {
    return a.electrodes == b.electrodes && a.C == b.C &&
           a.validation_accuracy == b.validation_accuracy && a.split_seed == b.split_seed &&
           a.model == b.model && a.audit.size() == b.audit.size();
  }
};

/// Stratified half split: each class's examples are shuffled with a
/// class-specific derived seed and the first ceil(n/2) go to the fitting half.
/// Throws ValidationError if a class has fewer than 4 examples.
struct Split {
  std::vector<std::size_t> fit;
  std::vector<std::size_t> validate;
};
Split stratified_split(const Dataset& data, std::uint64_t seed);

/// Greedy forward electrode selection crossed with a C grid, scored on a
/// stratified half split; the winner is retrained on all of `train`.
/// A subset's score is its best accuracy over the C grid (smallest C on
/// ties); the electrode with the best score is added (earliest in the
/// dataset's electrode order on ties) while the score strictly improves.
TuningResult tune_hyperparameters(const Dataset& train, std::uint64_t seed,
                                  const TuningOptions& options = {});

}  // namespace vibci
