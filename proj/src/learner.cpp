#include "vibci/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "vibci/error.hpp"
#include "vibci/rng.hpp"

namespace vibci {

namespace {

double projected_gradient(double g, double a, double C) {
  if (a <= 0.0) return std::min(g, 0.0);
  if (a >= C) return std::max(g, 0.0);
  return g;
}

std::vector<double> binary_labels(std::span<const std::size_t> classes, std::size_t positive) {
  std::vector<double> y(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) y[i] = classes[i] == positive ? 1.0 : -1.0;
  return y;
}

void check_trainable(const Dataset& data) {
  if (data.classes().size() < 2) throw ValidationError("training needs at least two classes");
  std::vector<std::size_t> counts(data.classes().size(), 0);
  for (auto c : data.labels()) ++counts[c];
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] < 2)
      throw ValidationError("class " + data.classes()[k].name() + " has fewer than two examples");
}

// Columns of the given electrode blocks, in block order.
Matrix select_blocks(const Matrix& x, const std::vector<std::size_t>& blocks, std::size_t width) {
  Matrix out(x.rows(), blocks.size() * width);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto src = x.row(i);
    auto dst = out.row(i);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(blocks[b] * width), width,
                  dst.begin() + static_cast<std::ptrdiff_t>(b * width));
  }
  return out;
}

// Free faces larger than this are left to coordinate descent alone.
constexpr std::size_t kMaxFace = 1500;
// Epoch of the first jump to the optimum of the current free face; later
// ones follow at doubling intervals.
constexpr std::size_t kFirstPolish = 1000;
constexpr std::size_t kPolishSteps = 64;

}  // namespace

Scaler Scaler::fit(const Dataset& data) {
  const std::size_t d = data.dimension();
  const auto n = static_cast<double>(data.size());
  Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  for (const auto& fv : data.features())
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += fv.values[j];
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (const auto& fv : data.features())
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = fv.values[j] - s.mean[j];
      var[j] += diff * diff;
    }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / n);
    if (sd > 1e-10 * std::abs(s.mean[j]) && sd > 0.0) {
      s.scale[j] = sd;
    } else {
      s.mean[j] = 0.0;
      s.scale[j] = 1.0;
    }
  }
  return s;
}

std::vector<double> Scaler::transform(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
  return out;
}

Matrix Scaler::transform(const Dataset& data) const {
  Matrix out(data.size(), data.dimension());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& x = data.features()[i].values;
    auto row = out.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) row[j] = (x[j] - mean[j]) / scale[j];
  }
  return out;
}

DualSolution solve_dual(const Matrix& x, std::span<const double> labels, double C,
                        std::uint64_t seed, const SolverOptions& options,
                        std::span<const double> start) {
  const std::size_t n = labels.size();
  const std::size_t d = x.cols();
  if (x.rows() != n) throw ValidationError("label count does not match example count");
  if (!(C > 0.0) || !std::isfinite(C)) throw ValidationError("C must be a positive finite value");
  if (!start.empty() && start.size() != n)
    throw ValidationError("start point length does not match example count");

  constexpr double inf = std::numeric_limits<double>::infinity();
  DualSolution sol;
  sol.alpha.assign(n, 0.0);
  sol.weights.assign(d, 0.0);
  std::vector<double> qdiag(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    qdiag[i] = std::inner_product(xi.begin(), xi.end(), xi.begin(), 0.0) + 1.0;
  }

  auto gradient = [&](std::size_t i) {
    const auto xi = x.row(i);
    const double margin = std::inner_product(xi.begin(), xi.end(), sol.weights.begin(), sol.bias);
    return labels[i] * margin - 1.0;
  };
  auto objective = [&] {
    const double sum_a = std::accumulate(sol.alpha.begin(), sol.alpha.end(), 0.0);
    const double norm =
        std::inner_product(sol.weights.begin(), sol.weights.end(), sol.weights.begin(), 0.0);
    return sum_a - 0.5 * (norm + sol.bias * sol.bias);
  };
  auto rebuild = [&] {
    std::fill(sol.weights.begin(), sol.weights.end(), 0.0);
    sol.bias = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (sol.alpha[i] == 0.0) continue;
      const double c = sol.alpha[i] * labels[i];
      const auto xi = x.row(i);
      for (std::size_t j = 0; j < d; ++j) sol.weights[j] += c * xi[j];
      sol.bias += c;
    }
  };
  // Moves the free coordinates toward the maximizer of the dual restricted to
  // the current face (bounded coordinates held fixed), stopping at the box.
  // Kept only if the objective does not decrease. Returns 0 if rejected, 1 if
  // the step was cut short by a bound, 2 if the face optimum was reached.
  auto polish_step = [&]() -> int {
    std::vector<std::size_t> face;
    for (std::size_t i = 0; i < n; ++i)
      if (sol.alpha[i] > 0.0 && sol.alpha[i] < C) face.push_back(i);
    if (face.empty() || face.size() > kMaxFace) return 0;
    const auto m = static_cast<Eigen::Index>(face.size());

    // Margins without the free coordinates' own contribution.
    std::vector<double> w_rest = sol.weights;
    double b_rest = sol.bias;
    for (auto i : face) {
      const double c = sol.alpha[i] * labels[i];
      const auto xi = x.row(i);
      for (std::size_t j = 0; j < d; ++j) w_rest[j] -= c * xi[j];
      b_rest -= c;
    }
    // The face Hessian is A A^T with rows A_a = y_a [x_a, 1]; work from the
    // thin SVD of A instead of forming it.
    const auto p = static_cast<Eigen::Index>(d + 1);
    Eigen::MatrixXd rows(m, p);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const auto xa = x.row(face[a]);
      const double ya = labels[face[a]];
      for (Eigen::Index j = 0; j + 1 < p; ++j) rows(a, j) = ya * xa[static_cast<std::size_t>(j)];
      rows(a, p - 1) = ya;
      rhs(a) = 1.0 - ya * std::inner_product(xa.begin(), xa.end(), w_rest.begin(), b_rest);
    }
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeThinU);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = static_cast<double>(std::max(m, p)) *
                          std::numeric_limits<double>::epsilon() * (sv.size() ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > cutoff) ++rank;
    if (rank == 0) return 0;
    const auto u = svd.matrixU().leftCols(rank);
    const Eigen::VectorXd proj = u.transpose() * rhs;
    const Eigen::VectorXd solution =
        u * (proj.array() / sv.head(rank).array().square()).matrix();
    if (!solution.allFinite()) return 0;
    // An inconsistent system means the face objective is unbounded along the
    // least-squares residual, which lies in the null space of the Hessian;
    // follow it to the box. Otherwise head for the solution.
    Eigen::VectorXd current(m);
    for (Eigen::Index a = 0; a < m; ++a) current(a) = sol.alpha[face[a]];
    const Eigen::VectorXd residual = rhs - u * proj;
    const bool unbounded = residual.norm() > 1e-9 * (rhs.norm() + 1.0);
    const Eigen::VectorXd dir = unbounded ? residual : Eigen::VectorXd(solution - current);

    const std::vector<double> saved = sol.alpha;
    const std::vector<double> saved_w = sol.weights;
    const double saved_b = sol.bias;
    const double before = objective();
    // Sets the face to current + t * dir projected on the box; reports
    // whether any coordinate was clipped.
    auto move = [&](double t) {
      bool clipped = false;
      for (Eigen::Index a = 0; a < m; ++a) {
        const double target = current(a) + t * dir(a);
        double& v = sol.alpha[face[a]];
        v = std::clamp(target, 0.0, C);
        if (v < 1e-14 * C) v = 0.0;
        if (v > C * (1.0 - 1e-14)) v = C;
        clipped = clipped || v != target;
      }
      rebuild();
      return clipped;
    };
    auto restore = [&] {
      sol.alpha = saved;
      sol.weights = saved_w;
      sol.bias = saved_b;
    };

    // A projected full step can settle many bounds at once.
    if (!unbounded) {
      const bool clipped = move(1.0);
      if (objective() > before) return clipped ? 1 : 2;
      restore();
    }
    double t = unbounded ? inf : 1.0;
    for (Eigen::Index a = 0; a < m; ++a) {
      if (dir(a) < 0.0) t = std::min(t, -current(a) / dir(a));
      else if (dir(a) > 0.0) t = std::min(t, (C - current(a)) / dir(a));
    }
    if (!std::isfinite(t)) return 0;
    move(t);
    if (objective() >= before) return unbounded || t < 1.0 ? 1 : 2;
    restore();
    return 0;
  };
  auto polish = [&] {
    bool moved = false;
    for (std::size_t k = 0; k < kPolishSteps; ++k) {
      const int r = polish_step();
      moved = moved || r > 0;
      if (r != 1) break;
    }
    return moved;
  };
  if (!start.empty()) {
    for (std::size_t i = 0; i < n; ++i) sol.alpha[i] = std::clamp(start[i], 0.0, C);
    rebuild();
  }
  auto full_violation = [&] {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      v = std::max(v, std::abs(projected_gradient(gradient(i), sol.alpha[i], C)));
    return v;
  };

  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), std::size_t{0});
  double shrink_above = inf;
  double shrink_below = -inf;
  std::size_t next_polish = kFirstPolish;
  Rng rng(seed);

  while (sol.epochs < options.max_epochs) {
    shuffle(std::span<std::size_t>(active), rng);
    double pg_max = -inf;
    double pg_min = inf;
    double worst = 0.0;
    std::size_t kept = 0;
    for (std::size_t s = 0; s < active.size(); ++s) {
      const std::size_t i = active[s];
      const double g = gradient(i);
      double pg = g;
      if (sol.alpha[i] <= 0.0) {
        if (g > shrink_above) continue;  // pinned at the lower bound
        pg = std::min(g, 0.0);
      } else if (sol.alpha[i] >= C) {
        if (g < shrink_below) continue;  // pinned at the upper bound
        pg = std::max(g, 0.0);
      }
      active[kept++] = i;
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      worst = std::max(worst, std::abs(pg));
      if (pg == 0.0) continue;
      const double old = sol.alpha[i];
      sol.alpha[i] = std::clamp(old - g / qdiag[i], 0.0, C);
      const double step = (sol.alpha[i] - old) * labels[i];
      if (step == 0.0) continue;
      const auto xi = x.row(i);
      for (std::size_t j = 0; j < d; ++j) sol.weights[j] += step * xi[j];
      sol.bias += step;
    }
    active.resize(kept);
    ++sol.epochs;
    sol.objective_trace.push_back(objective());

    if (worst < options.tolerance) {
      if (active.size() == n && full_violation() < options.tolerance) {
        sol.converged = true;
        if (options.finish) {
          const auto alpha = sol.alpha;
          const auto weights = sol.weights;
          const double bias = sol.bias;
          if (polish() && full_violation() >= options.tolerance) {
            sol.alpha = alpha;
            sol.weights = weights;
            sol.bias = bias;
          }
        }
        break;
      }
      // Restore every coordinate and re-check on the next pass.
      active.resize(n);
      std::iota(active.begin(), active.end(), std::size_t{0});
      shrink_above = inf;
      shrink_below = -inf;
      continue;
    }
    shrink_above = pg_max > 0.0 ? pg_max : inf;
    shrink_below = pg_min < 0.0 ? pg_min : -inf;
    if (sol.epochs != next_polish || sol.epochs >= options.max_epochs) continue;
    next_polish *= 2;
    if (polish()) {
      active.resize(n);
      std::iota(active.begin(), active.end(), std::size_t{0});
      shrink_above = inf;
      shrink_below = -inf;
    }
  }
  sol.kkt_violation = full_violation();
  sol.objective = objective();
  return sol;
}

std::vector<double> LinearModel::scores(std::span<const double> features) const {
  if (features.size() != dimension())
    throw ValidationError("feature length " + std::to_string(features.size()) +
                          " does not match model dimension " + std::to_string(dimension()));
  const auto x = scaler.transform(features);
  std::vector<double> out(classes.size());
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto w = weights.row(k);
    out[k] = std::inner_product(w.begin(), w.end(), x.begin(), 0.0) + biases[k];
  }
  return out;
}

std::size_t LinearModel::predict_index(std::span<const double> features) const {
  const auto s = scores(features);
  std::size_t best = 0;
  for (std::size_t k = 1; k < s.size(); ++k)
    if (s[k] > s[best]) best = k;
  return best;
}

LinearModel train_svm(const Dataset& data, double C, std::uint64_t seed,
                      const SolverOptions& options, TrainReport* report) {
  check_trainable(data);
  if (!(C > 0.0) || !std::isfinite(C)) throw ValidationError("C must be a positive finite value");

  LinearModel model;
  model.classes = data.classes();
  model.electrodes = data.electrodes();
  model.C = C;
  model.scaler = Scaler::fit(data);
  const Matrix x = model.scaler.transform(data);
  const auto classes = data.labels();

  model.weights = Matrix(model.classes.size(), data.dimension());
  model.biases.assign(model.classes.size(), 0.0);
  for (std::size_t k = 0; k < model.classes.size(); ++k) {
    const auto y = binary_labels(classes, k);
    auto sol = solve_dual(x, y, C, derive_seed(seed, k), options);
    std::copy(sol.weights.begin(), sol.weights.end(), model.weights.row(k).begin());
    model.biases[k] = sol.bias;
    if (report) report->per_class.push_back(std::move(sol));
  }
  return model;
}

TaskClass predict(const LinearModel& model, const FeatureVector& feature) {
  if (feature.electrodes != model.electrodes)
    throw ValidationError("feature electrodes do not match the model's electrode subset");
  return model.classes[model.predict_index(feature.values)];
}

Split stratified_split(const Dataset& data, std::uint64_t seed) {
  const auto labels = data.labels();
  Split split;
  for (std::size_t k = 0; k < data.classes().size(); ++k) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == k) members.push_back(i);
    if (members.size() < 4)
      throw ValidationError("class " + data.classes()[k].name() +
                            " needs at least 4 examples for a stratified half split");
    Rng rng(derive_seed(seed, k));
    shuffle(std::span<std::size_t>(members), rng);
    const std::size_t half = (members.size() + 1) / 2;
    split.fit.insert(split.fit.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(half));
    split.validate.insert(split.validate.end(), members.begin() + static_cast<std::ptrdiff_t>(half),
                          members.end());
  }
  std::sort(split.fit.begin(), split.fit.end());
  std::sort(split.validate.begin(), split.validate.end());
  return split;
}

TuningResult tune_hyperparameters(const Dataset& train, std::uint64_t seed,
                                  const TuningOptions& options) {
  check_trainable(train);
  if (options.c_grid.empty()) throw ValidationError("C grid is empty");
  for (double c : options.c_grid)
    if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("C grid values must be positive");

  TuningResult result;
  result.split_seed = derive_seed(seed, 1);
  const std::uint64_t solver_seed = derive_seed(seed, 2);
  const Split split = stratified_split(train, result.split_seed);
  const Dataset fit = train.subset(split.fit);
  const Dataset val = train.subset(split.validate);
  if (fit.classes() != train.classes() || val.classes() != train.classes())
    throw ValidationError("a class is missing from one half of the split");

  const Scaler scaler = Scaler::fit(fit);
  const Matrix x_fit = scaler.transform(fit);
  const Matrix x_val = scaler.transform(val);
  const auto fit_labels = fit.labels();
  const auto val_labels = val.labels();
  const std::size_t n_classes = train.classes().size();
  const std::size_t width = train.bins_per_electrode();
  const auto& names = train.electrodes();

  std::vector<std::vector<double>> targets;
  for (std::size_t k = 0; k < n_classes; ++k) targets.push_back(binary_labels(fit_labels, k));

  // Best (accuracy, C) of an electrode subset; every candidate is logged.
  auto score_subset = [&](const std::vector<std::size_t>& blocks) {
    std::vector<std::string> subset;
    for (auto e : blocks) subset.push_back(names[e]);
    const Matrix xf = select_blocks(x_fit, blocks, width);
    const Matrix xv = select_blocks(x_val, blocks, width);
    // C values are solved in ascending order, each class starting from its
    // solution at the previous C with the bounded coordinates moved to the
    // new bound.
    std::vector<std::size_t> order(options.c_grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return options.c_grid[a] < options.c_grid[b]; });
    std::vector<std::vector<double>> alphas(n_classes);
    double prev_c = 0.0;
    std::vector<double> accuracy(options.c_grid.size());
    double best_acc = -1.0;
    double best_c = 0.0;
    for (std::size_t g : order) {
      const double c = options.c_grid[g];
      Matrix scores(val.size(), n_classes);
      for (std::size_t k = 0; k < n_classes; ++k) {
        for (double& a : alphas[k])
          if (a >= prev_c) a = c;
        const auto sol =
            solve_dual(xf, targets[k], c, derive_seed(solver_seed, k), options.solver, alphas[k]);
        alphas[k] = sol.alpha;
        for (std::size_t v = 0; v < val.size(); ++v) {
          const auto row = xv.row(v);
          scores(v, k) = std::inner_product(row.begin(), row.end(), sol.weights.begin(), sol.bias);
        }
      }
      prev_c = c;
      std::size_t correct = 0;
      for (std::size_t v = 0; v < val.size(); ++v) {
        const auto row = scores.row(v);
        const auto pick =
            static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        if (pick == val_labels[v]) ++correct;
      }
      accuracy[g] = static_cast<double>(correct) / static_cast<double>(val.size());
      if (accuracy[g] > best_acc) {
        best_acc = accuracy[g];
        best_c = c;
      }
    }
    for (std::size_t g = 0; g < options.c_grid.size(); ++g)
      result.audit.push_back({subset, options.c_grid[g], accuracy[g]});
    return std::pair{best_acc, best_c};
  };

  const std::size_t limit =
      options.max_electrodes == 0 ? names.size() : std::min(options.max_electrodes, names.size());
  std::vector<bool> chosen(names.size(), false);
  double current = -1.0;
  std::size_t picked = 0;
  while (picked < limit) {
    std::size_t best_e = names.size();
    double best_acc = -1.0;
    double best_c = 0.0;
    for (std::size_t e = 0; e < names.size(); ++e) {
      if (chosen[e]) continue;
      std::vector<std::size_t> blocks;
      for (std::size_t j = 0; j < names.size(); ++j)
        if (chosen[j] || j == e) blocks.push_back(j);
      const auto [acc, c] = score_subset(blocks);
      if (acc > best_acc) {
        best_acc = acc;
        best_c = c;
        best_e = e;
      }
    }
    if (best_e == names.size() || best_acc <= current) break;
    chosen[best_e] = true;
    ++picked;
    current = best_acc;
    result.C = best_c;
    result.validation_accuracy = best_acc;
  }

  for (std::size_t e = 0; e < names.size(); ++e)
    if (chosen[e]) result.electrodes.push_back(names[e]);
  result.model =
      train_svm(train.select(result.electrodes), result.C, solver_seed, options.final_solver);
  return result;
}

}  // namespace vibci
