#include "vibci/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "vibci/error.hpp"

namespace vibci {

ConfusionMatrix::ConfusionMatrix(std::vector<TaskClass> cls) : classes(std::move(cls)) {
  std::sort(classes.begin(), classes.end(), canonical_less);
  counts.assign(classes.size(), std::vector<std::size_t>(classes.size(), 0));
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts)
    for (auto c : row) n += c;
  return n;
}

std::size_t ConfusionMatrix::correct() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
  return n;
}

double ConfusionMatrix::accuracy() const {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(n);
}

std::size_t ConfusionMatrix::index(const TaskClass& label) const {
  auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) throw ValidationError("class " + label.name() + " not in confusion matrix");
  return static_cast<std::size_t>(it - classes.begin());
}

void ConfusionMatrix::add(const TaskClass& truth, const TaskClass& predicted) {
  ++counts[index(truth)][index(predicted)];
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (classes != other.classes) throw ValidationError("confusion matrices cover different classes");
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (std::size_t j = 0; j < counts.size(); ++j) counts[i][j] += other.counts[i][j];
  return *this;
}

Evaluation evaluate(const LinearModel& model, const Dataset& test) {
  if (test.size() == 0) throw ValidationError("test set is empty");
  if (test.electrodes() != model.electrodes || test.dimension() != model.dimension())
    throw ValidationError("test features do not match the model's electrode subset");
  auto classes = model.classes;
  for (const auto& c : test.classes())
    if (std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);
  Evaluation ev{0.0, ConfusionMatrix(std::move(classes))};
  for (const auto& fv : test.features())
    ev.confusion.add(fv.label, model.classes[model.predict_index(fv.values)]);
  ev.accuracy = ev.confusion.accuracy();
  return ev;
}

Bitrate wolpaw_bitrate(std::size_t n_classes, double accuracy, double trial_seconds) {
  if (n_classes < 2) throw ValidationError("bit-rate needs at least two classes");
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw ValidationError("accuracy must be in [0, 1]");
  if (!(trial_seconds > 0.0) || !std::isfinite(trial_seconds))
    throw ValidationError("trial duration must be > 0");

  const auto n = static_cast<double>(n_classes);
  Bitrate out;
  if (accuracy < 1.0 / n) {
    out.below_chance = true;
    return out;
  }
  double bits = std::log2(n);
  if (accuracy > 0.0) bits += accuracy * std::log2(accuracy);
  if (accuracy < 1.0) bits += (1.0 - accuracy) * std::log2((1.0 - accuracy) / (n - 1.0));
  out.bits_per_trial = std::max(bits, 0.0);
  out.bits_per_minute = out.bits_per_trial * 60.0 / trial_seconds;
  return out;
}

Interval binomial_ci95(double p, std::size_t n) {
  const double half = 1.959963984540054 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  return {p - half, p + half};
}

void write_confusion(std::ostream& out, const ConfusionMatrix& matrix, const std::string& title) {
  std::size_t width = 5;
  for (const auto& c : matrix.classes) width = std::max(width, c.name().size());
  width += 2;
  out << "# " << title << " (rows: true, columns: predicted)\n";
  out << std::setw(static_cast<int>(width)) << "";
  for (const auto& c : matrix.classes) out << std::setw(static_cast<int>(width)) << c.name();
  out << '\n';
  for (std::size_t i = 0; i < matrix.classes.size(); ++i) {
    out << std::setw(static_cast<int>(width)) << matrix.classes[i].name();
    for (auto v : matrix.counts[i]) out << std::setw(static_cast<int>(width)) << v;
    out << '\n';
  }
}

}  // namespace vibci
