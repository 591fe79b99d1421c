#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vibci/matrix.hpp"
#include "vibci/signal_model.hpp"

namespace vibci {

/// One-sided power spectral density, one row per channel, in µV²/Hz.
struct PsdEstimate {
  std::vector<double> freqs;          // ascending, uniform spacing, freqs[0] == 0
  Matrix power;                       // [channels x freqs.size()]
  std::vector<std::string> channels;  // row names

  double resolution() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
};

struct WelchParams {
  std::size_t seg_len = 512;
  double overlap = 0.5;

  friend bool operator==(const WelchParams&, const WelchParams&) = default;
};

/// Welch estimate: mean-removed, periodic-Hann-tapered segments of `seg_len`
/// samples stepping by seg_len - floor(overlap * seg_len), averaged
/// periodograms scaled so the PSD integrates to the signal variance.
/// Throws ValidationError if seg_len < 8, seg_len > N, or overlap outside [0, 1).
PsdEstimate welch_psd(const Matrix& segment, double rate, WelchParams params,
                      std::vector<std::string> channel_names = {});

struct Band {
  double lo = 2.0;
  double hi = 36.0;

  friend bool operator==(const Band&, const Band&) = default;
};

/// PSD bins with lo <= f <= hi, concatenated electrode-major.
struct FeatureVector {
  std::vector<double> values;
  TaskClass label;
  std::vector<std::string> electrodes;
};

/// Indices of psd.freqs inside the band. Throws ValidationError if the band
/// is inverted, leaves the grid, or contains no bin.
std::pair<std::size_t, std::size_t> band_bins(std::span<const double> freqs, Band band);

/// Features for the requested electrodes, reordered to the PSD's channel order.
/// Throws ValidationError for an empty or unknown electrode subset.
FeatureVector extract_features(const PsdEstimate& psd, Band band,
                               std::span<const std::string> electrodes, const TaskClass& label);

/// Labeled feature matrix with a canonical class index.
class Dataset {
public:
  Dataset(std::vector<FeatureVector> features, Band band, double bin_width);

  const std::vector<FeatureVector>& features() const noexcept { return features_; }
  std::size_t size() const noexcept { return features_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t bins_per_electrode() const noexcept { return bins_per_electrode_; }
  const std::vector<std::string>& electrodes() const noexcept { return electrodes_; }
  Band band() const noexcept { return band_; }
  double bin_width() const noexcept { return bin_width_; }

  /// Classes present, in canonical order; index() maps a label into it.
  const std::vector<TaskClass>& classes() const noexcept { return classes_; }
  std::size_t index(const TaskClass& label) const;
  std::vector<std::size_t> labels() const;

  /// Same examples restricted to a subset of electrodes (kept in the
  /// dataset's electrode order).
  Dataset select(std::span<const std::string> electrodes) const;

  /// Examples at the given positions; the class index is recomputed.
  Dataset subset(std::span<const std::size_t> rows) const;

  /// Examples from both datasets; throws on electrode or band mismatch.
  static Dataset concat(const Dataset& a, const Dataset& b);

private:
  std::vector<FeatureVector> features_;
  Band band_;
  double bin_width_;
  std::size_t dimension_ = 0;
  std::size_t bins_per_electrode_ = 0;
  std::vector<std::string> electrodes_;
  std::vector<TaskClass> classes_;
};

struct LabeledPsd {
  PsdEstimate psd;
  TaskClass label;
};

struct PsdCurve {
  std::vector<double> freqs;
  std::vector<double> power;
};

/// Mean PSD of one electrode across all trials carrying `label`, summed in
/// input order. Throws ValidationError if no trial matches.
PsdCurve average_psd_by_class(std::span<const LabeledPsd> trials, const TaskClass& label,
                              const std::string& electrode);

}  // namespace vibci
