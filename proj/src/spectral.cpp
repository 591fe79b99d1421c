#include "vibci/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "vibci/error.hpp"
#include "vibci/fft.hpp"

namespace vibci {

namespace {
constexpr double kFreqTol = 1e-9;
}

PsdEstimate welch_psd(const Matrix& segment, double rate, WelchParams params,
                      std::vector<std::string> channel_names) {
  const std::size_t n = segment.cols();
  const std::size_t len = params.seg_len;
  if (len < 8) throw ValidationError("Welch segment length must be at least 8 samples");
  if (len > n)
    throw ValidationError("Welch segment length " + std::to_string(len) + " exceeds signal length " +
                          std::to_string(n));
  if (!(params.overlap >= 0.0 && params.overlap < 1.0))
    throw ValidationError("Welch overlap must be in [0, 1)");
  if (!(rate > 0.0)) throw ValidationError("sampling rate must be > 0");
  if (channel_names.empty()) {
    for (std::size_t ch = 0; ch < segment.rows(); ++ch)
      channel_names.push_back("ch" + std::to_string(ch));
  } else if (channel_names.size() != segment.rows()) {
    throw ValidationError("channel name count does not match segment rows");
  }

  const auto noverlap = static_cast<std::size_t>(std::floor(params.overlap * static_cast<double>(len)));
  const std::size_t step = len - noverlap;
  const std::size_t n_segments = (n - len) / step + 1;

  std::vector<double> window(len);
  double window_power = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(len));
    window_power += window[i] * window[i];
  }

  RealFft fft(len);
  const std::size_t bins = fft.bins();
  std::vector<double> buffer(len);
  std::vector<std::complex<double>> spectrum(bins);

  PsdEstimate psd;
  psd.freqs.resize(bins);
  for (std::size_t k = 0; k < bins; ++k)
    psd.freqs[k] = static_cast<double>(k) * rate / static_cast<double>(len);
  psd.power = Matrix(segment.rows(), bins);
  psd.channels = std::move(channel_names);

  const double scale = 1.0 / (rate * window_power * static_cast<double>(n_segments));
  for (std::size_t ch = 0; ch < segment.rows(); ++ch) {
    const auto x = segment.row(ch);
    auto out = psd.power.row(ch);
    for (std::size_t s = 0; s < n_segments; ++s) {
      const auto piece = x.subspan(s * step, len);
      double mean = 0.0;
      for (double v : piece) mean += v;
      mean /= static_cast<double>(len);
      for (std::size_t i = 0; i < len; ++i) buffer[i] = (piece[i] - mean) * window[i];
      fft.forward(buffer, spectrum);
      for (std::size_t k = 0; k < bins; ++k) out[k] += std::norm(spectrum[k]);
    }
    for (std::size_t k = 0; k < bins; ++k) {
      const bool unpaired = k == 0 || (len % 2 == 0 && k == bins - 1);
      out[k] *= unpaired ? scale : 2.0 * scale;
    }
  }
  return psd;
}

std::pair<std::size_t, std::size_t> band_bins(std::span<const double> freqs, Band band) {
  if (!(band.lo <= band.hi)) throw ValidationError("band must satisfy lo <= hi");
  if (freqs.empty() || band.lo < freqs.front() - kFreqTol || band.hi > freqs.back() + kFreqTol)
    throw ValidationError("band lies outside the PSD frequency grid");
  std::size_t first = freqs.size();
  std::size_t last = 0;
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    if (freqs[k] >= band.lo - kFreqTol && freqs[k] <= band.hi + kFreqTol) {
      first = std::min(first, k);
      last = k + 1;
    }
  }
  if (first >= last) throw ValidationError("band contains no PSD bin");
  return {first, last};
}

FeatureVector extract_features(const PsdEstimate& psd, Band band,
                               std::span<const std::string> electrodes, const TaskClass& label) {
  if (electrodes.empty()) throw ValidationError("electrode subset is empty");
  std::vector<std::size_t> rows;
  for (const auto& name : electrodes) {
    auto it = std::find(psd.channels.begin(), psd.channels.end(), name);
    if (it == psd.channels.end()) throw ValidationError("electrode '" + name + "' not in the PSD");
    rows.push_back(static_cast<std::size_t>(it - psd.channels.begin()));
  }
  std::sort(rows.begin(), rows.end());
  if (std::adjacent_find(rows.begin(), rows.end()) != rows.end())
    throw ValidationError("electrode subset has duplicates");

  const auto [first, last] = band_bins(psd.freqs, band);
  FeatureVector fv;
  fv.label = label;
  fv.values.reserve(rows.size() * (last - first));
  for (auto r : rows) {
    const auto row = psd.power.row(r);
    fv.values.insert(fv.values.end(), row.begin() + static_cast<std::ptrdiff_t>(first),
                     row.begin() + static_cast<std::ptrdiff_t>(last));
    fv.electrodes.push_back(psd.channels[r]);
  }
  return fv;
}

Dataset::Dataset(std::vector<FeatureVector> features, Band band, double bin_width)
    : features_(std::move(features)), band_(band), bin_width_(bin_width) {
  if (features_.empty()) throw ValidationError("dataset is empty");
  electrodes_ = features_.front().electrodes;
  dimension_ = features_.front().values.size();
  if (electrodes_.empty() || dimension_ % electrodes_.size() != 0)
    throw ValidationError("feature length is not a multiple of the electrode count");
  bins_per_electrode_ = dimension_ / electrodes_.size();
  for (const auto& fv : features_) {
    if (fv.values.size() != dimension_ || fv.electrodes != electrodes_)
      throw ValidationError("dataset mixes feature layouts");
    for (double v : fv.values)
      if (!std::isfinite(v)) throw ValidationError("dataset contains a non-finite feature");
    if (std::find(classes_.begin(), classes_.end(), fv.label) == classes_.end())
      classes_.push_back(fv.label);
  }
  std::sort(classes_.begin(), classes_.end(), canonical_less);
}

std::size_t Dataset::index(const TaskClass& label) const {
  auto it = std::find(classes_.begin(), classes_.end(), label);
  if (it == classes_.end()) throw ValidationError("class " + label.name() + " not in dataset");
  return static_cast<std::size_t>(it - classes_.begin());
}

std::vector<std::size_t> Dataset::labels() const {
  std::vector<std::size_t> out;
  out.reserve(features_.size());
  for (const auto& fv : features_) out.push_back(index(fv.label));
  return out;
}

Dataset Dataset::select(std::span<const std::string> electrodes) const {
  if (electrodes.empty()) throw ValidationError("electrode subset is empty");
  std::vector<std::size_t> blocks;
  for (std::size_t e = 0; e < electrodes_.size(); ++e)
    if (std::find(electrodes.begin(), electrodes.end(), electrodes_[e]) != electrodes.end())
      blocks.push_back(e);
  if (blocks.size() != electrodes.size())
    throw ValidationError("electrode subset is not contained in the dataset");

  std::vector<FeatureVector> out;
  out.reserve(features_.size());
  for (const auto& fv : features_) {
    FeatureVector sub;
    sub.label = fv.label;
    sub.values.reserve(blocks.size() * bins_per_electrode_);
    for (auto e : blocks) {
      const auto begin = fv.values.begin() + static_cast<std::ptrdiff_t>(e * bins_per_electrode_);
      sub.values.insert(sub.values.end(), begin,
                        begin + static_cast<std::ptrdiff_t>(bins_per_electrode_));
      sub.electrodes.push_back(electrodes_[e]);
    }
    out.push_back(std::move(sub));
  }
  return Dataset(std::move(out), band_, bin_width_);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<FeatureVector> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(features_.at(r));
  return Dataset(std::move(out), band_, bin_width_);
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
  if (a.electrodes_ != b.electrodes_ || !(a.band_ == b.band_) || a.bin_width_ != b.bin_width_)
    throw ValidationError("cannot concatenate datasets with different feature layouts");
  auto all = a.features_;
  all.insert(all.end(), b.features_.begin(), b.features_.end());
  return Dataset(std::move(all), a.band_, a.bin_width_);
}

PsdCurve average_psd_by_class(std::span<const LabeledPsd> trials, const TaskClass& label,
                              const std::string& electrode) {
  PsdCurve curve;
  std::size_t count = 0;
  for (const auto& t : trials) {
    if (!(t.label == label)) continue;
    auto it = std::find(t.psd.channels.begin(), t.psd.channels.end(), electrode);
    if (it == t.psd.channels.end())
      throw ValidationError("electrode '" + electrode + "' not in the PSD");
    const auto row = t.psd.power.row(static_cast<std::size_t>(it - t.psd.channels.begin()));
    if (count == 0) {
      curve.freqs = t.psd.freqs;
      curve.power.assign(row.begin(), row.end());
    } else {
      if (t.psd.freqs != curve.freqs) throw ValidationError("PSD frequency grids differ");
      for (std::size_t k = 0; k < row.size(); ++k) curve.power[k] += row[k];
    }
    ++count;
  }
  if (count == 0) throw ValidationError("no trials of class " + label.name());
  for (double& p : curve.power) p /= static_cast<double>(count);
  return curve;
}

}  // namespace vibci
