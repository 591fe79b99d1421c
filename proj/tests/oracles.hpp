// Reference computations the unit tests compare the library against. Nothing
// here calls into the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace oracle {

/// Prewarped analog frequency of a digital frequency under the bilinear map.
inline double warp(double hz, double rate) { return std::tan(std::numbers::pi * hz / rate); }

/// Closed-form Butterworth magnitude of a bilinear-transformed design.
inline double butter_lowpass(int order, double fc, double rate, double hz) {
  const double r = warp(hz, rate) / warp(fc, rate);
  return 1.0 / std::sqrt(1.0 + std::pow(r, 2 * order));
}

inline double butter_bandpass(int order, double lo, double hi, double rate, double hz) {
  const double w1 = warp(lo, rate), w2 = warp(hi, rate), w = warp(hz, rate);
  const double r = (w * w - w1 * w2) / (w * (w2 - w1));
  return 1.0 / std::sqrt(1.0 + std::pow(r, 2 * order));
}

inline double butter_bandstop(int order, double lo, double hi, double rate, double hz) {
  const double w1 = warp(lo, rate), w2 = warp(hi, rate), w = warp(hz, rate);
  const double r = (w * (w2 - w1)) / (w * w - w1 * w2);
  return 1.0 / std::sqrt(1.0 + std::pow(r, 2 * order));
}

/// Gaussian elimination with partial pivoting; nullopt when singular.
inline std::optional<std::vector<double>> solve(std::vector<std::vector<double>> a,
                                                std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (std::abs(a[p][c]) < 1e-12) return std::nullopt;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Linear SVM with regularized bias, solved by enumeration: every split of
/// the points into {alpha = 0, alpha = C, free} with at most d+1 free points
/// yields a candidate (w, b) from the free points' equality system, and the
/// candidate with the lowest primal objective wins. For points in general
/// position the optimum is always among the candidates.
struct SvmSolution {
  std::vector<double> w;
  double b = 0.0;
  double primal = 0.0;
  double decision(const std::vector<double>& x) const {
    double s = b;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * x[j];
    return s;
  }
};

inline double svm_primal(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                         double C, const std::vector<double>& w, double b) {
  double obj = 0.5 * b * b;
  for (double v : w) obj += 0.5 * v * v;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double f = b;
    for (std::size_t j = 0; j < w.size(); ++j) f += w[j] * x[i][j];
    obj += C * std::max(0.0, 1.0 - y[i] * f);
  }
  return obj;
}

inline SvmSolution brute_force_svm(const std::vector<std::vector<double>>& x,
                                   const std::vector<double>& y, double C) {
  const std::size_t n = x.size();
  const std::size_t d = x.front().size();
  auto kernel = [&](std::size_t i, std::size_t j) {
    double s = 1.0;
    for (std::size_t k = 0; k < d; ++k) s += x[i][k] * x[j][k];
    return y[i] * y[j] * s;
  };
  SvmSolution best;
  best.primal = std::numeric_limits<double>::infinity();
  std::size_t patterns = 1;
  for (std::size_t i = 0; i < n; ++i) patterns *= 3;
  for (std::size_t code = 0; code < patterns; ++code) {
    std::vector<int> state(n);  // 0: alpha = 0, 1: alpha = C, 2: free
    std::vector<std::size_t> free;
    for (std::size_t i = 0, c = code; i < n; ++i, c /= 3) {
      state[i] = static_cast<int>(c % 3);
      if (state[i] == 2) free.push_back(i);
    }
    if (free.size() > d + 1) continue;
    std::vector<double> alpha(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (state[i] == 1) alpha[i] = C;
    if (!free.empty()) {
      std::vector<std::vector<double>> q(free.size(), std::vector<double>(free.size()));
      std::vector<double> rhs(free.size(), 1.0);
      for (std::size_t a = 0; a < free.size(); ++a) {
        for (std::size_t b = 0; b < free.size(); ++b) q[a][b] = kernel(free[a], free[b]);
        for (std::size_t i = 0; i < n; ++i)
          if (state[i] == 1) rhs[a] -= kernel(free[a], i) * C;
      }
      auto sol = solve(q, rhs);
      if (!sol) continue;
      for (std::size_t a = 0; a < free.size(); ++a) alpha[free[a]] = (*sol)[a];
    }
    std::vector<double> w(d, 0.0);
    double b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) w[k] += alpha[i] * y[i] * x[i][k];
      b += alpha[i] * y[i];
    }
    const double p = svm_primal(x, y, C, w, b);
    if (p < best.primal) best = {w, b, p};
  }
  return best;
}

/// Least-squares slope and intercept of y on x.
struct Line {
  double slope = 0.0;
  double intercept = 0.0;
};

inline Line fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Population variance.
inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

/// Lag in [-max_lag, max_lag] maximizing sum a[t] * b[t + lag].
inline int peak_lag(const std::vector<double>& a, const std::vector<double>& b, int max_lag) {
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(a.size());
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (int t = 0; t < n; ++t)
      if (t + lag >= 0 && t + lag < n) s += a[t] * b[t + lag];
    if (s > best_value) {
      best_value = s;
      best = lag;
    }
  }
  return best;
}

/// log2-based Wolpaw bits per trial.
inline double wolpaw_bits(double n, double p) {
  if (p >= 1.0) return std::log2(n);
  if (p <= 0.0) return std::log2(n) + std::log2(1.0 / (n - 1.0));
  return std::log2(n) + p * std::log2(p) + (1 - p) * std::log2((1 - p) / (n - 1));
}

}  // namespace oracle
