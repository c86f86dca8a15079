#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace testing {

/// Ridge by plain gradient descent on ||y - Zw - b||^2 + lambda ||w||^2,
/// Z the centered and population-std scaled design. Rows of x are samples.
/// Returns w on the scaled features (the intercept is not returned).
inline std::vector<double> gd_ridge(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                                    double lambda, bool standardize = true, bool intercept = true) {
  const std::size_t n = x.size(), f = x[0].size();
  std::vector<std::vector<double>> z = x;
  for (std::size_t j = 0; j < f; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x[i][j];
    mean = intercept ? mean / static_cast<double>(n) : 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (x[i][j] - mean) * (x[i][j] - mean);
    double sd = standardize ? std::sqrt(var / static_cast<double>(n)) : 1.0;
    if (sd <= 1e-12) sd = 1.0;
    for (std::size_t i = 0; i < n; ++i) z[i][j] = (x[i][j] - mean) / sd;
  }

  // Lipschitz bound from the Frobenius norm of the augmented design.
  double lip = lambda;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j) lip += z[i][j] * z[i][j];
  }
  if (intercept) lip += static_cast<double>(n);
  const double step = 1.0 / (2.0 * lip);

  std::vector<double> w(f, 0.0), grad(f), r(n);
  double b = 0.0;
  for (int it = 0; it < 2000000; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double p = b;
      for (std::size_t j = 0; j < f; ++j) p += z[i][j] * w[j];
      r[i] = p - y[i];
    }
    double gnorm = 0.0, gb = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
      double g = 2.0 * lambda * w[j];
      for (std::size_t i = 0; i < n; ++i) g += 2.0 * z[i][j] * r[i];
      grad[j] = g;
      gnorm = std::max(gnorm, std::abs(g));
    }
    if (intercept) {
      for (std::size_t i = 0; i < n; ++i) gb += 2.0 * r[i];
      gnorm = std::max(gnorm, std::abs(gb));
    }
    if (gnorm < 1e-12) break;
    for (std::size_t j = 0; j < f; ++j) w[j] -= step * grad[j];
    b -= step * gb;
  }
  return w;
}

/// Sort-based 75th percentile with inclusive linear interpolation.
template <class T>
double naive_p75(std::vector<T> values) {
  std::sort(values.begin(), values.end());
  const double pos = 0.75 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return static_cast<double>(values[lo]) + frac * (static_cast<double>(values[hi]) - static_cast<double>(values[lo]));
}

}  // namespace testing
