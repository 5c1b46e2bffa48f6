#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>

namespace expoarb::stats {

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail P[U > x].
inline double normal_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;        // sample standard deviation / sqrt(n)
  double variance = 0.0;  // unbiased sample variance
  std::size_t n = 0;
};

/// Two-pass mean / variance in index order, so the result does not depend on
/// how the samples were produced.
inline MeanEstimate mean_estimate(std::span<const double> xs) {
  MeanEstimate out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.variance = ss / static_cast<double>(xs.size() - 1);
  out.se = std::sqrt(out.variance / static_cast<double>(xs.size()));
  return out;
}

}  // namespace expoarb::stats
