#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tomcat/core/rng.hpp"

namespace tomcat {

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty sample");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double stddev_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// Normal-approximation 95% confidence half-width for the mean.
inline double ci95_halfwidth(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  return 1.96 * stddev_of(xs) / std::sqrt(static_cast<double>(xs.size()));
}

// One-sided bootstrap p-value for the hypothesis mean(a) < mean(b):
// fraction of resampled mean differences with mean(a*) >= mean(b*).
inline double bootstrap_p_less(const std::vector<double>& a, const std::vector<double>& b,
                               int n_boot, uint64_t seed) {
  Rng rng(seed);
  int count = 0;
  for (int it = 0; it < n_boot; ++it) {
    double ma = 0, mb = 0;
    for (size_t i = 0; i < a.size(); ++i) ma += a[rng.uniform_int(static_cast<int>(a.size()))];
    for (size_t i = 0; i < b.size(); ++i) mb += b[rng.uniform_int(static_cast<int>(b.size()))];
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    if (ma >= mb) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(n_boot);
}

}  // namespace tomcat
