#pragma once

// Reference computations used only by the tests. They share no code with the
// library paths they check.

#include <cmath>
#include <cstddef>
#include <vector>

namespace bimh::oracle {

// Expected per-position occupancy of one IMH chain over p steps, by summing
// over all 2^p accept/reject patterns. weights are linear-scale w_0..w_p in
// chain order; position 0 is the start and time 0 is not counted.
inline std::vector<double> enumerate_occupancy(const std::vector<double>& weights) {
  const std::size_t p = weights.size() - 1;
  std::vector<double> occ(p + 1, 0.0);
  for (unsigned long mask = 0; mask < (1UL << p); ++mask) {
    double prob = 1.0;
    std::size_t cur = 0;
    std::vector<double> count(p + 1, 0.0);
    for (std::size_t t = 1; t <= p; ++t) {
      const double ratio = weights[t] / weights[cur];
      const double rho = ratio < 1.0 ? ratio : 1.0;
      if (mask & (1UL << (t - 1))) {
        prob *= rho;
        cur = t;
      } else {
        prob *= 1.0 - rho;
      }
      count[cur] += 1.0;
    }
    if (prob == 0.0) continue;
    for (std::size_t k = 0; k <= p; ++k) occ[k] += prob * count[k];
  }
  return occ;
}

// Standard normal cdf from its Taylor series,
//   Phi(x) = 1/2 + phi(x) sum_k x^(2k+1) / (1 * 3 * ... * (2k+1)),
// accurate for moderate |x|.
inline double normal_cdf_series(double x) {
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  double term = x, sum = x;
  for (int k = 1; k < 200; ++k) {
    term *= x * x / (2.0 * k + 1.0);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return 0.5 + pdf * sum;
}

// Five-point central difference.
template <typename F>
double derivative(F&& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

}  // namespace bimh::oracle
