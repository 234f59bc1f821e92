#pragma once

// Allocation-free mixture responsibilities, shared by targets and flow.

#include <cmath>

#include "gif/targets.hpp"

namespace gif::detail {

/// resp_j proportional to w_j N(x; b mu_j, c2 I), normalised by log-sum-exp.
/// Writes sum_j resp_j mu_j into mubar and returns log sum_j w_j N(...).
inline double mixture_responsibilities(const Target& tg, double b, double c2, const double* x,
                                       double* resp, double* mubar) {
  const int K = tg.components(), d = tg.dim();
  const Mat& mu = tg.means();
  const Vec& lw = tg.log_weights();
  double mx = -INFINITY;
  for (int j = 0; j < K; ++j) {
    double q = 0.0;
    for (int k = 0; k < d; ++k) {
      const double r = x[k] - b * mu(j, k);
      q += r * r;
    }
    resp[j] = lw(j) - q / (2.0 * c2);
    if (resp[j] > mx) mx = resp[j];
  }
  double tot = 0.0;
  for (int j = 0; j < K; ++j) {
    resp[j] = std::exp(resp[j] - mx);
    tot += resp[j];
  }
  for (int k = 0; k < d; ++k) mubar[k] = 0.0;
  for (int j = 0; j < K; ++j) {
    resp[j] /= tot;
    for (int k = 0; k < d; ++k) mubar[k] += resp[j] * mu(j, k);
  }
  return mx + std::log(tot) - 0.5 * d * std::log(2.0 * M_PI * c2);
}

}  // namespace gif::detail
