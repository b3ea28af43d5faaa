#pragma once

#include <vector>

#include "ccus/core.hpp"

namespace ccus {

/// Asymmetric least squares smoothing (Whittaker smoother with asymmetric
/// weights).
struct AlsConfig {
  double smoothness_lambda = 1e5;
  double asymmetry_p = 0.01;  ///< weight for points above the baseline
  int n_iter = 10;
};

struct AlsResult {
  Vector baseline;
  Vector corrected;  ///< y - baseline
  Vector weights;    ///< weights used by the last solve
  /// Penalized objective under each iteration's weights, evaluated at the
  /// incoming and at the freshly solved baseline.
  std::vector<double> objective_before;
  std::vector<double> objective_after;
};

/// sum w_i (y_i - z_i)^2 + lambda * sum (second difference of z)^2
double als_objective(const Vector& y, const Vector& z, const Vector& w, double lambda);

/// Each iteration solves (W + lambda D'D) z = W y, then sets w_i = p where
/// y_i > z_i and 1 - p elsewhere. Starts from unit weights.
AlsResult als_baseline(const Vector& y, const AlsConfig& cfg);

}  // namespace ccus
