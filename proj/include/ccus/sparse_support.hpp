#pragma once

#include <cstdint>
#include <vector>

#include "ccus/core.hpp"
#include "ccus/signal_model.hpp"

namespace ccus {

/// Minimizes (1/2N)||y - D b||^2 + lambda ||b||_1.
struct LassoConfig {
  double lambda = 0.0;
  int max_iter = 10'000;  ///< full coordinate sweeps
  double tol = 1e-7;      ///< KKT residual at which the solver stops
};

struct LassoResult {
  Vector coefficients;
  double kkt_residual = 0.0;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> objective_per_sweep;
};

/// Samples summed over channels. Shuffle-invariant, since a shuffle only
/// permutes values within a row.
Vector channel_sum(const MultiChannelSignal& y);

/// ||D^T y||_inf / N: the smallest lambda with an all-zero solution.
double lambda_max(const Matrix& dict, const Vector& y);

/// `count` log-spaced values from hi down to hi * ratio.
std::vector<double> log_grid(double hi, double ratio, int count);

/// max_j of the subgradient optimality violation at `beta`, computed directly
/// from the residual y - D beta.
double lasso_kkt_residual(const Matrix& dict, const Vector& y,
                          const Vector& beta, double lambda);

/// Cyclic coordinate descent. Columns are normalized to unit length internally
/// (with the penalty rescaled so the problem is unchanged) and coefficients are
/// reported on the original scale. A run that hits max_iter is returned with
/// converged = false and its final KKT residual.
LassoResult lasso(const Matrix& dict, const Vector& y, const LassoConfig& cfg);

/// Solutions along a strictly decreasing lambda sequence. The exact
/// piecewise-linear path (homotopy) is followed through the grid; any point
/// whose KKT residual exceeds tol is finished by warm-started coordinate
/// descent, as is the tail of the grid once the active set reaches N columns.
std::vector<LassoResult> lasso_path(const Matrix& dict, const Vector& y,
                                    const std::vector<double>& lambdas,
                                    int max_iter, double tol);

struct StabilityConfig {
  int n_subsamples = 100;
  double subsample_fraction = 0.5;
  /// Strictly decreasing. Empty selects 50 log-spaced values from lambda_max
  /// of the full data down to 1e-3 of it.
  std::vector<double> lambda_grid;
  double threshold = 0.7;
  std::uint64_t seed = 0;
  /// Inner solver stopping rule, relative to lambda_max of the full data.
  double lasso_tol_rel = 1e-5;
  int lasso_max_iter = 2'000;
};

struct SupportEstimate {
  std::vector<int> indices;  ///< sorted
  Vector selection_probabilities;
  Matrix sensing_matrix;     ///< columns of D at `indices`
  bool truncated = false;    ///< more than N indices passed; kept the N most stable
};

/// Thrown when no column reaches the selection threshold.
class EmptySupportError : public Error {
 public:
  explicit EmptySupportError(Vector probabilities)
      : Error(ErrorKind::numerical,
              "stability selection kept no dictionary column"),
        probabilities_(std::move(probabilities)) {}
  const Vector& probabilities() const noexcept { return probabilities_; }

 private:
  Vector probabilities_;
};

/// Selection probability of column j is the maximum over the lambda grid of the
/// share of subsamples whose lasso solution has a nonzero j-th coefficient.
SupportEstimate stability_select(const Matrix& dict, const Vector& y,
                                 const StabilityConfig& cfg, int jobs = 1);

/// Columns of `dict` at `indices`.
Matrix select_columns(const Matrix& dict, const std::vector<int>& indices);

}  // namespace ccus
