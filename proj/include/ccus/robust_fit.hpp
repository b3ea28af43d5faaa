#pragma once

#include <cstdint>
#include <optional>

#include "ccus/core.hpp"

namespace ccus {

/// Tukey bisquare rho normalized to a maximum of 1.
double bisquare_rho(double u, double c);
/// IRLS weight psi(u)/u up to a constant: (1 - (u/c)^2)^2 inside [-c, c], 0 outside.
double bisquare_weight(double u, double c);

/// Right-hand side of the M-scale equation. With c = 1.548 the scale is
/// consistent for Gaussian errors at 50% breakdown.
inline constexpr double kScaleDelta = 0.5;

struct MmConfig {
  int s_subsamples = 500;          ///< random starting subsets for the S-stage
  int s_refine_best = 5;           ///< candidates refined to convergence
  int s_concentration_steps = 2;   ///< IRLS steps applied to every candidate
  double bisquare_c_scale = 1.548;
  double bisquare_c_eff = 4.685;
  int max_irls_iter = 100;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  /// The design is block diagonal with this many equal blocks (I_m (x) E).
  /// Starting subsets are then drawn and conditioned block by block.
  int diagonal_blocks = 1;
  /// Starting subsets, concentration steps and MM steps must keep at least
  /// this share of every coefficient direction's full-design energy (the
  /// smallest generalized eigenvalue of A'WA against A'A, per block). Stops
  /// the fit from discarding the few rows that pin a localized direction.
  /// 0 disables the check.
  double min_direction_share = 0.02;
};

struct RobustFit {
  Vector coefficients;
  double scale = 0.0;
  Vector weights;  ///< final bisquare weights at c_eff, in [0, 1]
  bool converged = false;
  int irls_iterations = 0;
};

/// Solves (1/n) sum rho(r_i / s; c) = delta for s by fixed-point iteration.
/// Returns 0 when the residuals vanish, or when so many vanish that no
/// positive root exists.
double m_scale(const Vector& residuals, double c, double tol = 1e-12,
               double delta = kScaleDelta);

/// MM-estimate of b ~ A beta. The S-stage draws random row subsets, starting
/// from q rows and adding rows until the subset is well conditioned (an
/// elemental subset when q rows suffice), solves each by least squares,
/// concentrates it with a few IRLS steps, refines the
/// best few to convergence and keeps the one with the smallest M-scale
/// (ties go to fewer nonzero residuals, then the earlier candidate). The
/// MM-stage then runs bisquare IRLS at c_eff with that scale held fixed; a
/// zero scale means an exact fit of most rows, which is returned as is. `start`, when given, joins the candidate
/// pool ahead of the random subsets.
RobustFit mm_estimate(const Matrix& a, const Vector& b, const MmConfig& cfg,
                      const std::optional<Vector>& start = std::nullopt);

/// Kronecker product I_m (x) E: m copies of E along the diagonal.
Matrix stacked_design(const Matrix& e_hat, Index m);

/// Ordinary least squares through a rank-revealing QR.
Vector least_squares(const Matrix& a, const Vector& b);

}  // namespace ccus
