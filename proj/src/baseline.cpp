#include "ccus/baseline.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace ccus {

namespace {

Eigen::SparseMatrix<double> second_difference(Index n) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(3 * (n - 2)));
  for (Index i = 0; i + 2 < n; ++i) {
    t.emplace_back(i, i, 1.0);
    t.emplace_back(i, i + 1, -2.0);
    t.emplace_back(i, i + 2, 1.0);
  }
  Eigen::SparseMatrix<double> d(n - 2, n);
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

Vector second_diff(const Vector& z) {
  const Index n = z.size();
  return z.head(n - 2) - 2.0 * z.segment(1, n - 2) + z.tail(n - 2);
}

}  // namespace

double als_objective(const Vector& y, const Vector& z, const Vector& w, double lambda) {
  return w.dot((y - z).cwiseAbs2()) + lambda * second_diff(z).squaredNorm();
}

AlsResult als_baseline(const Vector& y, const AlsConfig& cfg) {
  const Index n = y.size();
  if (n < 3) fail_data("ALS baseline needs at least 3 samples");
  if (!y.allFinite()) fail_data("ALS input must be finite");
  if (!(cfg.smoothness_lambda > 0.0)) fail_config("ALS lambda must be positive");
  if (!(cfg.asymmetry_p > 0.0 && cfg.asymmetry_p < 1.0))
    fail_config("ALS asymmetry p must lie in (0, 1)");
  if (cfg.n_iter < 1) fail_config("ALS needs at least one iteration");

  const auto d = second_difference(n);
  const Eigen::SparseMatrix<double> penalty =
      cfg.smoothness_lambda * Eigen::SparseMatrix<double>(d.transpose() * d);

  AlsResult out;
  out.weights = Vector::Ones(n);
  Vector z = y;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  for (int iter = 0; iter < cfg.n_iter; ++iter) {
    Eigen::SparseMatrix<double> system = penalty;
    for (Index i = 0; i < n; ++i) system.coeffRef(i, i) += out.weights(i);
    if (iter == 0) solver.analyzePattern(system);
    solver.factorize(system);
    if (solver.info() != Eigen::Success) fail_numerical("ALS system is singular");
    out.objective_before.push_back(als_objective(y, z, out.weights, cfg.smoothness_lambda));
    z = solver.solve(out.weights.cwiseProduct(y));
    out.objective_after.push_back(als_objective(y, z, out.weights, cfg.smoothness_lambda));
    if (iter + 1 < cfg.n_iter)
      for (Index i = 0; i < n; ++i)
        out.weights(i) = y(i) > z(i) ? cfg.asymmetry_p : 1.0 - cfg.asymmetry_p;
  }
  out.baseline = z;
  out.corrected = y - z;
  return out;
}

}  // namespace ccus
