#include "ccus/sparse_support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ccus/parallel.hpp"
#include "ccus/random.hpp"

namespace ccus {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Coordinate descent on the normalized Gram system. Holds everything that
// stays fixed across a lambda path so warm starts are cheap.
class GramSolver {
 public:
  GramSolver(const Matrix& dict, const Vector& y)
      : n_(static_cast<double>(dict.rows())),
        scale_(dict.colwise().norm().transpose()),
        yy_(y.squaredNorm()) {
    const Index p = dict.cols();
    inv_scale_ = Vector::Zero(p);
    for (Index j = 0; j < p; ++j)
      if (scale_(j) > 0.0) inv_scale_(j) = 1.0 / scale_(j);
    const Matrix normalized = dict * inv_scale_.asDiagonal();
    gram_ = normalized.transpose() * normalized;
    corr_ = normalized.transpose() * y;
    b_ = Vector::Zero(p);
    gb_ = Vector::Zero(p);
  }

  void warm_start(const Vector& beta) {
    b_ = beta.cwiseProduct(scale_);
    gb_.noalias() = gram_ * b_;
  }

  LassoResult solve(double lambda, int max_iter, double tol) {
    const Index p = gram_.rows();
    LassoResult out;
    for (int sweep = 0; sweep < max_iter; ++sweep) {
      for (Index j = 0; j < p; ++j) {
        if (scale_(j) == 0.0) continue;
        const double old = b_(j);
        const double z = corr_(j) - gb_(j) + old;  // unit diagonal
        const double updated = soft_threshold(z, n_ * lambda * inv_scale_(j));
        if (updated != old) {
          gb_.noalias() += gram_.col(j) * (updated - old);
          b_(j) = updated;
        }
      }
      gb_.noalias() = gram_ * b_;  // drop accumulated update error
      out.sweeps = sweep + 1;
      out.objective_per_sweep.push_back(objective(lambda));
      out.kkt_residual = kkt(lambda);
      if (out.kkt_residual <= tol) {
        out.converged = true;
        break;
      }
    }
    if (max_iter <= 0) out.kkt_residual = kkt(lambda);
    out.coefficients = b_.cwiseProduct(inv_scale_);
    return out;
  }

 private:
  double objective(double lambda) const {
    const double fit = yy_ - 2.0 * b_.dot(corr_) + b_.dot(gb_);
    return 0.5 * fit / n_ + lambda * b_.cwiseAbs().dot(inv_scale_);
  }

  // Violation in original-column units: gradient_j = scale_j (corr - Gb)_j / N.
  double kkt(double lambda) const {
    double worst = 0.0;
    for (Index j = 0; j < gram_.rows(); ++j) {
      const double grad = scale_(j) * (corr_(j) - gb_(j)) / n_;
      const double v = b_(j) == 0.0 ? std::max(0.0, std::abs(grad) - lambda)
                                    : std::abs(grad - std::copysign(lambda, b_(j)));
      worst = std::max(worst, v);
    }
    return worst;
  }

  double n_;
  Vector scale_;
  Vector inv_scale_;
  double yy_;
  Matrix gram_;
  Vector corr_;
  Vector b_;
  Vector gb_;
};

void check_lasso_inputs(const Matrix& dict, const Vector& y) {
  if (dict.rows() != y.size())
    fail_data("dictionary has " + std::to_string(dict.rows()) +
              " rows but the response has " + std::to_string(y.size()));
  if (dict.rows() == 0) fail_data("lasso needs at least one sample");
  if (!dict.allFinite() || !y.allFinite())
    fail_data("lasso inputs must be finite");
}

}  // namespace

Vector channel_sum(const MultiChannelSignal& y) {
  // Summing each row in sorted order makes the result bit-identical under any
  // within-row permutation, not just equal in exact arithmetic.
  Vector sum(y.n_samples());
  std::vector<double> row(static_cast<std::size_t>(y.n_channels()));
  for (Index n = 0; n < y.n_samples(); ++n) {
    for (Index m = 0; m < y.n_channels(); ++m)
      row[static_cast<std::size_t>(m)] = y(n, m);
    std::sort(row.begin(), row.end());
    sum(n) = std::accumulate(row.begin(), row.end(), 0.0);
  }
  return sum;
}

double lambda_max(const Matrix& dict, const Vector& y) {
  return (dict.transpose() * y).cwiseAbs().maxCoeff() /
         static_cast<double>(dict.rows());
}

std::vector<double> log_grid(double hi, double ratio, int count) {
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    grid[static_cast<std::size_t>(i)] = hi * std::pow(ratio, t);
  }
  return grid;
}

double lasso_kkt_residual(const Matrix& dict, const Vector& y,
                          const Vector& beta, double lambda) {
  const Vector grad =
      dict.transpose() * (y - dict * beta) / static_cast<double>(dict.rows());
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    const double v = beta(j) == 0.0
                         ? std::max(0.0, std::abs(grad(j)) - lambda)
                         : std::abs(grad(j) - std::copysign(lambda, beta(j)));
    worst = std::max(worst, v);
  }
  return worst;
}

LassoResult lasso(const Matrix& dict, const Vector& y, const LassoConfig& cfg) {
  check_lasso_inputs(dict, y);
  if (!(cfg.lambda >= 0.0)) fail_config("lasso lambda must be nonnegative");
  if (!(cfg.tol > 0.0)) fail_config("lasso tol must be positive");
  GramSolver solver(dict, y);
  return solver.solve(cfg.lambda, cfg.max_iter, cfg.tol);
}

namespace {

// Homotopy on the original (unnormalized) problem. On a fixed active set A
// with signs s, beta_A(lambda) = u - N lambda v where G_AA u = c_A and
// G_AA v = s_A; the path changes only when an inactive correlation reaches
// lambda or an active coefficient crosses zero. Returns the number of grid
// points solved; the rest are left to coordinate descent.
std::size_t homotopy(const Matrix& dict, const Vector& y, const std::vector<double>& grid,
                     std::vector<Vector>& out, std::vector<int>& steps) {
  const Index p = dict.cols();
  const double n = static_cast<double>(dict.rows());
  const Matrix gram = dict.transpose() * dict;
  const Vector c = dict.transpose() * y;

  std::vector<Index> active;
  std::vector<double> sign;
  std::vector<bool> in_active(static_cast<std::size_t>(p), false);
  std::size_t g = 0;
  int step = 0;

  double lam = c.cwiseAbs().maxCoeff() / n;
  while (g < grid.size() && grid[g] >= lam) {
    out.push_back(Vector::Zero(p));
    steps.push_back(0);
    ++g;
  }
  if (lam == 0.0) return g;
  {
    Index j0 = 0;
    c.cwiseAbs().maxCoeff(&j0);
    active.push_back(j0);
    sign.push_back(c(j0) > 0 ? 1.0 : -1.0);
    in_active[static_cast<std::size_t>(j0)] = true;
  }
  Index just_added = active.front();
  Index just_dropped = -1;

  while (g < grid.size()) {
    const Index k = static_cast<Index>(active.size());
    if (k >= dict.rows()) break;
    Matrix gaa(k, k);
    Vector ca(k), sa(k);
    for (Index i = 0; i < k; ++i) {
      ca(i) = c(active[static_cast<std::size_t>(i)]);
      sa(i) = sign[static_cast<std::size_t>(i)];
      for (Index j = 0; j < k; ++j)
        gaa(i, j) = gram(active[static_cast<std::size_t>(i)], active[static_cast<std::size_t>(j)]);
    }
    const Eigen::LDLT<Matrix> ldlt(gaa);
    const Vector d = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || !(d.minCoeff() > 1e-10 * d.maxCoeff())) break;
    const Vector u = ldlt.solve(ca);
    const Vector v = ldlt.solve(sa);

    Matrix g_a(p, k);
    for (Index j = 0; j < k; ++j) g_a.col(j) = gram.col(active[static_cast<std::size_t>(j)]);
    const Vector gu = g_a * u;
    const Vector gv = g_a * v;

    const double upper = lam * (1.0 - 1e-12);
    double next = 0.0;
    Index event = -1;
    bool joining = false;
    for (Index j = 0; j < p; ++j) {
      if (in_active[static_cast<std::size_t>(j)] || j == just_dropped) continue;
      const double a = (c(j) - gu(j)) / n;
      const double b = gv(j);
      for (double side : {1.0, -1.0}) {
        const double denom = side - b;
        if (denom == 0.0) continue;
        const double t = a / denom;
        if (t > next && t < upper) {
          next = t;
          event = j;
          joining = true;
        }
      }
    }
    for (Index i = 0; i < k; ++i) {
      if (active[static_cast<std::size_t>(i)] == just_added || v(i) == 0.0) continue;
      const double t = u(i) / (n * v(i));
      if (t > next && t < upper) {
        next = t;
        event = i;
        joining = false;
      }
    }
    ++step;

    while (g < grid.size() && grid[g] >= next) {
      Vector b = Vector::Zero(p);
      const Vector ba = u - n * grid[g] * v;
      for (Index i = 0; i < k; ++i) b(active[static_cast<std::size_t>(i)]) = ba(i);
      out.push_back(std::move(b));
      steps.push_back(step);
      ++g;
    }
    if (event < 0 || next <= 0.0) break;

    lam = next;
    just_added = -1;
    just_dropped = -1;
    if (joining) {
      const double corr = (c(event) - gu(event)) / n + lam * gv(event);
      active.push_back(event);
      sign.push_back(corr > 0 ? 1.0 : -1.0);
      in_active[static_cast<std::size_t>(event)] = true;
      just_added = event;
    } else {
      const Index j = active[static_cast<std::size_t>(event)];
      in_active[static_cast<std::size_t>(j)] = false;
      active.erase(active.begin() + event);
      sign.erase(sign.begin() + event);
      just_dropped = j;
    }
  }
  return g;
}

}  // namespace

std::vector<LassoResult> lasso_path(const Matrix& dict, const Vector& y,
                                    const std::vector<double>& lambdas,
                                    int max_iter, double tol) {
  check_lasso_inputs(dict, y);
  if (!(tol > 0.0)) fail_config("lasso tol must be positive");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0)) fail_config("lasso lambda must be nonnegative");
    if (i > 0 && !(lambdas[i] < lambdas[i - 1]))
      fail_config("lambda path must be strictly decreasing");
  }
  std::vector<Vector> exact;
  std::vector<int> steps;
  const std::size_t solved = homotopy(dict, y, lambdas, exact, steps);

  GramSolver solver(dict, y);
  std::vector<LassoResult> path;
  path.reserve(lambdas.size());
  Vector previous = Vector::Zero(dict.cols());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    LassoResult r;
    if (i < solved) {
      r.coefficients = exact[i];
      r.sweeps = steps[i];
      r.kkt_residual = lasso_kkt_residual(dict, y, r.coefficients, lambdas[i]);
      r.converged = r.kkt_residual <= tol;
    }
    if (i >= solved || !r.converged) {
      solver.warm_start(i < solved ? exact[i] : previous);
      r = solver.solve(lambdas[i], max_iter, tol);
    }
    previous = r.coefficients;
    path.push_back(std::move(r));
  }
  return path;
}

Matrix select_columns(const Matrix& dict, const std::vector<int>& indices) {
  Matrix out(dict.rows(), static_cast<Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i)
    out.col(static_cast<Index>(i)) = dict.col(indices[i]);
  return out;
}

SupportEstimate stability_select(const Matrix& dict, const Vector& y,
                                 const StabilityConfig& cfg, int jobs) {
  check_lasso_inputs(dict, y);
  if (cfg.n_subsamples < 2) fail_config("stability selection needs >= 2 subsamples");
  if (!(cfg.subsample_fraction > 0.0 && cfg.subsample_fraction <= 1.0))
    fail_config("subsample_fraction must lie in (0, 1]");
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0))
    fail_config("selection threshold must lie in (0, 1]");

  const double lmax = lambda_max(dict, y);
  std::vector<double> grid = cfg.lambda_grid;
  if (grid.empty()) grid = log_grid(lmax, 1e-3, 50);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) fail_config("lambda grid values must be nonnegative");
    if (i > 0 && !(grid[i] < grid[i - 1]))
      fail_config("lambda grid must be strictly decreasing");
  }

  const Index n = dict.rows();
  const Index p = dict.cols();
  const int n_sub = std::max(
      1, static_cast<int>(std::floor(cfg.subsample_fraction * static_cast<double>(n))));
  const double tol = std::max(cfg.lasso_tol_rel * lmax, 1e-12);

  // selected[s](l, j) = 1 iff subsample s at grid point l keeps column j
  std::vector<Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>> selected(
      static_cast<std::size_t>(cfg.n_subsamples));
  parallel_for(selected.size(), jobs, [&](std::size_t s) {
    Rng rng = make_rng(cfg.seed, s);
    const auto rows = sample_subset(rng, static_cast<int>(n), n_sub);
    Matrix sub_dict(n_sub, p);
    Vector sub_y(n_sub);
    for (int i = 0; i < n_sub; ++i) {
      sub_dict.row(i) = dict.row(rows[static_cast<std::size_t>(i)]);
      sub_y(i) = y(rows[static_cast<std::size_t>(i)]);
    }
    const auto path = lasso_path(sub_dict, sub_y, grid, cfg.lasso_max_iter, tol);
    auto& mask = selected[s];
    mask.setZero(static_cast<Index>(grid.size()), p);
    for (std::size_t l = 0; l < path.size(); ++l)
      for (Index j = 0; j < p; ++j)
        if (path[l].coefficients(j) != 0.0) mask(static_cast<Index>(l), j) = 1;
  });

  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> counts =
      Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>::Zero(
          static_cast<Index>(grid.size()), p);
  for (const auto& mask : selected) counts += mask;

  SupportEstimate est;
  est.selection_probabilities =
      counts.colwise().maxCoeff().transpose().cast<double>() /
      static_cast<double>(cfg.n_subsamples);
  for (Index j = 0; j < p; ++j)
    if (est.selection_probabilities(j) >= cfg.threshold)
      est.indices.push_back(static_cast<int>(j));
  if (est.indices.empty()) throw EmptySupportError(est.selection_probabilities);

  if (static_cast<Index>(est.indices.size()) > n) {
    // keep the N most stable columns; ties resolved by lower index
    std::stable_sort(est.indices.begin(), est.indices.end(), [&](int a, int b) {
      return est.selection_probabilities(a) > est.selection_probabilities(b);
    });
    est.indices.resize(static_cast<std::size_t>(n));
    std::sort(est.indices.begin(), est.indices.end());
    est.truncated = true;
  }
  est.sensing_matrix = select_columns(dict, est.indices);
  return est;
}

}  // namespace ccus
