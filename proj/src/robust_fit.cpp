#include "ccus/robust_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ccus/random.hpp"

namespace ccus {

double bisquare_rho(double u, double c) {
  const double t = u / c;
  if (std::abs(t) >= 1.0) return 1.0;
  const double v = 1.0 - t * t;
  return 1.0 - v * v * v;
}

double bisquare_weight(double u, double c) {
  const double t = u / c;
  if (std::abs(t) >= 1.0) return 0.0;
  const double v = 1.0 - t * t;
  return v * v;
}

namespace {

// d/du rho(u) * u, used for the Newton step on log(scale).
double bisquare_rho_prime_u(double u, double c) {
  const double t = u / c;
  if (std::abs(t) >= 1.0) return 0.0;
  const double v = 1.0 - t * t;
  return 6.0 * t * t * v * v;
}

double median_abs(const Vector& r) {
  std::vector<double> a(static_cast<std::size_t>(r.size()));
  for (Index i = 0; i < r.size(); ++i) a[static_cast<std::size_t>(i)] = std::abs(r(i));
  const auto mid = a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2);
  std::nth_element(a.begin(), mid, a.end());
  if (a.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(a.begin(), mid);
  return 0.5 * (lower + upper);
}

// Block-diagonal design I_m (x) E handled block by block. Also checks that a
// row subset or weighting keeps at least min_share of every coefficient
// direction's full-design energy, i.e. G_w - min_share * G is positive
// definite per block.
class BlockDesign {
 public:
  BlockDesign(const Matrix& a, Index blocks, double min_share)
      : a_(a), blocks_(blocks), block_n_(a.rows() / blocks), block_q_(a.cols() / blocks),
        min_share_(min_share) {
    for (Index blk = 0; blk < blocks_; ++blk) {
      const Matrix sub = block(blk);
      full_gram_.push_back(sub.transpose() * sub);
    }
  }

  Index block_n() const { return block_n_; }
  Index block_q() const { return block_q_; }

  Eigen::Block<const Matrix> block(Index blk) const {
    return a_.block(blk * block_n_, blk * block_q_, block_n_, block_q_);
  }

  bool off_blocks_zero() const {
    for (Index i = 0; i < blocks_; ++i)
      for (Index j = 0; j < blocks_; ++j)
        if (i != j && !a_.block(i * block_n_, j * block_q_, block_n_, block_q_).isZero(0.0))
          return false;
    return true;
  }

  bool keeps_share(Index blk, const Matrix& gram) const {
    if (min_share_ <= 0.0) return true;
    const Eigen::LLT<Matrix> llt(gram - min_share_ * full_gram_[static_cast<std::size_t>(blk)]);
    return llt.info() == Eigen::Success;
  }

  // Weighted least squares through the normal equations, block by block;
  // nullopt when some weighted block is singular or drops a direction.
  std::optional<Vector> weighted_ls(const Vector& b, const Vector& w) const {
    Vector beta(a_.cols());
    for (Index blk = 0; blk < blocks_; ++blk) {
      const auto sub = block(blk);
      const Matrix sw = sub.transpose() * w.segment(blk * block_n_, block_n_).asDiagonal();
      const Matrix gram = sw * sub;
      if (!keeps_share(blk, gram)) return std::nullopt;
      const Eigen::LDLT<Matrix> ldlt(gram);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
      const Vector diag = ldlt.vectorD();
      if (diag.minCoeff() <= 1e-13 * std::max(diag.maxCoeff(), 1e-300))
        return std::nullopt;
      beta.segment(blk * block_q_, block_q_) =
          ldlt.solve(sw * b.segment(blk * block_n_, block_n_));
    }
    if (!beta.allFinite()) return std::nullopt;
    return beta;
  }

 private:
  const Matrix& a_;
  Index blocks_;
  Index block_n_;
  Index block_q_;
  double min_share_;
  std::vector<Matrix> full_gram_;
};

// Condition number of the row subset at most 1e6, judged from its Gram matrix.
bool well_conditioned(const Matrix& gram) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  return ev(0) > 1e-12 * ev(ev.size() - 1) && ev(ev.size() - 1) > 0.0;
}

Vector scale_weights(const Vector& r, double scale, double c) {
  Vector w(r.size());
  for (Index i = 0; i < r.size(); ++i)
    w(i) = scale > 0.0 ? bisquare_weight(r(i) / scale, c) : (r(i) == 0.0 ? 1.0 : 0.0);
  return w;
}

// Residuals with rounding-level magnitudes are treated as exact zeros, so an
// exact fit of most rows yields scale 0 instead of a scale of order 1e-17.
Vector snapped_residuals(const Matrix& a, const Vector& b, const Vector& beta,
                         double zero_tol) {
  Vector r = b - a * beta;
  for (Index i = 0; i < r.size(); ++i)
    if (std::abs(r(i)) <= zero_tol) r(i) = 0.0;
  return r;
}

struct Candidate {
  Vector beta;
  double scale = 0.0;
  Index nonzero = 0;      // residuals above the rounding floor
  std::size_t order = 0;  // position in the candidate pool
};

bool better(const Candidate& x, const Candidate& y) {
  if (x.scale != y.scale) return x.scale < y.scale;
  if (x.nonzero != y.nonzero) return x.nonzero < y.nonzero;
  return x.order < y.order;
}

Candidate make_candidate(const Matrix& a, const Vector& b, Vector beta, double c,
                         double tol, double zero_tol, std::size_t order) {
  const Vector r = snapped_residuals(a, b, beta, zero_tol);
  const double scale = m_scale(r, c, tol);
  const Index nonzero = (r.array() != 0.0).count();
  return {std::move(beta), scale, nonzero, order};
}

// One S-estimator IRLS step: reweight at the current scale, refit, rescale.
bool concentrate(const BlockDesign& design, const Matrix& a, const Vector& b, double c,
                 double tol, double zero_tol, Candidate& cand) {
  if (cand.scale == 0.0) return false;
  const Vector r = snapped_residuals(a, b, cand.beta, zero_tol);
  auto beta = design.weighted_ls(b, scale_weights(r, cand.scale, c));
  if (!beta) return false;
  Candidate next = make_candidate(a, b, std::move(*beta), c, tol, zero_tol, cand.order);
  if (!(next.scale <= cand.scale)) return false;
  cand = std::move(next);
  return true;
}

}  // namespace

double m_scale(const Vector& residuals, double c, double tol, double delta) {
  const Index n = residuals.size();
  if (n == 0) return 0.0;
  Index nonzero = 0;
  double max_abs = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (residuals(i) != 0.0) ++nonzero;
    max_abs = std::max(max_abs, std::abs(residuals(i)));
  }
  if (nonzero == 0) return 0.0;
  // As s -> 0 the mean rho tends to the share of nonzero residuals.
  if (static_cast<double>(nonzero) / static_cast<double>(n) <= delta) return 0.0;

  // g(t) = mean rho(r / e^t) - delta decreases in t = log(s).
  auto g = [&](double t, double* slope) {
    const double inv = std::exp(-t);
    double sum = 0.0;
    double dsum = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double u = residuals(i) * inv;
      sum += bisquare_rho(u, c);
      if (slope) dsum += bisquare_rho_prime_u(u, c);
    }
    if (slope) *slope = -dsum / static_cast<double>(n);
    return sum / static_cast<double>(n) - delta;
  };

  double s0 = median_abs(residuals) / 0.6745;
  if (!(s0 > 0.0)) s0 = max_abs;
  double t = std::log(s0);
  // bracket the root
  double lo = t;
  double hi = t;
  if (g(t, nullptr) > 0.0) {
    do hi += 1.0; while (g(hi, nullptr) > 0.0);
    lo = hi - 1.0;
  } else {
    do lo -= 1.0; while (g(lo, nullptr) <= 0.0);
    hi = lo + 1.0;
  }
  t = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    double slope = 0.0;
    const double value = g(t, &slope);
    if (value > 0.0) lo = t; else hi = t;
    double next = slope < 0.0 ? t - value / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - t);
    t = next;
    if (step <= tol || hi - lo <= tol) break;
  }
  return std::exp(t);
}

Vector least_squares(const Matrix& a, const Vector& b) {
  return a.colPivHouseholderQr().solve(b);
}

Matrix stacked_design(const Matrix& e_hat, Index m) {
  if (m < 1) fail_config("stacked_design needs at least one channel");
  Matrix out = Matrix::Zero(m * e_hat.rows(), m * e_hat.cols());
  for (Index i = 0; i < m; ++i)
    out.block(i * e_hat.rows(), i * e_hat.cols(), e_hat.rows(), e_hat.cols()) = e_hat;
  return out;
}

RobustFit mm_estimate(const Matrix& a, const Vector& b, const MmConfig& cfg,
                      const std::optional<Vector>& start) {
  const Index n = a.rows();
  const Index q = a.cols();
  if (b.size() != n) fail_data("response length does not match the design");
  if (n <= q)
    fail_data("MM-estimation needs more observations (" + std::to_string(n) +
              ") than coefficients (" + std::to_string(q) + ")");
  if (!(cfg.bisquare_c_eff > cfg.bisquare_c_scale && cfg.bisquare_c_scale > 0.0))
    fail_config("bisquare constants must satisfy c_eff > c_scale > 0");
  if (!(cfg.tol > 0.0)) fail_config("MM tol must be positive");
  if (cfg.s_subsamples < 0) fail_config("s_subsamples must be nonnegative");
  const Index blocks = cfg.diagonal_blocks;
  if (blocks < 1 || n % blocks != 0 || q % blocks != 0)
    fail_config("diagonal_blocks must divide both dimensions of the design");
  const Index block_n = n / blocks;
  const Index block_q = q / blocks;
  if (a.colPivHouseholderQr().rank() < q)
    fail_numerical("design matrix is rank deficient");

  const double c_s = cfg.bisquare_c_scale;
  const double scale_tol = 1e-10;
  const double zero_tol = 1e-12 * b.cwiseAbs().maxCoeff();
  if (!(cfg.min_direction_share >= 0.0 && cfg.min_direction_share < 1.0))
    fail_config("min_direction_share must lie in [0, 1)");
  const BlockDesign design(a, blocks, cfg.min_direction_share);
  if (!design.off_blocks_zero()) fail_config("design is not block diagonal");

  // S-stage candidate pool
  std::vector<Candidate> pool;
  if (start) {
    pool.push_back(make_candidate(a, b, *start, c_s, scale_tol, zero_tol, 0));
  }
  Rng rng(cfg.seed);
  // A subset is a set of row positions shared by all blocks, since a corrupt
  // observation position tends to affect every block alike. It starts with
  // q/blocks random positions and grows one at a time until every block is
  // well conditioned and keeps enough of every direction.
  Vector draw_beta(q);
  std::vector<int> order(static_cast<std::size_t>(block_n));
  std::vector<Matrix> grams(static_cast<std::size_t>(blocks));
  std::vector<char> conditioned(static_cast<std::size_t>(blocks));
  for (int draw = 0; draw < cfg.s_subsamples; ++draw) {
    std::iota(order.begin(), order.end(), 0);
    for (auto& g : grams) g.setZero(block_q, block_q);
    std::fill(conditioned.begin(), conditioned.end(), 0);
    Index used = 0;
    Index pending = blocks;
    while (pending > 0 && used < block_n) {
      std::uniform_int_distribution<Index> pick(used, block_n - 1);
      std::swap(order[static_cast<std::size_t>(used)], order[static_cast<std::size_t>(pick(rng))]);
      const Index pos = order[static_cast<std::size_t>(used)];
      ++used;
      for (Index blk = 0; blk < blocks; ++blk) {
        auto& g = grams[static_cast<std::size_t>(blk)];
        const auto row = design.block(blk).row(pos);
        g.noalias() += row.transpose() * row;
        auto& done = conditioned[static_cast<std::size_t>(blk)];
        if (!done && used >= block_q && design.keeps_share(blk, g) && well_conditioned(g)) {
          done = 1;
          --pending;
        }
      }
    }
    const bool ok = pending == 0;
    for (Index blk = 0; blk < blocks && ok; ++blk) {
      const auto cols = design.block(blk);
      Matrix sub(used, block_q);
      Vector sub_b(used);
      for (Index i = 0; i < used; ++i) {
        const Index row = order[static_cast<std::size_t>(i)];
        sub.row(i) = cols.row(row);
        sub_b(i) = b(blk * block_n + row);
      }
      draw_beta.segment(blk * block_q, block_q) = sub.colPivHouseholderQr().solve(sub_b);
    }
    if (!ok || !draw_beta.allFinite()) continue;
    pool.push_back(make_candidate(a, b, draw_beta, c_s, scale_tol, zero_tol, pool.size()));
  }
  if (pool.empty()) fail_numerical("no well-conditioned row subset was found");

  for (auto& cand : pool)
    for (int k = 0; k < cfg.s_concentration_steps; ++k)
      if (!concentrate(design, a, b, c_s, scale_tol, zero_tol, cand)) break;

  std::sort(pool.begin(), pool.end(), better);
  pool.resize(std::min<std::size_t>(pool.size(),
                                    static_cast<std::size_t>(std::max(cfg.s_refine_best, 1))));
  for (auto& cand : pool) {
    for (int k = 0; k < cfg.max_irls_iter; ++k) {
      const double before = cand.scale;
      if (!concentrate(design, a, b, c_s, scale_tol, zero_tol, cand)) break;
      if (before - cand.scale <= 1e-10 * before) break;
    }
  }
  const Candidate& best = *std::min_element(pool.begin(), pool.end(), better);

  // MM-stage: bisquare IRLS at c_eff with the S-scale held fixed
  RobustFit fit;
  fit.scale = best.scale;
  Vector beta = best.beta;
  const double c_e = cfg.bisquare_c_eff;
  for (int iter = 0; fit.scale > 0.0 && iter < cfg.max_irls_iter; ++iter) {
    const Vector r = snapped_residuals(a, b, beta, zero_tol);
    const auto next = design.weighted_ls(b, scale_weights(r, fit.scale, c_e));
    fit.irls_iterations = iter + 1;
    if (!next) break;
    const double change = (*next - beta).cwiseAbs().maxCoeff();
    const double size = next->cwiseAbs().maxCoeff();
    beta = *next;
    if (change <= cfg.tol * size) {
      fit.converged = true;
      break;
    }
  }
  const Vector r = snapped_residuals(a, b, beta, zero_tol);
  if (fit.scale == 0.0) fit.converged = true;
  fit.coefficients = beta;
  fit.weights = scale_weights(r, fit.scale, c_e);
  return fit;
}

}  // namespace ccus
