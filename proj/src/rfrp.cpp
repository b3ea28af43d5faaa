#include "ccus/rfrp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ccus/parallel.hpp"
#include "ccus/random.hpp"

namespace ccus {

namespace {

Matrix gather(const Matrix& a, const std::vector<int>& rows,
              const std::vector<int>& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows.size(); ++i)
      out(static_cast<Index>(i), static_cast<Index>(j)) = a(rows[i], cols[j]);
  return out;
}

std::vector<int> all_indices(Index n) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = static_cast<int>(i);
  return idx;
}

// Outcome of one unit of randomized work: how many submatrices it examined
// and, if one was deficient, the witness (which ends the unit).
struct UnitOutcome {
  std::uint64_t checked = 0;
  std::optional<RfrpWitness> witness;
};

// Evaluates units in fixed-size blocks, possibly in parallel, and folds them
// in index order so the report is the same for any thread count.
template <class Unit>
void run_units(std::uint64_t n_units, int jobs, RfrpReport& report,
               Unit&& unit) {
  constexpr std::uint64_t kBlock = 1024;
  std::vector<UnitOutcome> block;
  for (std::uint64_t start = 0; start < n_units; start += kBlock) {
    const std::uint64_t len = std::min(kBlock, n_units - start);
    block.assign(len, UnitOutcome{});
    parallel_for(len, jobs, [&](std::size_t i) { block[i] = unit(start + i); });
    for (auto& outcome : block) {
      report.n_submatrices_checked += outcome.checked;
      if (outcome.witness) {
        report.passed = false;
        report.witness = std::move(outcome.witness);
        return;
      }
    }
  }
}

std::optional<RfrpWitness> check_block(const Matrix& a, std::vector<int> rows,
                                       std::vector<int> cols) {
  const Matrix sub = gather(a, rows, cols);
  if (has_full_column_rank(sub)) return std::nullopt;
  return RfrpWitness{std::move(rows), std::move(cols), numerical_rank(sub)};
}

void require_square_budget(const Matrix& dict, Index K) {
  if (K < 1 || K > std::min(dict.rows(), dict.cols()))
    fail_config("K = " + std::to_string(K) + " must lie in [1, min(N, p)] = [1, " +
                std::to_string(std::min(dict.rows(), dict.cols())) + "]");
}

}  // namespace

Index numerical_rank(const Eigen::Ref<const Matrix>& a) {
  if (a.size() == 0) return 0;
  const Vector sv = a.jacobiSvd().singularValues();
  const double threshold = kRankTolerance * std::max(sv(0), 1.0);
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > threshold) ++rank;
  return rank;
}

bool has_full_column_rank(const Eigen::Ref<const Matrix>& a) {
  const Index k = a.cols();
  if (k == 0) return true;
  if (a.rows() < k) return false;
  // sigma_min >= 1 / ||R^-1||_F and sigma_max <= ||A||_F, so a passing bound
  // settles the question; only borderline blocks pay for an SVD.
  const Eigen::HouseholderQR<Matrix> qr(a);
  const auto r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  bool nonzero_diag = true;
  for (Index i = 0; i < k; ++i)
    if (qr.matrixQR()(i, i) == 0.0) nonzero_diag = false;
  if (nonzero_diag) {
    const Matrix r_inv = r.solve(Matrix::Identity(k, k));
    const double inv_norm = r_inv.norm();
    if (std::isfinite(inv_norm)) {
      const double lower = 1.0 / inv_norm;
      if (lower > kRankTolerance * std::max(a.norm(), 1.0)) return true;
    }
  }
  return numerical_rank(a) == k;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::uint64_t num = n - k + i;
    // result * num / i stays integral at every step
    const std::uint64_t g = std::gcd(result, i);
    const std::uint64_t r = result / g;
    const std::uint64_t d = i / g;
    if (r > kMax / num) return kMax;
    result = r * (num / d);
  }
  return result;
}

std::string to_string(RfrpProperty p) {
  switch (p) {
    case RfrpProperty::k_rfrp: return "K_RFRP";
    case RfrpProperty::kxk_square: return "KxK_RFRP";
    case RfrpProperty::kxk_lower: return "Kxk_RFRP";
  }
  return "?";
}

std::string to_string(RfrpMode m) {
  return m == RfrpMode::exhaustive ? "exhaustive" : "randomized";
}

RfrpReport check_k_rfrp(const Matrix& basis, Index K, RfrpMode mode,
                        std::uint64_t budget, std::uint64_t seed, int jobs) {
  const Index n = basis.rows();
  const Index k = basis.cols();
  if (K > n) fail_config("K exceeds the number of rows");
  if (k > K) fail_config("basis has more columns than K");
  if (K < 1) fail_config("K must be positive");

  RfrpReport report;
  report.property = RfrpProperty::k_rfrp;
  report.K = K;
  report.mode = mode;
  const std::vector<int> cols = all_indices(k);

  if (mode == RfrpMode::exhaustive) {
    const auto total = binomial(static_cast<std::uint64_t>(n),
                                static_cast<std::uint64_t>(K));
    if (total > kExhaustiveCap)
      fail_config("exhaustive K-RFRP needs C(" + std::to_string(n) + ", " +
                  std::to_string(K) + ") subsets, above the cap of " +
                  std::to_string(kExhaustiveCap));
    report.n_submatrices_checked = for_each_subset(
        static_cast<int>(n), static_cast<int>(K), [&](const std::vector<int>& rows) {
          auto w = check_block(basis, rows, cols);
          if (!w) return true;
          report.passed = false;
          report.witness = std::move(w);
          return false;
        });
    return report;
  }

  run_units(budget, jobs, report, [&](std::uint64_t j) {
    Rng rng = make_rng(seed, j);
    return UnitOutcome{1, check_block(basis,
                                      sample_subset(rng, static_cast<int>(n),
                                                    static_cast<int>(K)),
                                      cols)};
  });
  return report;
}

RfrpReport check_kxk_rfrp(const Matrix& dict, Index K, std::uint64_t budget,
                          std::uint64_t seed, int jobs) {
  require_square_budget(dict, K);
  RfrpReport report;
  report.property = RfrpProperty::kxk_square;
  report.K = K;
  report.mode = RfrpMode::randomized;
  const int n = static_cast<int>(dict.rows());
  const int p = static_cast<int>(dict.cols());
  const int kk = static_cast<int>(K);
  run_units(budget, jobs, report, [&](std::uint64_t j) {
    Rng rng = make_rng(seed, j);
    auto rows = sample_subset(rng, n, kk);
    auto cols = sample_subset(rng, p, kk);
    return UnitOutcome{1, check_block(dict, std::move(rows), std::move(cols))};
  });
  return report;
}

RfrpReport check_kxk_lower_rfrp(const Matrix& dict, Index K,
                                std::uint64_t budget, std::uint64_t seed,
                                int jobs) {
  require_square_budget(dict, K);
  RfrpReport report;
  report.property = RfrpProperty::kxk_lower;
  report.K = K;
  report.mode = RfrpMode::randomized;
  const int n = static_cast<int>(dict.rows());
  const int p = static_cast<int>(dict.cols());
  const int kk = static_cast<int>(K);
  const auto per_draw = static_cast<std::uint64_t>(K);
  const std::uint64_t n_draws = (budget + per_draw - 1) / per_draw;
  run_units(n_draws, jobs, report, [&](std::uint64_t j) {
    Rng rng = make_rng(seed, j);
    const auto rows = sample_subset(rng, n, kk);
    const std::uint64_t limit = std::min(per_draw, budget - j * per_draw);
    UnitOutcome outcome;
    for (int k = kk; k >= 1 && outcome.checked < limit; --k) {
      ++outcome.checked;
      outcome.witness = check_block(dict, rows, sample_subset(rng, p, k));
      if (outcome.witness) break;
    }
    return outcome;
  });
  return report;
}

KrankResult krank(const Matrix& dict, std::uint64_t cap,
                  std::optional<Index> ceiling, int jobs) {
  const Index p = dict.cols();
  const Index top = std::min(dict.rows(), p);
  const Index stop = ceiling ? std::min(*ceiling, top) : top;
  KrankResult result;
  for (Index kappa = 1; kappa <= stop; ++kappa) {
    const auto total = binomial(static_cast<std::uint64_t>(p),
                                static_cast<std::uint64_t>(kappa));
    if (total > cap) {
      result.exact = false;
      return result;
    }
    const std::vector<int> rows = all_indices(dict.rows());
    constexpr std::size_t kChunk = 1 << 15;
    std::vector<std::vector<int>> chunk;
    std::vector<char> independent;
    bool dependent_found = false;
    auto flush = [&] {
      independent.assign(chunk.size(), 1);
      parallel_for(chunk.size(), jobs, [&](std::size_t i) {
        independent[i] = !check_block(dict, rows, chunk[i]).has_value();
      });
      if (std::find(independent.begin(), independent.end(), 0) != independent.end())
        dependent_found = true;
      chunk.clear();
    };
    for_each_subset(static_cast<int>(p), static_cast<int>(kappa),
                    [&](const std::vector<int>& s) {
                      chunk.push_back(s);
                      if (chunk.size() == kChunk) flush();
                      return !dependent_found;
                    });
    if (!dependent_found && !chunk.empty()) flush();
    if (dependent_found) return result;
    result.krank = kappa;
  }
  if (stop < top) result.exact = false;
  return result;
}

}  // namespace ccus
