#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccus/core.hpp"

namespace ccus {

/// Relative threshold on singular values: a block counts as full column rank
/// iff sigma_min > kRankTolerance * max(sigma_max, 1).
inline constexpr double kRankTolerance = 1e-8;

/// Largest number of row/column subsets an exhaustive check may visit.
inline constexpr std::uint64_t kExhaustiveCap = 1'000'000;

/// Numerical rank under the relative threshold above.
Index numerical_rank(const Eigen::Ref<const Matrix>& a);

/// Same decision as numerical_rank(a) == a.cols(), usually without an SVD.
bool has_full_column_rank(const Eigen::Ref<const Matrix>& a);

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// Calls visit(subset) for each k-subset of {0..n-1} in lexicographic order
/// until visit returns false. Returns the number of subsets visited.
template <class Visit>
std::uint64_t for_each_subset(int n, int k, Visit&& visit) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::uint64_t count = 0;
  if (k > n) return 0;
  for (;;) {
    ++count;
    if (!visit(static_cast<const std::vector<int>&>(idx))) return count;
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return count;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

/// K_RFRP (tall basis), KxK_RFRP (square blocks), Kxk_RFRP (all k <= K).
enum class RfrpProperty { k_rfrp, kxk_square, kxk_lower };
enum class RfrpMode { exhaustive, randomized };

std::string to_string(RfrpProperty p);
std::string to_string(RfrpMode m);

struct RfrpWitness {
  std::vector<int> rows;
  std::vector<int> cols;  ///< all columns for K-RFRP
  Index rank = 0;
};

struct RfrpReport {
  RfrpProperty property = RfrpProperty::k_rfrp;
  Index K = 0;
  RfrpMode mode = RfrpMode::exhaustive;
  std::uint64_t n_submatrices_checked = 0;
  bool passed = true;
  std::optional<RfrpWitness> witness;  ///< present iff !passed
};

/// K-RFRP of a tall basis E (N x k): every K x k row-submatrix has rank k.
/// Exhaustive mode visits all C(N, K) row subsets and refuses when that
/// exceeds kExhaustiveCap; randomized mode draws `budget` subsets.
RfrpReport check_k_rfrp(const Matrix& basis, Index K, RfrpMode mode,
                        std::uint64_t budget, std::uint64_t seed, int jobs = 1);

/// K x K-RFRP of D, certified on `budget` random (rows, cols) draws.
RfrpReport check_kxk_rfrp(const Matrix& dict, Index K, std::uint64_t budget,
                          std::uint64_t seed, int jobs = 1);

/// K x k-RFRP of D for all k <= K. Each draw picks one K-row set and one
/// column set per k = K, K-1, ..., 1; `budget` counts submatrices. Draw j
/// uses the same rows and K-column set as check number j of check_kxk_rfrp
/// with the same seed.
RfrpReport check_kxk_lower_rfrp(const Matrix& dict, Index K,
                                std::uint64_t budget, std::uint64_t seed,
                                int jobs = 1);

struct KrankResult {
  Index krank = 0;
  bool exact = true;  ///< false when the subset cap or `ceiling` stopped the search
};

/// Kruskal rank: largest kappa such that every kappa columns are independent.
/// Levels whose C(p, kappa) exceeds `cap` are not visited. When `ceiling` is
/// given the search stops once kappa reaches it (a lower-bound answer).
KrankResult krank(const Matrix& dict, std::uint64_t cap,
                  std::optional<Index> ceiling = std::nullopt, int jobs = 1);

}  // namespace ccus
