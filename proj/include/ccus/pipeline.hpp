#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccus/core.hpp"
#include "ccus/rfrp.hpp"
#include "ccus/robust_fit.hpp"
#include "ccus/signal_model.hpp"
#include "ccus/sparse_support.hpp"

namespace ccus {

enum class RefitMode { mm_each_iter, ls_after_first };

/// Which rank property of the dictionary is sampled after support selection.
/// A failed check adds a warning; it does not stop the run.
enum class RfrpGate { none, kxk_square, kxk_lower };

struct PipelineConfig {
  int n_outer_iter = 5;
  StabilityConfig stability;
  MmConfig mm;
  /// S-stage subsets for the refits after each reassignment, which also start
  /// from the previous fit. Negative means mm.s_subsamples.
  int refit_s_subsamples = -1;
  RefitMode refit_mode = RefitMode::ls_after_first;
  RfrpGate rfrp_gate = RfrpGate::kxk_square;
  std::uint64_t rfrp_budget = 1'000;
  std::uint64_t seed = 0;  ///< drives the RFRP gate sampling
};

struct RecoveryResult {
  MultiChannelSignal reconstructed;   ///< E_hat * beta_m per channel
  MultiChannelSignal reassigned;      ///< observations after reassignment
  MultiChannelSignal initial_fit;     ///< iteration 0: the fit before any reassignment
  ChannelShuffle estimated_shuffle;   ///< observed = apply_shuffle(reassigned, this)
  SupportEstimate support;
  std::vector<Vector> coefficients;   ///< per channel, length p (zero off-support)
  double rss = 0.0;
  std::vector<double> per_iteration_rss;  ///< entry 0 is the fit before any reassignment
  int best_iteration = 0;
  Permutation channel_relabeling;     ///< identity unless set by evaluation
  bool ambiguous_channels = false;    ///< two fitted channels coincide
  std::optional<RfrpReport> rfrp_gate;
  std::vector<std::string> warnings;
};

struct Reassignment {
  MultiChannelSignal reassigned;
  /// reassigned = apply_shuffle(observed, permutation)
  ChannelShuffle permutation;
};

/// Per row, the channel permutation of y closest in squared error to the
/// fitted row. Up to 6 channels every permutation is tried and the
/// lexicographically first minimizer wins; beyond that a linear assignment
/// is solved per row.
Reassignment reassign_rows(const MultiChannelSignal& y,
                           const MultiChannelSignal& fitted);

/// Full recovery: support from the channel sum, robust fit on the stacked
/// design, then alternating reassignment and refits. Returns the iteration
/// with the smallest RSS (earliest on ties).
RecoveryResult run_pipeline(const MultiChannelSignal& y, const Matrix& dict,
                            const PipelineConfig& cfg);

/// The fit/reassign loop for a known support. With `initial_fit` the loop
/// starts from those fitted channels instead of an MM fit to y.
RecoveryResult unshuffle_with_support(
    const MultiChannelSignal& y, const Matrix& dict, const SupportEstimate& support,
    const PipelineConfig& cfg,
    const std::optional<MultiChannelSignal>& initial_fit = std::nullopt);

/// Support estimate that keeps exactly `indices` (probabilities 1 there).
SupportEstimate fixed_support(const Matrix& dict, std::vector<int> indices);

struct OracleSolution {
  MultiChannelSignal signal;
  ChannelShuffle shuffle;    ///< observed = apply_shuffle(signal, shuffle)
  Permutation subspace_of;   ///< channel m lies in subspace subspace_of[m]
};

struct OracleResult {
  std::vector<OracleSolution> solutions;
  /// All solutions coincide (signal and shuffle) after a global channel
  /// renaming.
  bool unique_up_to_relabeling = false;
  /// Solutions grouped by signal alone, ignoring shuffle differences.
  int n_distinct_signals = 0;
  std::uint64_t n_candidates = 0;
};

/// Largest number of candidate shuffles brute_force_oracle will enumerate.
inline constexpr std::uint64_t kOracleCap = 10'000'000;

/// Tries every cross-channel shuffle and keeps the unshuffled signals whose
/// channels lie in distinct subspaces (bijectively). Membership means the
/// residual of projecting onto span(E_m) is at most 1e-8 of the norm.
OracleResult brute_force_oracle(const MultiChannelSignal& y,
                                const std::vector<Matrix>& subspaces);

/// True iff the summed coefficient vector is the unique sparsest
/// representation of D * sum(betas), checked by enumerating every support of
/// size <= its own. `cap` bounds the number of supports visited.
bool oracle_support_uniqueness(const Matrix& dict, const std::vector<Vector>& betas,
                               std::uint64_t cap = 10'000'000);

}  // namespace ccus
