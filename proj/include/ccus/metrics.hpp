#pragma once

#include <optional>
#include <vector>

#include "ccus/core.hpp"
#include "ccus/signal_model.hpp"

namespace ccus {

struct EvalReport {
  double r_squared = 0.0;
  /// Only defined for two channels.
  std::optional<double> weighted_accuracy;
  Permutation relabeling;       ///< estimate channel relabeling[m] plays true channel m
  Index n_correct_rows = 0;
};

/// x_hat with columns reordered: out[:, m] = x_hat[:, relabeling[m]].
MultiChannelSignal relabel(const MultiChannelSignal& x_hat, const Permutation& relabeling);

/// Pooled 1 - RSS/TSS with TSS taken about the global mean of x_true, for the
/// channel order given. Throws when TSS = 0 but RSS > 0.
double r_squared_fixed(const MultiChannelSignal& x_true, const MultiChannelSignal& x_hat);

/// Channel order of x_hat maximizing R^2; ties keep the earliest permutation
/// in lexicographic order, so the identity wins when it is optimal.
Permutation best_relabeling(const MultiChannelSignal& x_true, const MultiChannelSignal& x_hat);

/// R^2 after best_relabeling.
double r_squared(const MultiChannelSignal& x_true, const MultiChannelSignal& x_hat);

/// sum over correct rows of |x1 - x2| divided by the same sum over all rows;
/// 1 when every row has x1 = x2. Requires exactly two channels.
double weighted_accuracy(const MultiChannelSignal& x_true,
                         const std::vector<bool>& assignment_correct);

/// Row n is correct when the estimated shuffle, read through the relabeling,
/// routes the same true channel into every observed slot. Rows whose true
/// values are all equal always count as correct.
std::vector<bool> correct_rows(const MultiChannelSignal& x_true,
                               const ChannelShuffle& true_shuffle,
                               const ChannelShuffle& estimated_shuffle,
                               const Permutation& relabeling);

/// R^2 under the best relabeling and, for two channels, WA under whichever
/// channel order scores higher.
EvalReport evaluate(const MultiChannelSignal& x_true, const ChannelShuffle& true_shuffle,
                    const MultiChannelSignal& x_hat,
                    const ChannelShuffle& estimated_shuffle);

}  // namespace ccus
