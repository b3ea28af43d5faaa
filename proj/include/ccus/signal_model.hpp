#pragma once

#include <cstdint>
#include <vector>

#include "ccus/core.hpp"

namespace ccus {

/// N samples by M channels; column m holds channel m.
class MultiChannelSignal {
 public:
  MultiChannelSignal() = default;
  /// Throws Error(data) when empty or when an entry is not finite.
  explicit MultiChannelSignal(Matrix data);

  const Matrix& data() const noexcept { return data_; }
  Index n_samples() const noexcept { return data_.rows(); }
  Index n_channels() const noexcept { return data_.cols(); }
  auto channel(Index m) const { return data_.col(m); }
  double operator()(Index n, Index m) const { return data_(n, m); }

  /// Channels stacked one after another: (x_1; x_2; ...; x_M).
  Vector vec() const;

  friend bool operator==(const MultiChannelSignal& a,
                         const MultiChannelSignal& b) {
    return a.data_.rows() == b.data_.rows() &&
           a.data_.cols() == b.data_.cols() && a.data_ == b.data_;
  }

 private:
  Matrix data_;
};

/// Cross-channel shuffle: row n of the output takes output channel m from
/// source channel assignment()[n][m]. Only within-row permutations exist.
class ChannelShuffle {
 public:
  ChannelShuffle() = default;
  ChannelShuffle(int n_channels, std::vector<Permutation> rows)
      : n_channels_(n_channels), rows_(std::move(rows)) {}

  static ChannelShuffle identity(Index n_samples, Index n_channels);

  int n_channels() const noexcept { return n_channels_; }
  Index n_samples() const noexcept { return static_cast<Index>(rows_.size()); }
  const std::vector<Permutation>& assignment() const noexcept { return rows_; }
  const Permutation& row(Index n) const {
    return rows_[static_cast<std::size_t>(n)];
  }

  /// Rows whose permutation is not the identity.
  Index count_shuffled_rows() const;

  friend bool operator==(const ChannelShuffle&, const ChannelShuffle&) = default;

 private:
  int n_channels_ = 0;
  std::vector<Permutation> rows_;
};

enum class ShuffleMode { pairwise_swap, uniform_permutation };

struct ShuffleSpec {
  double fraction = 0.0;  ///< share of rows carrying a non-identity permutation
  std::uint64_t seed = 0;
  ShuffleMode mode = ShuffleMode::pairwise_swap;
};

/// y[n][m] = x[n][s[n][m]]. Throws on shape mismatch or an invalid shuffle.
MultiChannelSignal apply_shuffle(const MultiChannelSignal& x,
                                 const ChannelShuffle& s);

/// True iff every row is a bijection on the channels, i.e. the binary
/// selection vectors have unit row and column sums.
bool validate_shuffle(const ChannelShuffle& s);

/// Exactly round(fraction * n) rows receive a non-identity permutation.
/// pairwise_swap exchanges one random pair of channels per selected row;
/// uniform_permutation redraws until the permutation is not the identity.
ChannelShuffle random_shuffle(Index n, Index m, const ShuffleSpec& spec);

ChannelShuffle invert_shuffle(const ChannelShuffle& s);

/// Dense NM x NM matrix acting on vec(x) with diagonal blocks
/// Q_mn = diag(q_mn). Intended for cross-checks on small sizes only.
Matrix materialize_pi(const ChannelShuffle& s);

}  // namespace ccus
