#include "ccus/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ccus/random.hpp"

namespace ccus {

MultiChannelSignal::MultiChannelSignal(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1)
    fail_data("signal must have at least one sample and one channel");
  if (!data_.allFinite()) fail_data("signal contains non-finite samples");
}

Vector MultiChannelSignal::vec() const {
  return Eigen::Map<const Vector>(data_.data(), data_.size());
}

ChannelShuffle ChannelShuffle::identity(Index n_samples, Index n_channels) {
  const int m = static_cast<int>(n_channels);
  return ChannelShuffle(
      m, std::vector<Permutation>(static_cast<std::size_t>(n_samples),
                                  identity_permutation(m)));
}

Index ChannelShuffle::count_shuffled_rows() const {
  const Permutation id = identity_permutation(n_channels_);
  Index count = 0;
  for (const auto& r : rows_)
    if (r != id) ++count;
  return count;
}

bool validate_shuffle(const ChannelShuffle& s) {
  if (s.n_channels() < 1) return false;
  for (const auto& r : s.assignment())
    if (!is_permutation(r, s.n_channels())) return false;
  return true;
}

MultiChannelSignal apply_shuffle(const MultiChannelSignal& x,
                                 const ChannelShuffle& s) {
  if (s.n_samples() != x.n_samples() || s.n_channels() != x.n_channels())
    fail_data("shuffle is " + std::to_string(s.n_samples()) + "x" +
              std::to_string(s.n_channels()) + " but signal is " +
              std::to_string(x.n_samples()) + "x" +
              std::to_string(x.n_channels()));
  if (!validate_shuffle(s)) fail_data("shuffle rows are not permutations");
  Matrix y(x.n_samples(), x.n_channels());
  for (Index n = 0; n < x.n_samples(); ++n) {
    const auto& r = s.row(n);
    for (Index m = 0; m < x.n_channels(); ++m)
      y(n, m) = x(n, r[static_cast<std::size_t>(m)]);
  }
  return MultiChannelSignal(std::move(y));
}

ChannelShuffle random_shuffle(Index n, Index m, const ShuffleSpec& spec) {
  if (n < 1 || m < 1) fail_config("random_shuffle needs n, m >= 1");
  if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0))
    fail_config("shuffle fraction must lie in [0, 1]");
  const int channels = static_cast<int>(m);
  auto rows = std::vector<Permutation>(static_cast<std::size_t>(n),
                                       identity_permutation(channels));
  const auto n_shuffled =
      static_cast<int>(std::lround(spec.fraction * static_cast<double>(n)));
  if (channels == 1 || n_shuffled == 0)
    return ChannelShuffle(channels, std::move(rows));

  Rng rng(spec.seed);
  const Permutation id = identity_permutation(channels);
  for (int row : sample_subset(rng, static_cast<int>(n), n_shuffled)) {
    Permutation& p = rows[static_cast<std::size_t>(row)];
    if (spec.mode == ShuffleMode::pairwise_swap) {
      const auto pair = sample_subset(rng, channels, 2);
      std::swap(p[static_cast<std::size_t>(pair[0])],
                p[static_cast<std::size_t>(pair[1])]);
    } else {
      do {
        std::shuffle(p.begin(), p.end(), rng);
      } while (p == id);
    }
  }
  return ChannelShuffle(channels, std::move(rows));
}

ChannelShuffle invert_shuffle(const ChannelShuffle& s) {
  std::vector<Permutation> rows;
  rows.reserve(s.assignment().size());
  for (const auto& r : s.assignment()) rows.push_back(inverse(r));
  return ChannelShuffle(s.n_channels(), std::move(rows));
}

Matrix materialize_pi(const ChannelShuffle& s) {
  const Index n = s.n_samples();
  const Index m = s.n_channels();
  Matrix pi = Matrix::Zero(n * m, n * m);
  // block (out, src) is diag(q_{out,src}); q_{out,src}[row] = 1 iff row
  // routes src into out
  for (Index row = 0; row < n; ++row)
    for (Index out = 0; out < m; ++out)
      pi(out * n + row, s.row(row)[static_cast<std::size_t>(out)] * n + row) =
          1.0;
  return pi;
}

}  // namespace ccus
