#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ccus/core.hpp"
#include "ccus/signal_model.hpp"

namespace ccus {

struct Dictionary {
  Matrix matrix;
  /// Set when matrix(i, j) = kernel((i - j) mod N).
  std::optional<Vector> circulant_kernel;
};

/// N x N circulant whose column j is the kernel cyclically delayed by j.
Dictionary make_circulant(const Vector& kernel);

/// Calcium-like impulse response (1 - e^{-t/rise}) e^{-t/decay}, unit norm.
Vector calcium_kernel(Index n, double rise = 1.0, double decay = 10.0);

enum class SupportMode { shared, disjoint, overlapping };
enum class DictionaryMode { gaussian, circulant_from_kernel };

struct SynthSpec {
  Index n = 121;
  Index m = 2;
  Index p = 121;  ///< ignored for circulant dictionaries (p = n)
  Index k_per_channel = 4;
  SupportMode support_mode = SupportMode::disjoint;
  Index shared_count = 0;  ///< overlapping mode: indices common to all channels
  double snr_db = std::numeric_limits<double>::infinity();
  DictionaryMode dictionary_mode = DictionaryMode::circulant_from_kernel;
  std::optional<Vector> kernel;  ///< defaults to calcium_kernel(n)
  std::uint64_t seed = 0;
};

struct SynthInstance {
  MultiChannelSignal x;            ///< observed-quality signal, noise included
  MultiChannelSignal clean;        ///< D * beta_m
  std::vector<Vector> betas;
  Dictionary dict;
};

/// Nonzero coefficients have magnitude in [0.5, 2] with random sign; the
/// summed coefficients never cancel on the union support, and channels are
/// pairwise distinct. Noise variance per channel is power(D beta_m) * 10^(-snr/10).
SynthInstance synth_instance(const SynthSpec& spec);

}  // namespace ccus
