#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ccus {

using Rng = std::mt19937_64;

/// Seed for the `counter`-th independent stream under `master`.
/// Lets parallel work draw from per-task generators while staying
/// reproducible regardless of scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

inline Rng make_rng(std::uint64_t master, std::uint64_t counter) {
  return Rng(derive_seed(master, counter));
}

/// Uniformly random k-subset of {0..n-1}, returned sorted.
std::vector<int> sample_subset(Rng& rng, int n, int k);

}  // namespace ccus
