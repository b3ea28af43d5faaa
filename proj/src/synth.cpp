#include "ccus/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ccus/random.hpp"

namespace ccus {

Dictionary make_circulant(const Vector& kernel) {
  const Index n = kernel.size();
  if (n < 1) fail_config("circulant kernel must be nonempty");
  Dictionary d;
  d.matrix.resize(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) d.matrix(i, j) = kernel(((i - j) % n + n) % n);
  d.circulant_kernel = kernel;
  return d;
}

Vector calcium_kernel(Index n, double rise, double decay) {
  Vector k(n);
  for (Index t = 0; t < n; ++t) {
    const double s = static_cast<double>(t);
    k(t) = (1.0 - std::exp(-s / rise)) * std::exp(-s / decay);
  }
  const double norm = k.norm();
  if (norm > 0.0) k /= norm;
  return k;
}

namespace {

std::vector<std::vector<int>> draw_supports(const SynthSpec& spec, Index p, Rng& rng) {
  const int m = static_cast<int>(spec.m);
  const int k = static_cast<int>(spec.k_per_channel);
  std::vector<std::vector<int>> supports(static_cast<std::size_t>(m));
  switch (spec.support_mode) {
    case SupportMode::shared: {
      const auto s = sample_subset(rng, static_cast<int>(p), k);
      for (auto& sup : supports) sup = s;
      break;
    }
    case SupportMode::disjoint: {
      if (static_cast<Index>(m) * k > p)
        fail_config("disjoint supports need M * k_per_channel <= p");
      auto pool = sample_subset(rng, static_cast<int>(p), m * k);
      std::shuffle(pool.begin(), pool.end(), rng);
      for (int c = 0; c < m; ++c) {
        auto& sup = supports[static_cast<std::size_t>(c)];
        sup.assign(pool.begin() + c * k, pool.begin() + (c + 1) * k);
        std::sort(sup.begin(), sup.end());
      }
      break;
    }
    case SupportMode::overlapping: {
      const int shared = static_cast<int>(spec.shared_count);
      if (shared < 0 || shared > k)
        fail_config("overlapping supports need 0 <= shared_count <= k_per_channel");
      const int own = k - shared;
      if (shared + static_cast<Index>(m) * own > p)
        fail_config("overlapping supports do not fit into p columns");
      auto pool = sample_subset(rng, static_cast<int>(p), shared + m * own);
      std::shuffle(pool.begin(), pool.end(), rng);
      for (int c = 0; c < m; ++c) {
        auto& sup = supports[static_cast<std::size_t>(c)];
        sup.assign(pool.begin(), pool.begin() + shared);
        sup.insert(sup.end(), pool.begin() + shared + c * own,
                   pool.begin() + shared + (c + 1) * own);
        std::sort(sup.begin(), sup.end());
      }
      break;
    }
  }
  return supports;
}

}  // namespace

SynthInstance synth_instance(const SynthSpec& spec) {
  if (spec.n < 1 || spec.m < 1) fail_config("synthetic instance needs n, m >= 1");
  if (spec.k_per_channel < 1) fail_config("k_per_channel must be positive");
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SynthInstance inst;
  if (spec.dictionary_mode == DictionaryMode::circulant_from_kernel) {
    const Vector kernel = spec.kernel ? *spec.kernel : calcium_kernel(spec.n);
    if (kernel.size() != spec.n) fail_config("kernel length must equal n");
    inst.dict = make_circulant(kernel);
  } else {
    if (spec.p < 1) fail_config("p must be positive");
    inst.dict.matrix.resize(spec.n, spec.p);
    for (Index j = 0; j < spec.p; ++j)
      for (Index i = 0; i < spec.n; ++i) inst.dict.matrix(i, j) = gauss(rng);
  }
  const Matrix& d = inst.dict.matrix;
  const Index p = d.cols();
  if (spec.k_per_channel > p) fail_config("k_per_channel exceeds p");

  std::uniform_real_distribution<double> magnitude(0.5, 2.0);
  std::bernoulli_distribution coin(0.5);
  Matrix clean(spec.n, spec.m);
  for (int attempt = 0;; ++attempt) {
    if (attempt == 1000) fail_config("could not draw a valid synthetic instance");
    const auto supports = draw_supports(spec, p, rng);
    inst.betas.assign(static_cast<std::size_t>(spec.m), Vector::Zero(p));
    for (Index c = 0; c < spec.m; ++c)
      for (int j : supports[static_cast<std::size_t>(c)])
        inst.betas[static_cast<std::size_t>(c)](j) = (coin(rng) ? 1.0 : -1.0) * magnitude(rng);
    // no cancellation on the union support
    Vector total = Vector::Zero(p);
    std::vector<bool> in_union(static_cast<std::size_t>(p), false);
    for (Index c = 0; c < spec.m; ++c) {
      total += inst.betas[static_cast<std::size_t>(c)];
      for (int j : supports[static_cast<std::size_t>(c)]) in_union[static_cast<std::size_t>(j)] = true;
    }
    bool cancelled = false;
    for (Index j = 0; j < p; ++j)
      if (in_union[static_cast<std::size_t>(j)] && std::abs(total(j)) < 1e-3) cancelled = true;
    if (cancelled) continue;
    for (Index c = 0; c < spec.m; ++c) clean.col(c) = d * inst.betas[static_cast<std::size_t>(c)];
    bool distinct = true;
    for (Index a = 0; a < spec.m; ++a)
      for (Index b = a + 1; b < spec.m; ++b)
        if (clean.col(a) == clean.col(b)) distinct = false;
    if (distinct) break;
  }

  Matrix noisy = clean;
  if (std::isfinite(spec.snr_db)) {
    for (Index c = 0; c < spec.m; ++c) {
      const double power = clean.col(c).squaredNorm() / static_cast<double>(spec.n);
      const double sd = std::sqrt(power * std::pow(10.0, -spec.snr_db / 10.0));
      for (Index i = 0; i < spec.n; ++i) noisy(i, c) += sd * gauss(rng);
    }
  }
  inst.clean = MultiChannelSignal(std::move(clean));
  inst.x = MultiChannelSignal(std::move(noisy));
  return inst;
}

}  // namespace ccus
