#include "ccus/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ccus/assignment.hpp"

namespace ccus {

namespace {

constexpr int kMaxEnumeratedChannels = 6;

double row_cost(const MultiChannelSignal& y, const MultiChannelSignal& fitted,
                Index n, const Permutation& p) {
  double c = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    const double d = y(n, p[m]) - fitted(n, static_cast<Index>(m));
    c += d * d;
  }
  return c;
}

struct ChannelFit {
  MultiChannelSignal fitted;
  std::vector<Vector> local;  // coefficients on the support, per channel
};

ChannelFit fit_channels(const MultiChannelSignal& y, const Matrix& e_hat,
                        bool robust, const MmConfig& mm,
                        const std::optional<Vector>& start) {
  const Index m = y.n_channels();
  const Index k = e_hat.cols();
  Vector stacked;
  if (robust) {
    MmConfig block_mm = mm;
    block_mm.diagonal_blocks = static_cast<int>(m);
    stacked = mm_estimate(stacked_design(e_hat, m), y.vec(), block_mm, start).coefficients;
  } else {
    stacked.resize(m * k);
    const auto qr = e_hat.colPivHouseholderQr();
    for (Index c = 0; c < m; ++c) stacked.segment(c * k, k) = qr.solve(Vector(y.channel(c)));
  }
  ChannelFit out;
  Matrix fitted(y.n_samples(), m);
  for (Index c = 0; c < m; ++c) {
    out.local.push_back(stacked.segment(c * k, k));
    fitted.col(c) = e_hat * out.local.back();
  }
  out.fitted = MultiChannelSignal(std::move(fitted));
  return out;
}

Vector stack(const std::vector<Vector>& parts) {
  Index total = 0;
  for (const auto& v : parts) total += v.size();
  Vector out(total);
  Index at = 0;
  for (const auto& v : parts) {
    out.segment(at, v.size()) = v;
    at += v.size();
  }
  return out;
}

bool channels_coincide(const MultiChannelSignal& x) {
  for (Index a = 0; a < x.n_channels(); ++a)
    for (Index b = a + 1; b < x.n_channels(); ++b) {
      const double scale = std::max({x.channel(a).norm(), x.channel(b).norm(), 1e-300});
      if ((x.channel(a) - x.channel(b)).norm() <= 1e-6 * scale) return true;
    }
  return false;
}

}  // namespace

Reassignment reassign_rows(const MultiChannelSignal& y,
                           const MultiChannelSignal& fitted) {
  if (y.n_samples() != fitted.n_samples() || y.n_channels() != fitted.n_channels())
    fail_data("observed and fitted signals differ in shape");
  const Index n_rows = y.n_samples();
  const int m = static_cast<int>(y.n_channels());
  std::vector<Permutation> rows(static_cast<std::size_t>(n_rows));
  if (m <= kMaxEnumeratedChannels) {
    const auto perms = all_permutations(m);
    for (Index n = 0; n < n_rows; ++n) {
      const Permutation* best = &perms.front();
      double best_cost = row_cost(y, fitted, n, *best);
      for (const auto& p : perms) {
        const double c = row_cost(y, fitted, n, p);
        if (c < best_cost) {
          best_cost = c;
          best = &p;
        }
      }
      rows[static_cast<std::size_t>(n)] = *best;
    }
  } else {
    Matrix cost(m, m);
    for (Index n = 0; n < n_rows; ++n) {
      for (int out = 0; out < m; ++out)
        for (int src = 0; src < m; ++src) {
          const double d = y(n, src) - fitted(n, out);
          cost(out, src) = d * d;
        }
      rows[static_cast<std::size_t>(n)] = solve_assignment(cost);
    }
  }
  ChannelShuffle perm(m, std::move(rows));
  return {apply_shuffle(y, perm), std::move(perm)};
}

SupportEstimate fixed_support(const Matrix& dict, std::vector<int> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  SupportEstimate s;
  s.selection_probabilities = Vector::Zero(dict.cols());
  for (int j : indices) {
    if (j < 0 || j >= dict.cols()) fail_config("support index out of range");
    s.selection_probabilities(j) = 1.0;
  }
  s.indices = std::move(indices);
  s.sensing_matrix = select_columns(dict, s.indices);
  return s;
}

RecoveryResult unshuffle_with_support(
    const MultiChannelSignal& y, const Matrix& dict, const SupportEstimate& support,
    const PipelineConfig& cfg, const std::optional<MultiChannelSignal>& initial_fit) {
  if (cfg.n_outer_iter < 1) fail_config("n_outer_iter must be at least 1");
  if (dict.rows() != y.n_samples())
    fail_data("dictionary has " + std::to_string(dict.rows()) +
              " rows but the signal has " + std::to_string(y.n_samples()) + " samples");
  const Matrix& e_hat = support.sensing_matrix;
  const Index n = y.n_samples();
  const Index m = y.n_channels();
  const Index k = e_hat.cols();
  if (k == 0) fail_numerical("empty support");
  if (has_full_column_rank(e_hat) == false)
    fail_numerical("estimated sensing matrix is rank deficient");

  RecoveryResult result;
  result.support = support;
  if (n < m * k)
    result.warnings.push_back("N = " + std::to_string(n) + " is below M*K = " +
                              std::to_string(m * k) +
                              "; uniqueness of the unshuffled signal is not guaranteed");
  if (n < 2 * k)
    result.warnings.push_back("N = " + std::to_string(n) + " is below 2K = " +
                              std::to_string(2 * k) +
                              "; the sparse support may not be unique");
  if (support.truncated)
    result.warnings.push_back("support truncated to the N most stable columns");

  // iteration 0: fit the observations as given
  ChannelFit fit;
  MultiChannelSignal current = y;
  ChannelShuffle current_perm = ChannelShuffle::identity(n, m);
  if (initial_fit) {
    if (initial_fit->n_samples() != n || initial_fit->n_channels() != m)
      fail_data("initial fit has the wrong shape");
    fit.fitted = *initial_fit;
    const auto qr = e_hat.colPivHouseholderQr();
    for (Index c = 0; c < m; ++c) fit.local.push_back(qr.solve(Vector(initial_fit->channel(c))));
  } else {
    fit = fit_channels(y, e_hat, true, cfg.mm, std::nullopt);
  }

  struct Snapshot {
    ChannelFit fit;
    MultiChannelSignal assigned;
    ChannelShuffle perm;
  };
  auto rss_of = [](const MultiChannelSignal& a, const MultiChannelSignal& b) {
    return (a.data() - b.data()).squaredNorm();
  };
  result.initial_fit = fit.fitted;
  result.per_iteration_rss.push_back(rss_of(current, fit.fitted));
  Snapshot best{fit, current, current_perm};
  double best_rss = result.per_iteration_rss.back();

  MmConfig refit_mm = cfg.mm;
  if (cfg.refit_s_subsamples >= 0) refit_mm.s_subsamples = cfg.refit_s_subsamples;
  for (int iter = 1; iter <= cfg.n_outer_iter; ++iter) {
    auto re = reassign_rows(y, fit.fitted);
    current = std::move(re.reassigned);
    current_perm = std::move(re.permutation);
    const bool robust = cfg.refit_mode == RefitMode::mm_each_iter;
    fit = fit_channels(current, e_hat, robust, refit_mm, stack(fit.local));
    const double rss = rss_of(current, fit.fitted);
    result.per_iteration_rss.push_back(rss);
    if (rss < best_rss) {
      best_rss = rss;
      best = Snapshot{fit, current, current_perm};
      result.best_iteration = iter;
    }
  }

  result.rss = best_rss;
  result.reconstructed = best.fit.fitted;
  result.reassigned = best.assigned;
  result.estimated_shuffle = invert_shuffle(best.perm);
  for (const auto& local : best.fit.local) {
    Vector full = Vector::Zero(dict.cols());
    for (Index i = 0; i < k; ++i) full(support.indices[static_cast<std::size_t>(i)]) = local(i);
    result.coefficients.push_back(std::move(full));
  }
  result.channel_relabeling = identity_permutation(static_cast<int>(m));
  if (m > 1 && channels_coincide(result.reconstructed)) {
    result.ambiguous_channels = true;
    result.warnings.push_back(
        "fitted channels coincide; the assignment between them is not identifiable");
  }
  return result;
}

RecoveryResult run_pipeline(const MultiChannelSignal& y, const Matrix& dict,
                            const PipelineConfig& cfg) {
  const SupportEstimate support = stability_select(dict, channel_sum(y), cfg.stability);
  std::optional<RfrpReport> gate;
  if (cfg.rfrp_gate != RfrpGate::none) {
    // the unshuffling argument needs rank on blocks of twice the support size
    const Index K = std::min<Index>(2 * static_cast<Index>(support.indices.size()),
                                    std::min(dict.rows(), dict.cols()));
    gate = cfg.rfrp_gate == RfrpGate::kxk_square
               ? check_kxk_rfrp(dict, K, cfg.rfrp_budget, cfg.seed)
               : check_kxk_lower_rfrp(dict, K, cfg.rfrp_budget, cfg.seed);
  }
  RecoveryResult result = unshuffle_with_support(y, dict, support, cfg);
  if (gate) {
    if (!gate->passed)
      result.warnings.push_back(to_string(gate->property) + " check failed at K = " +
                                std::to_string(gate->K));
    result.rfrp_gate = std::move(gate);
  }
  return result;
}

// ---------------------------------------------------------------------------
// brute-force oracles

namespace {

bool signals_match(const Matrix& a, const Matrix& b, const Permutation& sigma,
                   double tol) {
  // b[:, m] == a[:, sigma[m]]
  for (Index m = 0; m < a.cols(); ++m)
    if ((b.col(m) - a.col(sigma[static_cast<std::size_t>(m)])).cwiseAbs().maxCoeff() > tol)
      return false;
  return true;
}

bool shuffles_match(const ChannelShuffle& a, const ChannelShuffle& b,
                    const Permutation& sigma) {
  // b's channel m is a's channel sigma[m], so a.row(n) = sigma o b.row(n)
  for (Index n = 0; n < a.n_samples(); ++n)
    for (std::size_t m = 0; m < sigma.size(); ++m)
      if (a.row(n)[m] != sigma[static_cast<std::size_t>(b.row(n)[m])]) return false;
  return true;
}

}  // namespace

OracleResult brute_force_oracle(const MultiChannelSignal& y,
                                const std::vector<Matrix>& subspaces) {
  const Index n = y.n_samples();
  const int m = static_cast<int>(y.n_channels());
  if (static_cast<int>(subspaces.size()) != m)
    fail_config("need one subspace basis per channel");
  const auto perms = all_permutations(m);
  const auto per_row = static_cast<std::uint64_t>(perms.size());
  std::uint64_t total = 1;
  for (Index i = 0; i < n; ++i) {
    if (total > kOracleCap / per_row)
      fail_config("oracle enumeration of (" + std::to_string(perms.size()) + ")^" +
                  std::to_string(n) + " shuffles exceeds the cap");
    total *= per_row;
  }

  std::vector<Matrix> bases;
  for (const auto& e : subspaces) {
    if (e.rows() != n) fail_data("subspace basis has the wrong number of rows");
    const Eigen::ColPivHouseholderQR<Matrix> qr(e);
    const Index r = qr.rank();
    bases.push_back(Matrix(qr.householderQ()).leftCols(r));
  }
  auto member = [&](const Vector& x, int s) {
    const double norm = x.norm();
    if (norm == 0.0) return true;
    const Matrix& q = bases[static_cast<std::size_t>(s)];
    return (x - q * (q.transpose() * x)).norm() <= 1e-8 * norm;
  };

  OracleResult out;
  out.n_candidates = total;
  std::vector<std::size_t> digits(static_cast<std::size_t>(n), 0);
  Matrix x(n, m);
  std::vector<std::vector<char>> in_subspace(static_cast<std::size_t>(m),
                                             std::vector<char>(static_cast<std::size_t>(m)));
  for (std::uint64_t count = 0; count < total; ++count) {
    for (Index row = 0; row < n; ++row) {
      const auto& p = perms[digits[static_cast<std::size_t>(row)]];
      for (int c = 0; c < m; ++c) x(row, c) = y(row, p[static_cast<std::size_t>(c)]);
    }
    for (int c = 0; c < m; ++c)
      for (int s = 0; s < m; ++s)
        in_subspace[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)] =
            member(x.col(c), s);
    for (const auto& sigma : perms) {
      bool ok = true;
      for (int c = 0; c < m && ok; ++c)
        ok = in_subspace[static_cast<std::size_t>(c)][static_cast<std::size_t>(sigma[static_cast<std::size_t>(c)])];
      if (!ok) continue;
      std::vector<Permutation> rows;
      rows.reserve(static_cast<std::size_t>(n));
      for (Index row = 0; row < n; ++row)
        rows.push_back(inverse(perms[digits[static_cast<std::size_t>(row)]]));
      out.solutions.push_back({MultiChannelSignal(x), ChannelShuffle(m, std::move(rows)), sigma});
      break;
    }
    // advance the mixed-radix counter
    for (std::size_t d = 0; d < digits.size(); ++d) {
      if (++digits[d] < perms.size()) break;
      digits[d] = 0;
    }
  }

  const double scale = std::max(y.data().cwiseAbs().maxCoeff(), 1e-300);
  const double tol = 1e-9 * scale;
  out.unique_up_to_relabeling = !out.solutions.empty();
  std::vector<const Matrix*> distinct;
  for (const auto& sol : out.solutions) {
    const auto& ref = out.solutions.front();
    bool same = false;
    for (const auto& sigma : perms)
      if (signals_match(ref.signal.data(), sol.signal.data(), sigma, tol) &&
          shuffles_match(ref.shuffle, sol.shuffle, sigma)) {
        same = true;
        break;
      }
    if (!same) out.unique_up_to_relabeling = false;

    bool seen = false;
    for (const Matrix* d : distinct)
      for (const auto& sigma : perms)
        if (signals_match(*d, sol.signal.data(), sigma, tol)) seen = true;
    if (!seen) distinct.push_back(&sol.signal.data());
  }
  out.n_distinct_signals = static_cast<int>(distinct.size());
  return out;
}

bool oracle_support_uniqueness(const Matrix& dict, const std::vector<Vector>& betas,
                               std::uint64_t cap) {
  if (betas.empty()) fail_config("need at least one coefficient vector");
  Vector total = Vector::Zero(dict.cols());
  for (const auto& b : betas) {
    if (b.size() != dict.cols()) fail_data("coefficient vector length differs from p");
    total += b;
  }
  std::vector<int> true_support;
  for (Index j = 0; j < total.size(); ++j)
    if (total(j) != 0.0) true_support.push_back(static_cast<int>(j));
  const int K = static_cast<int>(true_support.size());
  if (K == 0) return true;

  const int p = static_cast<int>(dict.cols());
  std::uint64_t visits = 0;
  for (int k = 1; k <= K; ++k) {
    visits += binomial(static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(k));
    if (visits > cap) fail_config("support enumeration exceeds the cap");
  }

  const Vector target = dict * total;
  const double tol = 1e-9 * std::max(target.norm(), 1e-300);
  bool unique = true;
  for (int k = 1; k <= K && unique; ++k) {
    for_each_subset(p, k, [&](const std::vector<int>& s) {
      const Matrix sub = select_columns(dict, s);
      const auto qr = sub.colPivHouseholderQr();
      const Vector c = qr.solve(target);
      if ((sub * c - target).norm() > tol) return true;  // not representable
      if (s == true_support && qr.rank() == k) {
        // full-rank true support: the representation is the given one
        return true;
      }
      unique = false;
      return false;
    });
  }
  return unique;
}

}  // namespace ccus
