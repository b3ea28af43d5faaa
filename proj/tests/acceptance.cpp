// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ccus/benchmark.hpp"
#include "ccus/io.hpp"
#include "ccus/metrics.hpp"
#include "ccus/pipeline.hpp"
#include "ccus/rfrp.hpp"
#include "ccus/robust_fit.hpp"
#include "ccus/signal_model.hpp"
#include "ccus/sparse_support.hpp"
#include "oracles.hpp"

using namespace ccus;

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

// 1. unique recovery by enumeration when both channels share a 2-dim subspace
void oracle_suite(Outcome& out) {
  const auto t0 = std::chrono::steady_clock::now();
  int unique = 0, rfrp_ok = 0, matches_truth = 0;
  const int instances = 200;
  for (int i = 0; i < instances; ++i) {
    const auto seed = static_cast<unsigned>(i);
    const Index n = 6 + i % 5;
    const Matrix e = oracle::gaussian(n, 2, 10'000 + seed);
    rfrp_ok += check_k_rfrp(e, 2, RfrpMode::exhaustive, 0, 0).passed ? 1 : 0;
    Matrix x(n, 2);
    x.col(0) = e * oracle::gaussian(2, 1, 20'000 + seed).col(0);
    x.col(1) = e * oracle::gaussian(2, 1, 30'000 + seed).col(0);
    const MultiChannelSignal sig(x);
    const double fraction = 0.1 * (1 + i % 5);
    const auto s = random_shuffle(n, 2, {fraction, seed, ShuffleMode::pairwise_swap});
    const auto res = brute_force_oracle(apply_shuffle(sig, s), {e, e});
    if (!res.unique_up_to_relabeling || res.solutions.empty()) continue;
    ++unique;
    const MultiChannelSignal& found = res.solutions.front().signal;
    const Permutation sigma = best_relabeling(sig, found);
    matches_truth += max_abs(relabel(found, sigma).data() - x) <= 1e-8 * max_abs(x) ? 1 : 0;
  }
  const double secs = seconds_since(t0);
  out.detail << "unique " << unique << "/" << instances << ", K-RFRP " << rfrp_ok << "/"
             << instances << ", equal to truth " << matches_truth << "/" << instances << ", "
             << secs << " s";
  out.require(rfrp_ok == instances, "K-RFRP of every basis");
  out.require(unique == instances, "uniqueness in every instance");
  out.require(matches_truth == instances, "unique solution equals the generating signal");
  out.require(secs < 120.0, "runtime under 2 min");
}

// 2. sparsest-representation uniqueness and stability selection at SNR = inf
void support_suite(Outcome& out) {
  int unique = 0, krank_ok = 0, exact = 0;
  const int instances = 100;
  for (int i = 0; i < instances; ++i) {
    const auto seed = static_cast<unsigned>(i);
    const Matrix d = oracle::gaussian(16, 32, 40'000 + seed);
    const Index k = 1 + i % 3;
    krank_ok += krank(d, 1'000'000, 2 * k).krank >= 2 * k ? 1 : 0;

    std::mt19937 rng(seed);
    std::vector<int> cols(32);
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(cols.begin(), cols.end(), rng);
    std::uniform_real_distribution<> mag(0.5, 2.0);
    std::bernoulli_distribution neg(0.5);
    Vector b1 = Vector::Zero(32), b2 = Vector::Zero(32);
    if (k == 1) {  // both channels on one atom, same sign so the sum cannot cancel
      b1(cols[0]) = mag(rng);
      b2(cols[0]) = 0.5 * mag(rng);
    } else {
      for (Index j = 0; j < k; ++j) {
        const double v = neg(rng) ? -mag(rng) : mag(rng);
        (j % 2 == 0 ? b1 : b2)(cols[static_cast<std::size_t>(j)]) = v;
      }
    }
    unique += oracle_support_uniqueness(d, {b1, b2}) ? 1 : 0;

    Matrix x(16, 2);
    x << d * b1, d * b2;
    const auto y = apply_shuffle(MultiChannelSignal(x),
                                 random_shuffle(16, 2, {0.3, seed, ShuffleMode::pairwise_swap}));
    std::vector<int> truth(cols.begin(), cols.begin() + k);
    std::sort(truth.begin(), truth.end());
    StabilityConfig cfg;
    cfg.seed = seed;
    try {
      exact += stability_select(d, channel_sum(y), cfg).indices == truth ? 1 : 0;
    } catch (const Error&) {
    }
  }
  out.detail << "krank >= 2K " << krank_ok << "/" << instances << ", unique " << unique << "/"
             << instances << ", exact support " << exact << "/" << instances;
  out.require(krank_ok == instances, "krank at least 2K");
  out.require(unique == instances, "uniqueness in every instance");
  out.require(exact >= 95, "exact support in at least 95%");
}

// KKT violation from the stationarity conditions, 1/(2N) scaling
double kkt_violation(const Matrix& d, const Vector& y, const Vector& beta, double lambda) {
  const double n = static_cast<double>(d.rows());
  double worst = 0.0;
  for (Index j = 0; j < d.cols(); ++j) {
    const double g = d.col(j).dot(y - d * beta) / n;
    const double v = beta(j) != 0.0 ? std::abs(g - (beta(j) > 0 ? lambda : -lambda))
                                    : std::max(0.0, std::abs(g) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

// 3. lasso optimality and the orthonormal closed form
void lasso_suite(Outcome& out) {
  double worst_kkt = 0.0;
  std::mt19937 rng(3);
  for (unsigned seed = 0; seed < 100; ++seed) {
    const Index n = 20 + seed % 30, p = 30 + (seed * 7) % 70;
    const Matrix d = oracle::gaussian(n, p, 50'000 + seed);
    const Vector y = oracle::gaussian(n, 1, 60'000 + seed).col(0);
    const double lambda = lambda_max(d, y) * std::uniform_real_distribution<>(0.01, 0.9)(rng);
    const auto fit = lasso(d, y, {lambda, 100'000, 1e-9});
    worst_kkt = std::max(worst_kkt, kkt_violation(d, y, fit.coefficients, lambda));
  }
  double worst_closed = 0.0;
  for (unsigned seed = 0; seed < 20; ++seed) {
    const Index n = 40, p = 12;
    const Matrix q = oracle::gaussian(n, p, 70'000 + seed).householderQr().householderQ() *
                     Matrix::Identity(n, p);
    const Vector y = oracle::gaussian(n, 1, 80'000 + seed).col(0);
    const double lambda = 0.01 * (1 + seed % 5);
    const Vector beta = lasso(q, y, {lambda, 10'000, 1e-13}).coefficients;
    const Vector corr = q.transpose() * y;
    for (Index j = 0; j < p; ++j)
      worst_closed = std::max(worst_closed,
                              std::abs(beta(j) - oracle::soft(corr(j), static_cast<double>(n) * lambda)));
  }
  out.detail << "max KKT residual " << worst_kkt << ", max closed-form deviation " << worst_closed;
  out.require(worst_kkt <= 1e-6, "KKT residual <= 1e-6");
  out.require(worst_closed <= 1e-8, "closed form to 1e-8");
}

// 4. MM estimator against least squares on the known inliers
void mm_suite(Outcome& out) {
  const Index n = 200, q = 4;
  std::vector<double> errors;
  for (unsigned seed = 0; seed < 100; ++seed) {
    const Matrix a = oracle::gaussian(n, q, 90'000 + seed);
    const Vector beta = oracle::gaussian(q, 1, 91'000 + seed).col(0);
    Vector b = a * beta + 0.1 * oracle::gaussian(n, 1, 92'000 + seed).col(0);
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const Index n_out = 60;
    for (Index i = 0; i < n_out; ++i) b(idx[static_cast<std::size_t>(i)]) += 100.0 * 0.1;
    Matrix ai(n - n_out, q);
    Vector bi(n - n_out);
    for (Index i = n_out; i < n; ++i) {
      ai.row(i - n_out) = a.row(idx[static_cast<std::size_t>(i)]);
      bi(i - n_out) = b(idx[static_cast<std::size_t>(i)]);
    }
    const Vector ls_inliers = ai.colPivHouseholderQr().solve(bi);
    MmConfig cfg;
    cfg.seed = seed;
    errors.push_back((mm_estimate(a, b, cfg).coefficients - ls_inliers).cwiseAbs().maxCoeff());
  }
  const double med = median(errors);

  // equivariance on one contaminated problem
  const Matrix a = oracle::gaussian(80, 3, 7);
  Vector b = a * Vector::LinSpaced(3, -1.0, 2.0) + 0.1 * oracle::gaussian(80, 1, 8).col(0);
  for (Index i = 0; i < 16; ++i) b(5 * i) += 25.0;
  MmConfig cfg;
  cfg.seed = 11;
  const auto base = mm_estimate(a, b, cfg);
  const Vector shift = Vector::LinSpaced(3, 0.5, -0.5);
  Matrix t(3, 3);
  t << 2, 1, 0, 0, 1, 0, 1, 0, -1;
  const double regression =
      (mm_estimate(a, b + a * shift, cfg).coefficients - base.coefficients - shift).cwiseAbs().maxCoeff();
  const auto scaled = mm_estimate(a, -3.0 * b, cfg);
  const double scale = std::max((scaled.coefficients + 3.0 * base.coefficients).cwiseAbs().maxCoeff(),
                                std::abs(scaled.scale - 3.0 * base.scale));
  const double affine =
      (t * mm_estimate(a * t, b, cfg).coefficients - base.coefficients).cwiseAbs().maxCoeff();
  const double equi = std::max({regression, scale, affine});

  out.detail << "median l_inf error " << med << ", worst equivariance deviation " << equi;
  out.require(med <= 0.05, "median l_inf error <= 0.05");
  out.require(equi <= 1e-6, "equivariance to solver tolerance");
}

// 5. performance against the shuffle fraction on synthetic calcium traces
void end_to_end(Outcome& out) {
  BenchmarkSpec spec;
  spec.synth.snr_db = 20.0;
  spec.synth.dictionary_mode = DictionaryMode::circulant_from_kernel;
  const int jobs = static_cast<int>(std::max(1u, std::min(4u, std::thread::hardware_concurrency())));
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = run_benchmark(spec, jobs);
  const double secs = seconds_since(t0);

  const auto& s = res.summary;
  auto at = [&](double f) -> const BenchmarkSummary& {
    return *std::find_if(s.begin(), s.end(), [&](const auto& e) { return std::abs(e.fraction - f) < 1e-9; });
  };
  out.detail << "median R^2 (pipeline/robust only/LS clean):";
  for (const auto& e : s)
    out.detail << " " << e.fraction << ": " << e.median_r2 << "/" << e.median_mm_only_r2 << "/"
               << e.median_ls_clean_r2;
  out.detail << "; " << secs << " s on " << jobs << " worker(s)";

  const double r0 = at(0.0).median_r2;
  out.require(std::abs(r0 - at(0.0).median_ls_clean_r2) <= 0.01, "fraction 0 within 0.01 of LS on clean traces");
  for (const auto& e : s)
    if (e.fraction <= 0.3 + 1e-9 && std::abs(e.median_r2 - r0) > 0.05)
      out.require(false, "fraction " + format_double(e.fraction) + " within 0.05 of fraction 0");
  out.require(at(0.3).median_r2 - at(0.5).median_r2 >= 0.05, "decline of at least 0.05 from 0.3 to 0.5");
  for (const auto& e : s)
    if (e.median_r2 < e.median_mm_only_r2)
      out.require(false, "pipeline below robust fit alone at " + format_double(e.fraction));
  out.require(secs < 600.0, "runtime under 10 min");
}

// 6. assignment metrics
void metric_suite(Outcome& out) {
  Matrix x(2, 2);
  x << 1.0, 0.0,
       0.0, 2.0;
  const MultiChannelSignal two(x);
  const double wa = weighted_accuracy(two, {false, true});
  out.require(std::abs(wa - 2.0 / 3.0) <= 1e-15, "hand example 2/3");

  bool extremes = true, invariant = true;
  for (unsigned seed = 0; seed < 100; ++seed) {
    const Index m = 2 + seed % 3, n = 5 + seed % 20;
    const MultiChannelSignal sig(oracle::gaussian(n, m, 100'000 + seed));
    const MultiChannelSignal pair(sig.data().leftCols(2));  // WA is defined for two channels
    extremes &= weighted_accuracy(pair, std::vector<bool>(static_cast<std::size_t>(n), true)) == 1.0;
    extremes &= weighted_accuracy(pair, std::vector<bool>(static_cast<std::size_t>(n), false)) == 0.0;
    const MultiChannelSignal est(sig.data() + 0.4 * oracle::gaussian(n, m, 110'000 + seed));
    const double base = r_squared(sig, est);
    for (const auto& p : all_permutations(static_cast<int>(m))) invariant &= r_squared(sig, relabel(est, p)) == base;
  }
  out.detail << "hand example " << wa << ", all-correct/all-wrong " << (extremes ? "ok" : "wrong")
             << ", relabeling invariance " << (invariant ? "exact" : "broken");
  out.require(extremes, "WA is 1 and 0 at the extremes");
  out.require(invariant, "R^2 relabeling invariance");
}

// 7. shuffle model invariants
void shuffle_suite(Outcome& out) {
  int rows_ok = 0, pi_ok = 0, vec_exact = 0;
  double worst_rel = 0.0;
  const int pairs = 1000;
  std::mt19937_64 rng(12);
  for (int i = 0; i < pairs; ++i) {
    const Index n = 3 + i % 10, m = 2 + i % 4;
    const MultiChannelSignal x(oracle::gaussian(n, m, 200'000 + static_cast<unsigned>(i)));
    const ShuffleMode mode = i % 2 ? ShuffleMode::uniform_permutation : ShuffleMode::pairwise_swap;
    const auto s = random_shuffle(n, m, {std::uniform_real_distribution<>(0.0, 1.0)(rng), rng(), mode});
    const auto y = apply_shuffle(x, s);

    bool rows = true;
    for (Index r = 0; r < n; ++r) {
      std::vector<double> a(x.data().row(r).begin(), x.data().row(r).end());
      std::vector<double> b(y.data().row(r).begin(), y.data().row(r).end());
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      rows &= a == b && std::accumulate(a.begin(), a.end(), 0.0) == std::accumulate(b.begin(), b.end(), 0.0);
    }
    rows_ok += rows ? 1 : 0;

    const Matrix pi = materialize_pi(s);
    bool perm = pi == oracle::pi_from_selection(s.assignment(), m);
    perm &= (pi.array() == 0.0 || pi.array() == 1.0).all();
    perm &= (pi.rowwise().sum().array() == 1.0).all() && (pi.colwise().sum().array() == 1.0).all();
    perm &= pi.transpose() * pi == Matrix::Identity(n * m, n * m);
    for (Index bi = 0; bi < m; ++bi)
      for (Index bj = 0; bj < m; ++bj) {
        Matrix blk = pi.block(bi * n, bj * n, n, n);
        blk.diagonal().setZero();
        perm &= blk.isZero(0.0);
      }
    pi_ok += perm ? 1 : 0;

    const Vector direct = y.vec();
    const Vector dense = pi * x.vec();
    const double dev = (direct - dense).cwiseAbs().maxCoeff();
    vec_exact += dev == 0.0 ? 1 : 0;
    worst_rel = std::max(worst_rel, dev / std::max(dense.cwiseAbs().maxCoeff(), 1e-300));
  }
  out.detail << "row conservation " << rows_ok << "/" << pairs << ", permutation matrix " << pi_ok
             << "/" << pairs << ", vec form exact " << vec_exact << "/" << pairs
             << " (worst relative " << worst_rel << ")";
  out.require(rows_ok == pairs, "row sums and multisets conserved");
  out.require(pi_ok == pairs, "Pi is a block-diagonal-structured permutation matrix");
  out.require(vec_exact == pairs || worst_rel <= 1e-12, "vec form equivalence");
}

// 8. RFRP checks
void rfrp_suite(Outcome& out) {
  const Matrix id_basis = Matrix::Identity(6, 6).leftCols(2);
  const auto basis_report = check_k_rfrp(id_basis, 3, RfrpMode::exhaustive, 0, 0);
  bool counterexample = !basis_report.passed && basis_report.witness.has_value() &&
                        oracle::rank(oracle::rows_cols(id_basis, basis_report.witness->rows,
                                                       basis_report.witness->cols)) < 2;
  const auto dict_report = check_kxk_rfrp(Matrix::Identity(8, 8), 2, 1'000, 1);
  counterexample &= !dict_report.passed && dict_report.witness.has_value() &&
                    oracle::rank(oracle::rows_cols(Matrix::Identity(8, 8), dict_report.witness->rows,
                                                   dict_report.witness->cols)) < 2;

  int gaussian_pass = 0, gaussian_total = 0;
  for (unsigned seed = 0; seed < 10; ++seed) {
    const Index n = 6 + seed % 5, k = 1 + seed % 3;
    const Matrix e = oracle::gaussian(n, k, 300'000 + seed);
    for (Index K = k; K <= n; ++K) {
      ++gaussian_total;
      const auto r = check_k_rfrp(e, K, RfrpMode::exhaustive, 0, 0);
      gaussian_pass += r.passed && r.n_submatrices_checked == binomial(n, K) ? 1 : 0;
    }
    ++gaussian_total;
    gaussian_pass += krank(oracle::gaussian(6, 10, 310'000 + seed), 1'000'000).krank == 6 ? 1 : 0;
  }

  bool reproducible = true;
  for (unsigned seed = 0; seed < 5; ++seed) {
    Matrix d = oracle::gaussian(20, 30, 320'000 + seed);
    if (seed % 2) d.col(static_cast<Index>(seed)).setZero();
    const std::string a = to_json(check_kxk_rfrp(d, 5, 2'000, seed)).dump();
    reproducible &= a == to_json(check_kxk_rfrp(d, 5, 2'000, seed)).dump();
    reproducible &= a == to_json(check_kxk_rfrp(d, 5, 2'000, seed, 3)).dump();
    const std::string b = to_json(check_k_rfrp(d.leftCols(3), 5, RfrpMode::randomized, 500, seed)).dump();
    reproducible &= b == to_json(check_k_rfrp(d.leftCols(3), 5, RfrpMode::randomized, 500, seed, 2)).dump();
  }
  out.detail << "identity counterexample " << (counterexample ? "found" : "missed") << ", Gaussian exhaustive "
             << gaussian_pass << "/" << gaussian_total << ", randomized reports "
             << (reproducible ? "identical" : "differ");
  out.require(counterexample, "identity counterexample");
  out.require(gaussian_pass == gaussian_total, "Gaussian matrices pass");
  out.require(reproducible, "byte-identical randomized reports");
}

}  // namespace

// Arguments, if any, select criteria by number.
int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<void(Outcome&)>>> criteria{
      {1, oracle_suite}, {2, support_suite}, {3, lasso_suite}, {4, mm_suite},
      {5, end_to_end},   {6, metric_suite},  {7, shuffle_suite}, {8, rfrp_suite}};
  bool all = true;
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  for (const auto& [id, run] : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), id) == wanted.end()) continue;
    Outcome out;
    try {
      run(out);
    } catch (const std::exception& e) {
      out.passed = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    all &= out.passed;
    std::printf("criterion %d: %s  %s\n", id, out.passed ? "PASS" : "FAIL", out.detail.str().c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
