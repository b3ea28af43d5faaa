#include "ccus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ccus {

namespace {

void require_same_shape(const MultiChannelSignal& a, const MultiChannelSignal& b) {
  if (a.n_samples() != b.n_samples() || a.n_channels() != b.n_channels())
    fail_data("signals differ in shape");
}

double rss_under(const MultiChannelSignal& x_true, const MultiChannelSignal& x_hat,
                 const Permutation& sigma) {
  double rss = 0.0;
  for (Index m = 0; m < x_true.n_channels(); ++m)
    rss += (x_true.channel(m) - x_hat.channel(sigma[static_cast<std::size_t>(m)]))
               .squaredNorm();
  return rss;
}

}  // namespace

MultiChannelSignal relabel(const MultiChannelSignal& x_hat, const Permutation& relabeling) {
  if (!is_permutation(relabeling, static_cast<int>(x_hat.n_channels())))
    fail_data("relabeling is not a permutation of the channels");
  Matrix out(x_hat.n_samples(), x_hat.n_channels());
  for (Index m = 0; m < x_hat.n_channels(); ++m)
    out.col(m) = x_hat.channel(relabeling[static_cast<std::size_t>(m)]);
  return MultiChannelSignal(std::move(out));
}

double r_squared_fixed(const MultiChannelSignal& x_true, const MultiChannelSignal& x_hat) {
  require_same_shape(x_true, x_hat);
  const double rss = (x_true.data() - x_hat.data()).squaredNorm();
  const double tss = (x_true.data().array() - x_true.data().mean()).matrix().squaredNorm();
  if (rss == 0.0) return 1.0;
  if (tss == 0.0) fail_numerical("R^2 is undefined: the reference signal is constant");
  return 1.0 - rss / tss;
}

Permutation best_relabeling(const MultiChannelSignal& x_true, const MultiChannelSignal& x_hat) {
  require_same_shape(x_true, x_hat);
  if (x_true.n_channels() > 6) fail_config("best_relabeling supports up to 6 channels");
  Permutation best;
  double best_rss = std::numeric_limits<double>::infinity();
  for (const auto& sigma : all_permutations(static_cast<int>(x_true.n_channels()))) {
    const double rss = rss_under(x_true, x_hat, sigma);
    if (rss < best_rss) {
      best_rss = rss;
      best = sigma;
    }
  }
  return best;
}

double r_squared(const MultiChannelSignal& x_true, const MultiChannelSignal& x_hat) {
  return r_squared_fixed(x_true, relabel(x_hat, best_relabeling(x_true, x_hat)));
}

double weighted_accuracy(const MultiChannelSignal& x_true,
                         const std::vector<bool>& assignment_correct) {
  if (x_true.n_channels() != 2) fail_config("weighted accuracy is defined for two channels");
  if (static_cast<Index>(assignment_correct.size()) != x_true.n_samples())
    fail_data("one correctness flag per row is required");
  double num = 0.0;
  double den = 0.0;
  for (Index n = 0; n < x_true.n_samples(); ++n) {
    const double w = std::abs(x_true(n, 0) - x_true(n, 1));
    den += w;
    if (assignment_correct[static_cast<std::size_t>(n)]) num += w;
  }
  return den == 0.0 ? 1.0 : num / den;
}

std::vector<bool> correct_rows(const MultiChannelSignal& x_true,
                               const ChannelShuffle& true_shuffle,
                               const ChannelShuffle& estimated_shuffle,
                               const Permutation& relabeling) {
  const Index n_rows = x_true.n_samples();
  if (true_shuffle.n_samples() != n_rows || estimated_shuffle.n_samples() != n_rows)
    fail_data("shuffles and signal differ in length");
  std::vector<bool> ok(static_cast<std::size_t>(n_rows), true);
  for (Index n = 0; n < n_rows; ++n) {
    if ((x_true.data().row(n).array() == x_true(n, 0)).all()) continue;
    const auto& t = true_shuffle.row(n);
    const auto& e = estimated_shuffle.row(n);
    for (std::size_t m = 0; m < t.size(); ++m)
      if (e[m] != relabeling[static_cast<std::size_t>(t[m])]) {
        ok[static_cast<std::size_t>(n)] = false;
        break;
      }
  }
  return ok;
}

EvalReport evaluate(const MultiChannelSignal& x_true, const ChannelShuffle& true_shuffle,
                    const MultiChannelSignal& x_hat,
                    const ChannelShuffle& estimated_shuffle) {
  EvalReport report;
  report.relabeling = best_relabeling(x_true, x_hat);
  report.r_squared = r_squared_fixed(x_true, relabel(x_hat, report.relabeling));
  const auto count = [](const std::vector<bool>& v) {
    return static_cast<Index>(std::count(v.begin(), v.end(), true));
  };
  if (x_true.n_channels() == 2) {
    double best = -1.0;
    for (const auto& sigma : all_permutations(2)) {
      const auto ok = correct_rows(x_true, true_shuffle, estimated_shuffle, sigma);
      const double wa = weighted_accuracy(x_true, ok);
      if (wa > best) {
        best = wa;
        report.n_correct_rows = count(ok);
      }
    }
    report.weighted_accuracy = best;
  } else {
    report.n_correct_rows =
        count(correct_rows(x_true, true_shuffle, estimated_shuffle, report.relabeling));
  }
  return report;
}

}  // namespace ccus
