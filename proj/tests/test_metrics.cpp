#include <doctest.h>

#include <random>

#include "ccus/metrics.hpp"
#include "oracles.hpp"

using namespace ccus;

namespace {

MultiChannelSignal two(std::initializer_list<double> a, std::initializer_list<double> b) {
  Matrix x(static_cast<Index>(a.size()), 2);
  Index i = 0;
  for (double v : a) x(i++, 0) = v;
  i = 0;
  for (double v : b) x(i++, 1) = v;
  return MultiChannelSignal(x);
}

}  // namespace

TEST_CASE("weighted accuracy by hand") {
  const auto x = two({1.0, 0.0}, {0.0, 2.0});
  CHECK(weighted_accuracy(x, {false, true}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(weighted_accuracy(x, {true, true}) == 1.0);
  CHECK(weighted_accuracy(x, {false, false}) == 0.0);
  CHECK(weighted_accuracy(two({1.0, 1.0}, {1.0, 1.0}), {false, false}) == 1.0);
  CHECK(weighted_accuracy(two({1.0, 5.0}, {1.0, 2.0}), {false, true}) == 1.0);
  CHECK_THROWS_AS(weighted_accuracy(MultiChannelSignal(Matrix::Ones(2, 3)), {true, true}), Error);
}

TEST_CASE("weighted accuracy grows as rows become correct") {
  std::mt19937 rng(1);
  for (unsigned seed = 0; seed < 50; ++seed) {
    const MultiChannelSignal x(oracle::gaussian(15, 2, seed));
    std::vector<bool> ok(15, false);
    double prev = weighted_accuracy(x, ok);
    CHECK(prev == 0.0);
    std::vector<int> order(15);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int r : order) {
      ok[static_cast<std::size_t>(r)] = true;
      const double wa = weighted_accuracy(x, ok);
      CHECK(wa >= prev);
      CHECK(wa <= 1.0);
      prev = wa;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("r_squared") {
  const MultiChannelSignal x(oracle::gaussian(20, 3, 1));
  CHECK(r_squared(x, x) == 1.0);
  // predicting the global mean everywhere scores exactly 0
  const MultiChannelSignal mean(Matrix::Constant(20, 3, x.data().mean()));
  CHECK(std::abs(r_squared_fixed(x, mean)) <= 1e-14);
  CHECK(r_squared(MultiChannelSignal(Matrix::Ones(4, 2)), MultiChannelSignal(Matrix::Ones(4, 2))) ==
        1.0);
  CHECK_THROWS_AS(r_squared_fixed(MultiChannelSignal(Matrix::Ones(4, 2)),
                                  MultiChannelSignal(Matrix::Zero(4, 2))),
                  Error);

  // pooled definition computed directly
  const MultiChannelSignal h(x.data() + 0.3 * oracle::gaussian(20, 3, 2));
  const double rss = (x.data() - h.data()).squaredNorm();
  const double tss = (x.data().array() - x.data().mean()).matrix().squaredNorm();
  CHECK(r_squared_fixed(x, h) == doctest::Approx(1.0 - rss / tss).epsilon(1e-13));
}

TEST_CASE("r_squared is invariant under relabeling the estimate") {
  for (unsigned seed = 0; seed < 30; ++seed) {
    const Index m = 2 + seed % 3;
    const MultiChannelSignal x(oracle::gaussian(12, m, seed));
    const MultiChannelSignal h(x.data() + 0.5 * oracle::gaussian(12, m, seed + 100));
    const double base = r_squared(x, h);
    for (const auto& p : all_permutations(static_cast<int>(m)))
      CHECK(r_squared(x, relabel(h, p)) == base);
  }
  const MultiChannelSignal x(oracle::gaussian(10, 2, 9));
  CHECK(r_squared(x, relabel(x, {1, 0})) == 1.0);
  CHECK(best_relabeling(x, relabel(x, {1, 0})) == Permutation{1, 0});
  CHECK(best_relabeling(x, x) == Permutation{0, 1});
  const MultiChannelSignal same(Matrix::Ones(5, 3));
  CHECK(best_relabeling(same, same) == Permutation{0, 1, 2});
}

TEST_CASE("correct_rows and evaluate") {
  const auto x = two({1.0, 0.0, 3.0, 4.0}, {0.0, 2.0, 3.0, 1.0});
  const ChannelShuffle truth(2, {{1, 0}, {0, 1}, {1, 0}, {0, 1}});
  // estimate gets rows 0 and 3 right, row 2 has equal values
  const ChannelShuffle est(2, {{1, 0}, {1, 0}, {0, 1}, {0, 1}});
  const auto ok = correct_rows(x, truth, est, {0, 1});
  CHECK(ok == std::vector<bool>{true, false, true, true});

  const auto rep = evaluate(x, truth, x, est);
  CHECK(rep.r_squared == 1.0);
  CHECK(rep.n_correct_rows == 3);
  REQUIRE(rep.weighted_accuracy);
  CHECK(*rep.weighted_accuracy == doctest::Approx(1.0 - 2.0 / 6.0).epsilon(1e-14));

  // fully swapped estimate is perfect after relabeling
  const auto swapped = evaluate(x, truth, relabel(x, {1, 0}),
                                ChannelShuffle(2, {{0, 1}, {1, 0}, {0, 1}, {1, 0}}));
  CHECK(swapped.r_squared == 1.0);
  CHECK(*swapped.weighted_accuracy == 1.0);
  CHECK(swapped.relabeling == Permutation{1, 0});

  const MultiChannelSignal three(oracle::gaussian(4, 3, 1));
  CHECK_FALSE(evaluate(three, ChannelShuffle::identity(4, 3), three,
                       ChannelShuffle::identity(4, 3))
                  .weighted_accuracy);
}
