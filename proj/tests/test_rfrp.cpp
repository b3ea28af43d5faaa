#include <doctest.h>

#include "ccus/io.hpp"
#include "ccus/rfrp.hpp"
#include "ccus/synth.hpp"
#include "oracles.hpp"

using namespace ccus;

namespace {

bool witness_reverifies(const Matrix& a, const RfrpReport& r) {
  if (r.passed) return !r.witness.has_value();
  if (!r.witness) return false;
  const Matrix sub = oracle::rows_cols(a, r.witness->rows, r.witness->cols);
  return numerical_rank(sub) == r.witness->rank &&
         r.witness->rank < static_cast<Index>(r.witness->cols.size());
}

}  // namespace

TEST_CASE("binomial") {
  CHECK(binomial(8, 3) == 56);
  CHECK(binomial(32, 6) == 906192);
  CHECK(binomial(5, 7) == 0);
  CHECK(binomial(200, 100) == UINT64_MAX);
}

TEST_CASE("full column rank decision agrees with the SVD rank") {
  for (unsigned seed = 0; seed < 50; ++seed) {
    Matrix a = oracle::gaussian(6, 4, seed);
    if (seed % 3 == 0) a.col(3) = a.col(0) + 2.0 * a.col(1);
    if (seed % 5 == 0) a.col(2) *= 1e-12;
    CHECK(has_full_column_rank(a) == (numerical_rank(a) == 4));
  }
}

TEST_CASE("K-RFRP: identity columns fail through a zero submatrix") {
  const Matrix e = Matrix::Identity(4, 4).leftCols(2);
  const auto r = check_k_rfrp(e, 2, RfrpMode::exhaustive, 0, 0);
  CHECK_FALSE(r.passed);
  REQUIRE(r.witness);
  CHECK(witness_reverifies(e, r));
  // rows {2,3} form the zero block; any failing pair must avoid one unit row
  const Matrix sub = oracle::rows_cols(e, {2, 3}, {0, 1});
  CHECK(numerical_rank(sub) == 0);
}

TEST_CASE("K-RFRP: Gaussian 8x2 passes exhaustively at K = 3") {
  const Matrix e = oracle::gaussian(8, 2, 42);
  // independent enumeration of all C(8,3) = 56 row subsets
  int full = 0;
  for (const auto& rows : oracle::subsets(8, 3))
    full += oracle::rank(oracle::rows_cols(e, rows, {0, 1})) == 2 ? 1 : 0;
  REQUIRE(full == 56);
  const auto r = check_k_rfrp(e, 3, RfrpMode::exhaustive, 0, 0);
  CHECK(r.passed);
  CHECK(r.n_submatrices_checked == 56);
}

TEST_CASE("K-RFRP: k = K = N is a single rank test") {
  const Matrix good = oracle::gaussian(3, 3, 1);
  CHECK(check_k_rfrp(good, 3, RfrpMode::exhaustive, 0, 0).passed);
  Matrix bad = good;
  bad.col(2) = bad.col(0) - bad.col(1);
  const auto r = check_k_rfrp(bad, 3, RfrpMode::exhaustive, 0, 0);
  CHECK_FALSE(r.passed);
  CHECK(r.n_submatrices_checked == 1);
  CHECK(r.witness->rank == 2);
}

TEST_CASE("K-RFRP argument checks and the exhaustive cap") {
  const Matrix e = oracle::gaussian(6, 2, 3);
  CHECK_THROWS_AS(check_k_rfrp(e, 7, RfrpMode::exhaustive, 0, 0), Error);
  CHECK_THROWS_AS(check_k_rfrp(e, 1, RfrpMode::exhaustive, 0, 0), Error);
  const Matrix big = oracle::gaussian(60, 2, 3);
  CHECK_THROWS_AS(check_k_rfrp(big, 30, RfrpMode::exhaustive, 0, 0), Error);
  const auto r = check_k_rfrp(big, 30, RfrpMode::randomized, 500, 7);
  CHECK(r.passed);
  CHECK(r.mode == RfrpMode::randomized);
  CHECK(r.n_submatrices_checked == 500);
}

TEST_CASE("K-RFRP is monotone in K") {
  for (unsigned seed = 0; seed < 20; ++seed) {
    Matrix e = oracle::gaussian(7, 2, seed);
    // plant zeros so small K can fail
    e.block(0, 0, 3 + seed % 3, 1).setZero();
    bool passed_before = false;
    for (Index K = 2; K <= 7; ++K) {
      const auto r = check_k_rfrp(e, K, RfrpMode::exhaustive, 0, 0);
      CHECK(witness_reverifies(e, r));
      if (passed_before) CHECK(r.passed);
      passed_before = passed_before || r.passed;
    }
  }
}

TEST_CASE("KxK-RFRP on a random Gaussian 64x128 at K = 10") {
  const Matrix d = oracle::gaussian(64, 128, 9);
  const auto r = check_kxk_rfrp(d, 10, 10'000, 1);
  CHECK(r.passed);
  CHECK(r.n_submatrices_checked == 10'000);
  CHECK(r.property == RfrpProperty::kxk_square);
}

TEST_CASE("KxK-RFRP fails once a zero column is drawn") {
  Matrix d = oracle::gaussian(10, 12, 2);
  d.col(5).setZero();
  const auto r = check_kxk_rfrp(d, 3, 2'000, 4);
  CHECK_FALSE(r.passed);
  REQUIRE(r.witness);
  CHECK(std::find(r.witness->cols.begin(), r.witness->cols.end(), 5) != r.witness->cols.end());
  CHECK(witness_reverifies(d, r));
  CHECK_THROWS_AS(check_kxk_rfrp(d, 11, 10, 0), Error);
}

TEST_CASE("KxK-RFRP of the circulant calcium dictionary, recorded empirically") {
  const Dictionary d = make_circulant(calcium_kernel(121));
  for (Index K : {2, 5, 10, 20}) {
    const auto r = check_kxk_rfrp(d.matrix, K, 10'000, 17);
    MESSAGE("circulant calcium dictionary K=" << K << ": "
            << (r.passed ? "pass" : "fail") << " after " << r.n_submatrices_checked);
    CHECK(witness_reverifies(d.matrix, r));
  }
}

TEST_CASE("Kxk-RFRP") {
  SUBCASE("random Gaussian 32x64 at K = 6 passes") {
    const Matrix d = oracle::gaussian(32, 64, 21);
    const auto r = check_kxk_lower_rfrp(d, 6, 6'000, 3);
    CHECK(r.passed);
    CHECK(r.n_submatrices_checked == 6'000);
  }
  SUBCASE("duplicate columns fail at k = 2") {
    Matrix d = oracle::gaussian(6, 4, 5);
    d.col(3) = d.col(1);
    const auto r = check_kxk_lower_rfrp(d, 3, 50'000, 8);
    CHECK_FALSE(r.passed);
    REQUIRE(r.witness);
    CHECK(witness_reverifies(d, r));
    const auto& cols = r.witness->cols;
    CHECK(std::find(cols.begin(), cols.end(), 1) != cols.end());
    CHECK(std::find(cols.begin(), cols.end(), 3) != cols.end());
  }
  SUBCASE("a passing Kxk report implies KxK on the same draws") {
    for (unsigned seed = 0; seed < 5; ++seed) {
      const Matrix d = oracle::gaussian(12, 20, 30 + seed);
      const Index K = 4;
      const std::uint64_t draws = 200;
      const auto lower = check_kxk_lower_rfrp(d, K, draws * K, seed);
      const auto square = check_kxk_rfrp(d, K, draws, seed);
      if (lower.passed) CHECK(square.passed);
    }
    // and a failing square draw is seen by the lower check at the same index
    Matrix d = oracle::gaussian(5, 6, 1);
    d.col(2) = d.col(0);
    const auto square = check_kxk_rfrp(d, 3, 400, 77);
    const auto lower = check_kxk_lower_rfrp(d, 3, 400 * 3, 77);
    REQUIRE_FALSE(square.passed);
    CHECK_FALSE(lower.passed);
  }
}

TEST_CASE("randomized reports are reproducible byte for byte") {
  const Matrix d = oracle::gaussian(20, 30, 12);
  Matrix bad = d;
  bad.col(7).setZero();
  for (const Matrix* m : std::initializer_list<const Matrix*>{&d, &bad}) {
    const auto a = to_json(check_kxk_rfrp(*m, 5, 3'000, 99)).dump();
    const auto b = to_json(check_kxk_rfrp(*m, 5, 3'000, 99)).dump();
    const auto c = to_json(check_kxk_rfrp(*m, 5, 3'000, 99, 4)).dump();
    CHECK(a == b);
    CHECK(a == c);
    const auto e = to_json(check_kxk_lower_rfrp(*m, 5, 3'000, 99)).dump();
    const auto f = to_json(check_kxk_lower_rfrp(*m, 5, 3'000, 99, 3)).dump();
    CHECK(e == f);
  }
}

TEST_CASE("krank") {
  CHECK(krank(Matrix::Identity(5, 5), 1'000'000).krank == 5);
  CHECK(krank(Matrix::Identity(5, 5), 1'000'000).exact);

  Matrix rep = oracle::gaussian(4, 6, 3);
  rep.col(4) = rep.col(1);
  CHECK(krank(rep, 1'000'000).krank == 1);

  const Matrix g = oracle::gaussian(6, 10, 8);
  // independent check: every 6-subset of the 10 columns has rank 6
  bool all_full = true;
  for (const auto& cols : oracle::subsets(10, 6))
    all_full = all_full && oracle::rank(oracle::rows_cols(g, {0, 1, 2, 3, 4, 5}, cols)) == 6;
  REQUIRE(all_full);
  const auto k = krank(g, 1'000'000);
  CHECK(k.krank == 6);
  CHECK(k.exact);

  const auto capped = krank(oracle::gaussian(20, 40, 1), 1'000);
  CHECK_FALSE(capped.exact);
  CHECK(capped.krank == 2);  // C(40,2) = 780 fits the cap, C(40,3) = 9880 does not
}

TEST_CASE("krank ceiling gives a lower bound") {
  const Matrix g = oracle::gaussian(16, 32, 4);
  const auto r = krank(g, 1'000'000, 3);
  CHECK(r.krank == 3);
  CHECK_FALSE(r.exact);
}
