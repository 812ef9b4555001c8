#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "causalot/simplex.hpp"
#include "causalot/transport.hpp"

using namespace causalot;

TEST_CASE("a pinned variable solves trivially") {
  LinearProgram<double> lp;
  lp.A = MatrixS<double>::Ones(1, 1);
  lp.b = VectorS<double>::Ones(1);
  lp.c = VectorS<double>::Ones(1);
  auto res = solve_lp(lp);
  CHECK(res.status == LpStatus::Optimal);
  CHECK(res.value == doctest::Approx(1.0));
  CHECK(res.x(0) == doctest::Approx(1.0));
}

TEST_CASE("negative right-hand side with nonnegative variables is infeasible") {
  LinearProgram<double> lp;
  lp.A = MatrixS<double>::Ones(1, 2);
  lp.b = -VectorS<double>::Ones(1);
  lp.c = VectorS<double>::Ones(2);
  CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("an unbounded ray is reported") {
  // min -x1 with x1 - x2 = 0
  LinearProgram<double> lp;
  lp.A = MatrixS<double>::Zero(1, 2);
  lp.A(0, 0) = 1;
  lp.A(0, 1) = -1;
  lp.b = VectorS<double>::Zero(1);
  lp.c = VectorS<double>::Zero(2);
  lp.c(0) = -1;
  CHECK(solve_lp(lp).status == LpStatus::Unbounded);
}

TEST_CASE("redundant duplicate rows are tolerated") {
  LinearProgram<double> lp;
  lp.A = MatrixS<double>::Ones(3, 2);
  lp.b = VectorS<double>::Ones(3);
  lp.c = VectorS<double>::Zero(2);
  lp.c(1) = 2;
  auto res = solve_lp(lp);
  CHECK(res.status == LpStatus::Optimal);
  CHECK(res.value == doctest::Approx(0.0));
  CHECK(res.x(0) == doctest::Approx(1.0));
}

TEST_CASE("exact transport on fractional margins") {
  MatrixS<Rational> C(2, 2);
  C << Rational(0), Rational(1), Rational(1), Rational(0);
  VectorS<Rational> r(2), c(2);
  r << Rational(1, 3), Rational(2, 3);
  c << Rational(1, 2), Rational(1, 2);
  auto res = solve_transport(C, r, c);
  CHECK(res.value == Rational(1, 6));
  CHECK(res.plan(0, 0) == Rational(1, 3));
  CHECK(res.plan(1, 0) == Rational(1, 6));
}

TEST_CASE("assignment problems match the permutation oracle") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> unif(0.0, 10.0);
  for (int n : {2, 3, 4, 5, 6}) {
    MatrixS<double> C(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = unif(rng);
    VectorS<double> ones = VectorS<double>::Ones(n);
    auto res = solve_transport(C, ones, ones);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e18;
    do {
      double v = 0;
      for (int i = 0; i < n; ++i) v += C(i, perm[(std::size_t)i]);
      best = std::min(best, v);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(res.value == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("degenerate ties terminate under the smallest-index rule") {
  // many equal-cost alternatives and a fully degenerate corner
  MatrixS<double> C = MatrixS<double>::Ones(4, 4);
  VectorS<double> r(4), c(4);
  r << 0.25, 0.25, 0.25, 0.25;
  c << 0.25, 0.25, 0.25, 0.25;
  auto res = solve_transport(C, r, c);
  CHECK(res.value == doctest::Approx(1.0));
}

TEST_CASE("dirac to dirac transport is the forced pair") {
  MatrixS<double> C(1, 1);
  C(0, 0) = 3.5;
  VectorS<double> one = VectorS<double>::Ones(1);
  auto res = solve_transport(C, one, one);
  CHECK(res.value == doctest::Approx(3.5));
  CHECK(res.plan(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("mismatched margin totals are rejected") {
  MatrixS<double> C = MatrixS<double>::Zero(2, 2);
  VectorS<double> r(2), c(2);
  r << 0.5, 0.5;
  c << 0.5, 0.6;
  try {
    solve_transport(C, r, c);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WeightSumOff);
  }
}

TEST_CASE("exact pivoting keeps rational optima exact") {
  // random small instances: double and exact solves agree to float precision
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> numer(0, 20);
  for (int trial = 0; trial < 5; ++trial) {
    MatrixS<Rational> C(3, 3);
    MatrixS<double> Cd(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        int v = numer(rng);
        C(i, j) = Rational(v, 7);
        Cd(i, j) = double(v) / 7.0;
      }
    VectorS<Rational> r(3), c(3);
    r << Rational(1, 6), Rational(1, 3), Rational(1, 2);
    c << Rational(1, 4), Rational(1, 4), Rational(1, 2);
    VectorS<double> rd(3), cd(3);
    rd << 1.0 / 6, 1.0 / 3, 1.0 / 2;
    cd << 0.25, 0.25, 0.5;
    auto exact = solve_transport(C, r, c);
    auto fl = solve_transport(Cd, rd, cd);
    CHECK(fl.value == doctest::Approx(to_double(exact.value)).epsilon(1e-9));
  }
}
