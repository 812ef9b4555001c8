#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "causalot/transport.hpp"

using namespace causalot;

namespace {

// north-west corner construction under explicit row/column orders; always a
// vertex of the polytope
template <class S>
MatrixS<S> nw_corner(VectorS<S> r, VectorS<S> c, const std::vector<int>& rorder,
                     const std::vector<int>& corder) {
  MatrixS<S> M = MatrixS<S>::Zero(r.size(), c.size());
  std::size_t ri = 0, ci = 0;
  while (ri < rorder.size() && ci < corder.size()) {
    int i = rorder[ri], j = corder[ci];
    S amount = r(i) < c(j) ? r(i) : c(j);
    M(i, j) = amount;
    r(i) -= amount;
    c(j) -= amount;
    if (!(r(i) > S(0)))
      ++ri;
    else
      ++ci;
  }
  return M;
}

template <class S>
bool contains_matrix(const std::vector<MatrixS<S>>& verts, const MatrixS<S>& M, double tol) {
  for (auto& V : verts) {
    bool same = true;
    for (Eigen::Index i = 0; i < M.rows() && same; ++i)
      for (Eigen::Index j = 0; j < M.cols() && same; ++j)
        if (!ScalarOps<S>::equal(V(i, j), M(i, j), tol)) same = false;
    if (same) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("two equal margins give the two permutation plans") {
  VectorS<double> h(2);
  h << 0.5, 0.5;
  auto verts = enumerate_vertices(h, h);
  CHECK(verts.size() == 2);
  for (auto& V : verts) {
    CHECK(V.sum() == doctest::Approx(1.0));
    int nnz = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (V(i, j) > 0) ++nnz;
    CHECK(nnz == 2);
  }
}

TEST_CASE("a dirac row margin leaves a single vertex") {
  VectorS<double> r(1), c(3);
  r << 1.0;
  c << 1.0 / 3, 1.0 / 3, 1.0 / 3;
  auto verts = enumerate_vertices(r, c);
  REQUIRE(verts.size() == 1);
  CHECK(verts[0](0, 1) == doctest::Approx(1.0 / 3));
}

TEST_CASE("uniform margins enumerate exactly the scaled permutation matrices") {
  for (int n : {3, 4}) {
    VectorS<Rational> u = VectorS<Rational>::Constant(n, Rational(1, n));
    auto verts = enumerate_vertices(u, u);
    std::size_t factorial = 1;
    for (int k = 2; k <= n; ++k) factorial *= (std::size_t)k;
    CHECK(verts.size() == factorial);
    for (auto& V : verts) {
      int nnz = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (V(i, j) != Rational(0)) {
            CHECK(V(i, j) == Rational(1, n));
            ++nnz;
          }
      CHECK(nnz == n);
    }
  }
}

TEST_CASE("the 2x2 fractional polytope has its two hand-computed vertices") {
  VectorS<Rational> r(2), c(2);
  r << Rational(1, 3), Rational(2, 3);
  c << Rational(1, 2), Rational(1, 2);
  auto verts = enumerate_vertices(r, c);
  REQUIRE(verts.size() == 2);
  MatrixS<Rational> A(2, 2), B(2, 2);
  A << Rational(1, 3), Rational(0), Rational(1, 6), Rational(1, 2);
  B << Rational(0), Rational(1, 3), Rational(1, 2), Rational(1, 6);
  CHECK(contains_matrix(verts, A, 0.0));
  CHECK(contains_matrix(verts, B, 0.0));
}

TEST_CASE("north-west corner solutions appear among the vertices") {
  VectorS<double> r(2), c(3);
  r << 0.5, 0.5;
  c << 1.0 / 3, 1.0 / 3, 1.0 / 3;
  auto verts = enumerate_vertices(r, c);
  std::vector<int> rorder{0, 1}, corder{0, 1, 2};
  do {
    std::vector<int> ro = rorder;
    do {
      auto M = nw_corner(r, c, ro, corder);
      CHECK(contains_matrix(verts, M, 1e-12));
    } while (std::next_permutation(ro.begin(), ro.end()));
  } while (std::next_permutation(corder.begin(), corder.end()));
}

TEST_CASE("every vertex satisfies the margins with a forest support") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    int R = 3, C = 4;
    VectorS<double> r(R), c(C);
    double tot = 0;
    for (int i = 0; i < R; ++i) {
      r(i) = unif(rng);
      tot += r(i);
    }
    double ct = 0;
    for (int j = 0; j < C; ++j) {
      c(j) = unif(rng);
      ct += c(j);
    }
    c *= tot / ct;
    auto verts = enumerate_vertices(r, c);
    CHECK(!verts.empty());
    for (auto& V : verts) {
      for (int i = 0; i < R; ++i) CHECK(V.row(i).sum() == doctest::Approx(r(i)).epsilon(1e-9));
      for (int j = 0; j < C; ++j) CHECK(V.col(j).sum() == doctest::Approx(c(j)).epsilon(1e-9));
      int nnz = 0;
      for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j)
          if (V(i, j) > 1e-12) ++nnz;
      CHECK(nnz <= R + C - 1);
    }
  }
}

TEST_CASE("the LP optimum equals the best enumerated vertex") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> unif(0.0, 5.0);
  for (int trial = 0; trial < 10; ++trial) {
    int R = 4, C = 4;
    MatrixS<double> cost(R, C);
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < C; ++j) cost(i, j) = unif(rng);
    VectorS<double> r(R), c(C);
    r << 0.1, 0.2, 0.3, 0.4;
    c << 0.25, 0.25, 0.25, 0.25;
    auto lp = solve_transport(cost, r, c);
    auto verts = enumerate_vertices(r, c);
    double best = 1e18;
    for (auto& V : verts) best = std::min(best, (cost.array() * V.array()).sum());
    CHECK(lp.value == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("dimension cap blocks oversized enumerations") {
  VectorS<double> r = VectorS<double>::Constant(7, 1.0 / 7);
  VectorS<double> c = VectorS<double>::Constant(2, 0.5);
  try {
    enumerate_vertices(r, c);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionCap);
  }
}
