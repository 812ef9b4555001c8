// simplex.hpp -- bundled dense two-phase tableau simplex for equality-form
// problems min c.x s.t. Ax = b, x >= 0. Bland's smallest-index rule for both
// entering and leaving variables gives anti-cycling and determinism; with
// S = Rational every pivot is exact.
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "causalot/error.hpp"
#include "causalot/metric.hpp"
#include "causalot/rational.hpp"

namespace causalot {

template <class S>
using VectorS = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
struct LinearProgram {
  MatrixS<S> A;  // m x n equality rows
  VectorS<S> b;
  VectorS<S> c;                    // minimized
  std::vector<std::string> names;  // optional, one per variable

  Eigen::Index vars() const { return A.cols(); }
  Eigen::Index rows() const { return A.rows(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

template <class S>
struct LpResult {
  LpStatus status = LpStatus::Optimal;
  S value = S(0);
  VectorS<S> x;
  long iterations = 0;
};

namespace detail {

// One simplex run on a tableau already in canonical form for `basis`.
// cost covers all tableau columns; only columns < ncols may enter.
// Returns false on unboundedness.
template <class S>
bool simplex_loop(MatrixS<S>& T, std::vector<Eigen::Index>& basis, const VectorS<S>& cost,
                  Eigen::Index ncols, const S& eps, long& iters, long max_iter) {
  const Eigen::Index m = T.rows();
  const Eigen::Index rhs = T.cols() - 1;
  for (;;) {
    if (++iters > max_iter) fail(ErrorCode::CapExceeded, "simplex iteration limit reached");
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < ncols && enter < 0; ++j) {
      S rj = cost(j);
      for (Eigen::Index i = 0; i < m; ++i)
        if (cost(basis[(std::size_t)i]) != S(0)) rj -= cost(basis[(std::size_t)i]) * T(i, j);
      if (rj < -eps) enter = j;
    }
    if (enter < 0) return true;
    Eigen::Index leave = -1;
    S best = S(0);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (T(i, enter) > eps) {
        S ratio = T(i, rhs) / T(i, enter);
        if (leave < 0 || ratio < best ||
            (ratio == best && basis[(std::size_t)i] < basis[(std::size_t)leave])) {
          leave = i;
          best = ratio;
        }
      }
    }
    if (leave < 0) return false;
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index r = 0; r < m; ++r)
      if (r != leave && T(r, enter) != S(0)) T.row(r) -= T(r, enter) * T.row(leave);
    basis[(std::size_t)leave] = enter;
  }
}

}  // namespace detail

template <class S>
LpResult<S> solve_lp(const LinearProgram<S>& lp, double tol = 1e-9, long max_iter = 1000000) {
  const Eigen::Index m = lp.A.rows(), n = lp.A.cols();
  if (lp.b.size() != m || lp.c.size() != n)
    fail(ErrorCode::DimensionMismatch, "objective or right-hand side does not match the matrix");
  const S eps = ScalarOps<S>::exact ? S(0) : ScalarOps<S>::from_double(tol);
  LpResult<S> res;

  // phase 1 tableau with one artificial per row
  MatrixS<S> T = MatrixS<S>::Zero(m, n + m + 1);
  std::vector<Eigen::Index> basis((std::size_t)m);
  for (Eigen::Index i = 0; i < m; ++i) {
    S sign = lp.b(i) < S(0) ? S(-1) : S(1);
    T.block(i, 0, 1, n) = sign * lp.A.row(i);
    T(i, n + i) = S(1);
    T(i, n + m) = sign * lp.b(i);
    basis[(std::size_t)i] = n + i;
  }
  VectorS<S> phase1 = VectorS<S>::Zero(n + m + 1);
  for (Eigen::Index j = n; j < n + m; ++j) phase1(j) = S(1);
  if (!detail::simplex_loop(T, basis, phase1, n + m, eps, res.iterations, max_iter))
    fail(ErrorCode::Unbounded, "phase-1 problem reported unbounded");
  S infeas = S(0);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[(std::size_t)i] >= n) infeas += T(i, n + m);
  if (infeas > eps) {
    res.status = LpStatus::Infeasible;
    return res;
  }

  // drive remaining artificials out of the basis; rows that cannot pivot are
  // redundant and get dropped together with all artificial columns
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[(std::size_t)i] < n) {
      keep.push_back(i);
      continue;
    }
    Eigen::Index col = -1;
    for (Eigen::Index j = 0; j < n && col < 0; ++j)
      if (ScalarOps<S>::abs(T(i, j)) > eps) col = j;
    if (col < 0) continue;  // 0 = 0 row
    T.row(i) /= T(i, col);
    for (Eigen::Index r = 0; r < m; ++r)
      if (r != i && T(r, col) != S(0)) T.row(r) -= T(r, col) * T.row(i);
    basis[(std::size_t)i] = col;
    keep.push_back(i);
  }
  MatrixS<S> T2((Eigen::Index)keep.size(), n + 1);
  std::vector<Eigen::Index> basis2;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    T2.block((Eigen::Index)k, 0, 1, n) = T.block(keep[k], 0, 1, n);
    T2((Eigen::Index)k, n) = T(keep[k], n + m);
    basis2.push_back(basis[(std::size_t)keep[k]]);
  }

  VectorS<S> phase2 = VectorS<S>::Zero(n + 1);
  phase2.head(n) = lp.c;
  if (!detail::simplex_loop(T2, basis2, phase2, n, eps, res.iterations, max_iter)) {
    res.status = LpStatus::Unbounded;
    return res;
  }

  res.x = VectorS<S>::Zero(n);
  for (std::size_t k = 0; k < basis2.size(); ++k) res.x(basis2[k]) = T2((Eigen::Index)k, n);
  res.value = lp.c.dot(res.x);
  res.status = LpStatus::Optimal;
  return res;
}

}  // namespace causalot
