// transport.hpp -- transportation polytopes: the standard optimal-transport
// LP over two margin vectors and exhaustive enumeration of the polytope's
// vertices (basic feasible solutions).
#pragma once

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "causalot/simplex.hpp"

namespace causalot {

template <class S>
struct TransportResult {
  S value = S(0);
  MatrixS<S> plan;
};

namespace detail {

template <class S>
void check_margins(const VectorS<S>& r, const VectorS<S>& c, double tol) {
  S sr = S(0), sc = S(0);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (r(i) < S(0)) fail(ErrorCode::NegativeWeight, "negative row margin");
    sr += r(i);
  }
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (c(j) < S(0)) fail(ErrorCode::NegativeWeight, "negative column margin");
    sc += c(j);
  }
  if (!ScalarOps<S>::equal(sr, sc, tol))
    fail(ErrorCode::WeightSumOff, "row and column margins carry different total mass");
}

}  // namespace detail

// Equality-form LP of the transportation problem; variables are plan entries
// in row-major order.
template <class S>
LinearProgram<S> transport_lp(const MatrixS<S>& C, const VectorS<S>& r, const VectorS<S>& c) {
  const Eigen::Index R = r.size(), Cc = c.size();
  if (C.rows() != R || C.cols() != Cc)
    fail(ErrorCode::DimensionMismatch, "cost matrix does not match the margins");
  LinearProgram<S> lp;
  lp.A = MatrixS<S>::Zero(R + Cc, R * Cc);
  lp.b = VectorS<S>::Zero(R + Cc);
  lp.c = VectorS<S>::Zero(R * Cc);
  for (Eigen::Index i = 0; i < R; ++i) {
    for (Eigen::Index j = 0; j < Cc; ++j) {
      lp.A(i, i * Cc + j) = S(1);
      lp.A(R + j, i * Cc + j) = S(1);
      lp.c(i * Cc + j) = C(i, j);
    }
    lp.b(i) = r(i);
  }
  for (Eigen::Index j = 0; j < Cc; ++j) lp.b(R + j) = c(j);
  return lp;
}

template <class S>
TransportResult<S> solve_transport(const MatrixS<S>& C, const VectorS<S>& r, const VectorS<S>& c,
                                   double tol = 1e-9) {
  detail::check_margins(r, c, tol);
  auto res = solve_lp(transport_lp(C, r, c), tol);
  if (res.status == LpStatus::Infeasible) fail(ErrorCode::Infeasible, "transport LP infeasible");
  if (res.status == LpStatus::Unbounded) fail(ErrorCode::Unbounded, "transport LP unbounded");
  TransportResult<S> out;
  out.value = res.value;
  out.plan = MatrixS<S>::Zero(r.size(), c.size());
  for (Eigen::Index i = 0; i < r.size(); ++i)
    for (Eigen::Index j = 0; j < c.size(); ++j) out.plan(i, j) = res.x(i * c.size() + j);
  return out;
}

namespace detail {

// Recursive greedy saturation with memoization on remaining margins. Every
// step allocates min(row, column) to one live cell and retires a line, so the
// chosen cells form a forest; the produced points are exactly the polytope's
// vertices (leaf-first orders of a vertex's support forest reproduce it).
template <class S>
struct VertexEnum {
  using Point = std::vector<std::pair<int, S>>;  // (row*C+col, value), cell-sorted
  int C = 0;
  std::size_t cap = 0;
  std::map<std::vector<S>, std::vector<Point>> memo;

  const std::vector<Point>& run(const VectorS<S>& r, const VectorS<S>& c) {
    std::vector<S> key;
    key.reserve((std::size_t)(r.size() + c.size()));
    for (Eigen::Index i = 0; i < r.size(); ++i) key.push_back(r(i));
    for (Eigen::Index j = 0; j < c.size(); ++j) key.push_back(c(j));
    auto found = memo.find(key);
    if (found != memo.end()) return found->second;

    std::set<Point> out;
    bool live = false;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (!(r(i) > S(0))) continue;
      for (Eigen::Index j = 0; j < c.size(); ++j) {
        if (!(c(j) > S(0))) continue;
        live = true;
        S amount = r(i) < c(j) ? r(i) : c(j);
        VectorS<S> r2 = r, c2 = c;
        r2(i) -= amount;
        c2(j) -= amount;
        int cell = (int)(i * C + j);
        for (const Point& rest : run(r2, c2)) {
          Point p = rest;
          auto at = std::lower_bound(p.begin(), p.end(), std::make_pair(cell, S(0)),
                                     [](const auto& a, const auto& b) { return a.first < b.first; });
          p.insert(at, {cell, amount});
          out.insert(std::move(p));
          if (out.size() > cap)
            fail(ErrorCode::CapExceeded, "transportation polytope has too many vertices");
        }
      }
    }
    if (!live) out.insert(Point{});  // all mass placed
    auto [it, _] = memo.emplace(std::move(key), std::vector<Point>(out.begin(), out.end()));
    return it->second;
  }
};

}  // namespace detail

// All vertices of the transportation polytope with the given margins, in a
// deterministic (lexicographic) order.
template <class S>
std::vector<MatrixS<S>> enumerate_vertices(const VectorS<S>& r, const VectorS<S>& c,
                                           int dim_cap = 6, std::size_t count_cap = 500000) {
  detail::check_margins(r, c, ScalarOps<S>::exact ? 0.0 : 1e-9);
  if (r.size() > dim_cap || c.size() > dim_cap)
    fail(ErrorCode::DimensionCap, "margins exceed the vertex-enumeration dimension cap of " +
                                      std::to_string(dim_cap));
  detail::VertexEnum<S> en;
  en.C = (int)c.size();
  en.cap = count_cap;
  // Floating-point margins are rewritten as integer counts of a 1e-12-relative
  // quantum, with the rounding defect folded into the largest entry so row and
  // column totals agree exactly. Saturation arithmetic on integer-valued
  // doubles is exact, so every order reproduces a vertex bit-identically and
  // the dedupe and the memo work; the counts are scaled back at the end.
  VectorS<S> r0 = r, c0 = c;
  S unit(1);
  if constexpr (!ScalarOps<S>::exact) {
    S scale = std::max(r.maxCoeff(), c.maxCoeff());
    if (scale > S(0)) {
      unit = scale * S(1e-12);
      for (Eigen::Index i = 0; i < r0.size(); ++i) r0(i) = std::nearbyint(r(i) / unit);
      for (Eigen::Index j = 0; j < c0.size(); ++j) c0(j) = std::nearbyint(c(j) / unit);
      S defect = r0.sum() - c0.sum();
      Eigen::Index at = 0;
      if (defect > S(0)) {
        c0.maxCoeff(&at);
        c0(at) += defect;
      } else if (defect < S(0)) {
        r0.maxCoeff(&at);
        r0(at) -= defect;
      }
    }
  }
  std::vector<MatrixS<S>> out;
  for (const auto& p : en.run(r0, c0)) {
    MatrixS<S> M = MatrixS<S>::Zero(r.size(), c.size());
    for (auto& [cell, v] : p) M(cell / c.size(), cell % c.size()) = v * unit;
    out.push_back(std::move(M));
  }
  return out;
}

}  // namespace causalot
