// metric.hpp -- ground costs between support points: additive coordinate
// metrics, per-coordinate power sums, explicit joint matrices, and the
// min-plus repair that turns a symmetric matrix into a metric.
#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "causalot/error.hpp"
#include "causalot/rational.hpp"
#include "causalot/space.hpp"

namespace causalot {

template <class S>
using MatrixS = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// A metric on the atoms of one coordinate. Euclidean and AbsDiff read the
// space embeddings (AbsDiff insists on dimension 1); Explicit carries its own
// atom universe, resolved by label so that two spaces sharing labels can be
// compared.
template <class S>
struct CoordinateMetric {
  enum class Kind { Euclidean, AbsDiff, Explicit };
  Kind kind = Kind::AbsDiff;
  std::vector<std::string> labels;  // Explicit only
  MatrixS<S> dist;                  // Explicit only

  static CoordinateMetric euclidean() { return {Kind::Euclidean, {}, {}}; }
  static CoordinateMetric absdiff() { return {Kind::AbsDiff, {}, {}}; }
  static CoordinateMetric explicit_matrix(std::vector<std::string> labels, MatrixS<S> d) {
    return {Kind::Explicit, std::move(labels), std::move(d)};
  }

  S evaluate(const CoordinateSpace& A, int a, const CoordinateSpace& B, int b) const {
    switch (kind) {
      case Kind::Explicit: {
        int ia = index_in_labels(A.atoms[(std::size_t)a]);
        int ib = index_in_labels(B.atoms[(std::size_t)b]);
        return dist((Eigen::Index)ia, (Eigen::Index)ib);
      }
      case Kind::AbsDiff: {
        double xa = embed1(A, a), xb = embed1(B, b);
        double d = std::abs(xa - xb);
        if constexpr (ScalarOps<S>::exact)
          return ScalarOps<S>::abs(ScalarOps<S>::from_double(xa) - ScalarOps<S>::from_double(xb));
        else
          return d;
      }
      case Kind::Euclidean: {
        const Eigen::VectorXd& va = embedding_of(A, a);
        const Eigen::VectorXd& vb = embedding_of(B, b);
        if (va.size() != vb.size())
          fail(ErrorCode::DimensionMismatch, "embedding dimensions differ between spaces");
        if constexpr (ScalarOps<S>::exact) {
          if (va.size() != 1)
            fail(ErrorCode::BadArgument, "exact euclidean distance needs 1-d embeddings");
          return ScalarOps<S>::abs(ScalarOps<S>::from_double(va[0]) -
                                   ScalarOps<S>::from_double(vb[0]));
        } else {
          return (va - vb).norm();
        }
      }
    }
    return S(0);
  }

 private:
  int index_in_labels(const std::string& lab) const {
    for (int i = 0; i < (int)labels.size(); ++i)
      if (labels[i] == lab) return i;
    fail(ErrorCode::MissingPair, "metric has no atom '" + lab + "'");
  }
  static const Eigen::VectorXd& embedding_of(const CoordinateSpace& sp, int a) {
    if (!sp.has_embedding())
      fail(ErrorCode::MissingEmbedding, "coordinate '" + sp.name + "' has no embedding");
    return sp.embedding[(std::size_t)a];
  }
  static double embed1(const CoordinateSpace& sp, int a) {
    const Eigen::VectorXd& v = embedding_of(sp, a);
    if (v.size() != 1)
      fail(ErrorCode::DimensionMismatch, "absolute-difference metric needs 1-d embeddings");
    return v[0];
  }
};

// Transport cost between full tuples, always the p-th power of a (scaled)
// ground quantity:
//   Additive    (scale * sum_i d_i(x_i,y_i))^p
//   PowerSum    sum_i (scale * d_i(x_i,y_i))^p
//   JointMatrix (scale * M[x,y])^p with M indexed by canonical tuples
// PowerSum with 1-d coordinates and p=2 is the squared Euclidean distance on
// the concatenated embedding.
template <class S>
struct GroundCost {
  enum class Kind { Additive, PowerSum, JointMatrix };
  Kind kind = Kind::Additive;
  int p = 1;
  S scale = S(1);
  std::vector<CoordinateMetric<S>> coords;  // Additive / PowerSum, one per coordinate

  // JointMatrix payload: tuples of `canonical` indexing rows/cols of `joint`.
  ProductSpace canonical;
  std::vector<AtomTuple> index_tuples;
  MatrixS<S> joint;
  std::map<AtomTuple, int> tuple_index;

  static GroundCost additive(std::vector<CoordinateMetric<S>> coords, int p = 1, S scale = S(1)) {
    GroundCost c;
    c.kind = Kind::Additive;
    c.coords = std::move(coords);
    c.p = p;
    c.scale = scale;
    return c;
  }
  static GroundCost power_sum(std::vector<CoordinateMetric<S>> coords, int p, S scale = S(1)) {
    GroundCost c = additive(std::move(coords), p, scale);
    c.kind = Kind::PowerSum;
    return c;
  }
  static GroundCost joint_matrix(ProductSpace canonical, std::vector<AtomTuple> tuples,
                                 MatrixS<S> m, int p = 1, S scale = S(1)) {
    if ((Eigen::Index)tuples.size() != m.rows() || m.rows() != m.cols())
      fail(ErrorCode::DimensionMismatch, "joint matrix shape does not match its tuple list");
    GroundCost c;
    c.kind = Kind::JointMatrix;
    c.p = p;
    c.scale = scale;
    c.canonical = std::move(canonical);
    c.index_tuples = std::move(tuples);
    c.joint = std::move(m);
    for (int i = 0; i < (int)c.index_tuples.size(); ++i) c.tuple_index[c.index_tuples[(std::size_t)i]] = i;
    return c;
  }

  bool separable() const { return kind == Kind::PowerSum || (kind == Kind::Additive && p == 1); }

  // Cost contribution of one coordinate pair under a separable cost.
  S coordinate_cost(int i, const CoordinateSpace& A, int a, const CoordinateSpace& B, int b) const {
    S d = scale * coords[(std::size_t)i].evaluate(A, a, B, b);
    return kind == Kind::PowerSum ? pow_int(d, p) : d;
  }

  S evaluate(const ProductSpace& A, const AtomTuple& x, const ProductSpace& B,
             const AtomTuple& y) const {
    switch (kind) {
      case Kind::JointMatrix: {
        int ix = resolve(A, x), iy = resolve(B, y);
        return pow_int(S(scale * joint((Eigen::Index)ix, (Eigen::Index)iy)), p);
      }
      case Kind::Additive: {
        check_width(A, x);
        check_width(B, y);
        S d(0);
        for (std::size_t i = 0; i < x.size(); ++i)
          d += coords[i].evaluate(A[i], x[i], B[i], y[i]);
        return pow_int(S(scale * d), p);
      }
      case Kind::PowerSum: {
        check_width(A, x);
        check_width(B, y);
        S c(0);
        for (std::size_t i = 0; i < x.size(); ++i)
          c += pow_int(S(scale * coords[i].evaluate(A[i], x[i], B[i], y[i])), p);
        return c;
      }
    }
    return S(0);
  }

 private:
  void check_width(const ProductSpace& sp, const AtomTuple& t) const {
    if (t.size() != coords.size() || sp.size() != coords.size())
      fail(ErrorCode::CoordinateMismatch, "cost covers " + std::to_string(coords.size()) +
                                              " coordinates, tuple has " + std::to_string(t.size()));
  }
  // Maps a tuple of space `from` into the canonical indexing by atom label.
  int resolve(const ProductSpace& from, const AtomTuple& t) const {
    AtomTuple c(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i >= canonical.size())
        fail(ErrorCode::CoordinateMismatch, "tuple wider than the joint-matrix space");
      int idx = canonical[i].index_of(from[i].atoms[(std::size_t)t[i]]);
      if (idx < 0)
        fail(ErrorCode::MissingPair,
             "joint matrix has no atom '" + from[i].atoms[(std::size_t)t[i]] + "' in coordinate " +
                 std::to_string(i + 1));
      c[i] = idx;
    }
    auto it = tuple_index.find(c);
    if (it == tuple_index.end())
      fail(ErrorCode::MissingPair, "joint matrix has no row for tuple " + tuple_label(canonical, c));
    return it->second;
  }
};

// Dense cost matrix over two supports; entry (a,b) = cost(suppA[a], suppB[b]).
template <class S>
MatrixS<S> cost_matrix(const GroundCost<S>& cost, const ProductSpace& spaceA,
                       const std::vector<AtomTuple>& suppA, const ProductSpace& spaceB,
                       const std::vector<AtomTuple>& suppB) {
  MatrixS<S> C((Eigen::Index)suppA.size(), (Eigen::Index)suppB.size());
  for (Eigen::Index a = 0; a < C.rows(); ++a)
    for (Eigen::Index b = 0; b < C.cols(); ++b)
      C(a, b) = cost.evaluate(spaceA, suppA[(std::size_t)a], spaceB, suppB[(std::size_t)b]);
  return C;
}

namespace detail {

template <class S>
void require_repairable(const MatrixS<S>& M, double tol) {
  if (M.rows() != M.cols()) fail(ErrorCode::AsymmetricInput, "matrix is not square");
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    if (!ScalarOps<S>::is_zero(M(i, i), tol))
      fail(ErrorCode::NonzeroDiagonal, "diagonal entry " + std::to_string(i + 1) + " is not zero");
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (M(i, j) < S(0))
        fail(ErrorCode::NegativeEntry, "negative entry at (" + std::to_string(i + 1) + "," +
                                           std::to_string(j + 1) + ")");
      if (!ScalarOps<S>::equal(M(i, j), M(j, i), tol))
        fail(ErrorCode::AsymmetricInput, "entries (" + std::to_string(i + 1) + "," +
                                             std::to_string(j + 1) + ") and transpose differ");
    }
  }
}

}  // namespace detail

// Full min-plus sweeps from the previous iterate,
//   M'[i][j] = min(M[i][j], min_m M[i][m] + M[m][j]),
// repeated until a sweep changes nothing. The fixpoint satisfies the
// triangle inequality and is entrywise <= the input.
template <class S>
MatrixS<S> metric_repair(const MatrixS<S>& M0, double tol = 0.0) {
  detail::require_repairable(M0, tol);
  MatrixS<S> M = M0;
  for (;;) {
    MatrixS<S> next = M;
    bool changed = false;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        S best = M(i, j);
        for (Eigen::Index m = 0; m < M.rows(); ++m) {
          S via = M(i, m) + M(m, j);
          if (via < best) best = via;
        }
        if (best < M(i, j)) {
          next(i, j) = best;
          changed = true;
        }
      }
    if (!changed) return M;
    M = std::move(next);
  }
}

struct MetricReport {
  bool ok = true;
  std::vector<std::array<int, 3>> triangle_violations;  // (i,j,k): M_ij > M_ik + M_kj
  std::vector<std::array<int, 2>> asymmetries;
  std::vector<int> nonzero_diagonal;
  bool pseudometric = false;  // distinct atoms at distance zero (warning, still ok)
};

template <class S>
MetricReport validate_metric(const MatrixS<S>& M, double tol = 0.0) {
  if (M.rows() != M.cols()) fail(ErrorCode::AsymmetricInput, "matrix is not square");
  MetricReport rep;
  S stol = ScalarOps<S>::from_double(tol);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    if (!ScalarOps<S>::is_zero(M(i, i), tol)) {
      rep.nonzero_diagonal.push_back((int)i);
      rep.ok = false;
    }
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > i && !ScalarOps<S>::equal(M(i, j), M(j, i), tol)) {
        rep.asymmetries.push_back({(int)i, (int)j});
        rep.ok = false;
      }
      if (i != j && ScalarOps<S>::is_zero(M(i, j), tol)) rep.pseudometric = true;
      for (Eigen::Index k = 0; k < M.rows(); ++k)
        if (M(i, j) > M(i, k) + M(k, j) + stol) {
          rep.triangle_violations.push_back({(int)i, (int)j, (int)k});
          rep.ok = false;
        }
    }
  }
  return rep;
}

}  // namespace causalot
