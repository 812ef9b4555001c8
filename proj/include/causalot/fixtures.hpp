// fixtures.hpp -- bundled instances shared by the tests and the CLI: the
// appendix-b triangle counterexample, the two-path interpolation instance,
// the binomial/trinomial random-walk models, and a constructed pair whose
// treatment effects differ far more than their plain transport distance.
#pragma once

#include <string>
#include <vector>

#include "causalot/dag.hpp"
#include "causalot/measure.hpp"
#include "causalot/metric.hpp"
#include "causalot/scm.hpp"
#include "causalot/space.hpp"

namespace causalot::fixtures {

// --------------------------------------------------------------------------
// Triangle counterexample: three chain-compatible measures over three
// four-atom coordinates with an explicit 12x12 joint ground metric. The
// reference values carry a ground-cost scale of 2 relative to the raw table;
// the raw table is kept verbatim so the metric checks see it unchanged.
// --------------------------------------------------------------------------

template <class S>
struct TriangleInstance {
  Dag dag;                        // chain on three vertices
  ProductSpace space;             // three copies of {x1,x2,x3,x4}
  DiscreteMeasure<S> mu, nu, eta;
  std::vector<AtomTuple> tuples;  // row/column order of the matrix
  MatrixS<S> matrix;              // raw ground distances, unscaled
  GroundCost<S> cost;             // joint-matrix cost, p = 1, scale 2
};

namespace detail {

// Ground distances in hundredths, exact in every scalar type.
inline const int (&triangle_hundredths())[12][12] {
  static const int m[12][12] = {
      {0, 53, 108, 133, 129, 78, 64, 44, 115, 130, 192, 138},
      {53, 0, 70, 105, 118, 91, 11, 97, 110, 183, 190, 191},
      {108, 70, 0, 98, 111, 49, 59, 64, 86, 188, 182, 158},
      {133, 105, 98, 0, 13, 115, 94, 98, 152, 125, 187, 192},
      {129, 118, 111, 13, 0, 102, 107, 85, 139, 138, 200, 179},
      {78, 91, 49, 115, 102, 0, 102, 113, 37, 174, 177, 122},
      {64, 11, 59, 94, 107, 102, 0, 108, 121, 194, 179, 202},
      {44, 97, 64, 98, 85, 113, 108, 0, 150, 124, 186, 94},
      {115, 110, 86, 152, 139, 37, 121, 150, 0, 137, 140, 85},
      {130, 183, 188, 125, 138, 174, 194, 124, 137, 0, 62, 120},
      {192, 190, 182, 187, 200, 177, 179, 186, 140, 62, 0, 169},
      {138, 191, 158, 192, 179, 122, 202, 94, 85, 120, 169, 0}};
  return m;
}

}  // namespace detail

template <class S>
TriangleInstance<S> appendix_b_instance() {
  TriangleInstance<S> f;
  f.dag = dag_markov(3);
  for (int i = 1; i <= 3; ++i)
    f.space.push_back(CoordinateSpace::labeled("c" + std::to_string(i), {"x1", "x2", "x3", "x4"}));

  f.tuples = {{0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {1, 0, 1}, {0, 1, 0}, {0, 1, 1},
              {1, 2, 0}, {1, 2, 1}, {2, 3, 2}, {2, 3, 3}, {3, 3, 2}, {3, 3, 3}};

  const auto& h = detail::triangle_hundredths();
  f.matrix = MatrixS<S>(12, 12);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) f.matrix(i, j) = S(h[i][j]) / S(100);

  const S q = S(1) / S(4);
  auto quarters = [&](int from) {
    std::vector<std::pair<AtomTuple, S>> entries;
    for (int k = from; k < from + 4; ++k) entries.push_back({f.tuples[(std::size_t)k], q});
    return make_measure<S>(f.space, std::move(entries));
  };
  f.mu = quarters(0);
  f.nu = quarters(4);
  f.eta = quarters(8);

  f.cost = GroundCost<S>::joint_matrix(f.space, f.tuples, f.matrix, 1, S(2));
  return f;
}

// --------------------------------------------------------------------------
// Two-path instance: half mass on each of two deterministic paths, with the
// second coordinates swapped between the measures. The optimal plan pairs the
// paths by their first coordinates, and the midpoint of the interpolation is
// the one parameter where the interpolant loses chain compatibility.
// --------------------------------------------------------------------------

template <class S>
struct TwoPathInstance {
  Dag dag;             // chain on three vertices
  ProductSpace space;  // binary real-embedded coordinates
  DiscreteMeasure<S> mu, nu;
  GroundCost<S> cost;  // squared Euclidean
};

template <class S>
TwoPathInstance<S> two_path_instance() {
  TwoPathInstance<S> f;
  f.dag = dag_markov(3);
  for (int i = 1; i <= 3; ++i)
    f.space.push_back(CoordinateSpace::reals("c" + std::to_string(i), {0.0, 1.0}));
  const S h = S(1) / S(2);
  f.mu = make_measure<S>(f.space, {{{0, 0, 0}, h}, {{1, 1, 1}, h}});
  f.nu = make_measure<S>(f.space, {{{0, 1, 0}, h}, {{1, 0, 1}, h}});
  f.cost = GroundCost<S>::power_sum(
      {CoordinateMetric<S>::euclidean(), CoordinateMetric<S>::euclidean(),
       CoordinateMetric<S>::euclidean()},
      2);
  return f;
}

// --------------------------------------------------------------------------
// Random-walk pair: three-step walks driven by independent steps, one with
// steps +-1 at probability 1/2 each, one with steps in {-1,0,1} at 1/3 each.
// Both models live on one shared space so plans and interpolants line up.
// --------------------------------------------------------------------------

template <class S>
struct RandomWalkPair {
  Dag dag;             // chain on three vertices
  ProductSpace space;  // walk levels reachable after each step
  Scm<S> binomial, trinomial;
  DiscreteMeasure<S> mu, nu;  // exact path distributions
  GroundCost<S> cost;         // squared Euclidean
};

namespace detail {

template <class S>
Scm<S> walk_scm(const Dag& dag, const ProductSpace& space, std::vector<double> steps,
                std::vector<S> step_weights) {
  Scm<S> s;
  s.dag = dag;
  s.space = space;
  NoiseDist<S> nd{std::move(steps), std::move(step_weights)};
  auto level = [](const CoordinateSpace& sp, const AtomTuple& pa) {
    return pa.empty() ? 0.0 : sp.embedding[(std::size_t)pa[0]][0];
  };
  for (int v = 0; v < dag.n; ++v) {
    s.noise.push_back(nd);
    const CoordinateSpace& out = space[(std::size_t)v];
    const CoordinateSpace in =
        v == 0 ? CoordinateSpace{} : space[(std::size_t)dag.parents[(std::size_t)v][0]];
    ProductSpace ps = v == 0 ? ProductSpace{} : ProductSpace{in};
    s.mech.push_back(tabulate_mechanism(ps, nd.size(), [&](const AtomTuple& pa, int u) {
      double x = level(in, pa) + nd.atoms[(std::size_t)u];
      for (int a = 0; a < out.size(); ++a)
        if (out.embedding[(std::size_t)a][0] == x) return a;
      fail(ErrorCode::VertexOutOfRange, "walk level " + std::to_string(x) + " has no atom");
    }));
    s.lipschitz.push_back(1.0);
  }
  return s;
}

}  // namespace detail

template <class S>
RandomWalkPair<S> random_walk_pair() {
  RandomWalkPair<S> f;
  f.dag = dag_markov(3);
  f.space = {CoordinateSpace::reals("c1", {-1.0, 0.0, 1.0}),
             CoordinateSpace::reals("c2", {-2.0, -1.0, 0.0, 1.0, 2.0}),
             CoordinateSpace::reals("c3", {-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0})};
  const S h = S(1) / S(2), t = S(1) / S(3);
  f.binomial = detail::walk_scm<S>(f.dag, f.space, {-1.0, 1.0}, {h, h});
  f.trinomial = detail::walk_scm<S>(f.dag, f.space, {-1.0, 0.0, 1.0}, {t, t, t});
  f.mu = scm_pushforward(f.binomial).measure;
  f.nu = scm_pushforward(f.trinomial).measure;
  f.cost = GroundCost<S>::power_sum(
      {CoordinateMetric<S>::euclidean(), CoordinateMetric<S>::euclidean(),
       CoordinateMetric<S>::euclidean()},
      2);
  return f;
}

// --------------------------------------------------------------------------
// Treatment pair: a low-mass branch where the two measures swap which arm
// yields the high outcome. The treatment effects differ by 1 while the plain
// transport distance is at most 1/20, because the swap can be undone by
// moving only the treatment coordinate on the rare branch.
// --------------------------------------------------------------------------

template <class S>
struct TreatmentPair {
  Dag dag;             // history-spanning graph on three vertices
  ProductSpace space;  // covariate {0,1}, treatment {0,1}, outcome {-5,0,5}
  DiscreteMeasure<S> mu, nu;
  GroundCost<S> cost;  // additive absolute difference
  int treatment = 1;   // 0-based vertex indices
  int outcome = 2;
  double delta = 0.2;  // both measures have propensity 1/2 on every branch
};

template <class S>
TreatmentPair<S> treatment_discontinuity_pair() {
  TreatmentPair<S> f;
  f.dag = dag_linear(3);
  f.space = {CoordinateSpace::reals("c1", {0.0, 1.0}), CoordinateSpace::reals("c2", {0.0, 1.0}),
             CoordinateSpace::reals("c3", {-5.0, 0.0, 5.0})};
  const S common = S(19) / S(40), rare = S(1) / S(40);
  f.mu = make_measure<S>(f.space, {{{0, 0, 1}, common},
                                   {{0, 1, 1}, common},
                                   {{1, 0, 0}, rare},
                                   {{1, 1, 2}, rare}});
  f.nu = make_measure<S>(f.space, {{{0, 0, 1}, common},
                                   {{0, 1, 1}, common},
                                   {{1, 0, 2}, rare},
                                   {{1, 1, 0}, rare}});
  f.cost = GroundCost<S>::additive({CoordinateMetric<S>::absdiff(), CoordinateMetric<S>::absdiff(),
                                    CoordinateMetric<S>::absdiff()});
  return f;
}

}  // namespace causalot::fixtures
