// test_support.hpp -- shared fixtures for the unit tests: binary spaces,
// random graph-compatible measures, and margin-preserving perturbations.
#pragma once

#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "causalot/constraints.hpp"
#include "causalot/dag.hpp"
#include "causalot/measure.hpp"
#include "causalot/rational.hpp"
#include "causalot/space.hpp"

namespace testsup {

using namespace causalot;

inline ProductSpace binary_space(int n) {
  ProductSpace sp;
  for (int i = 0; i < n; ++i) sp.push_back(CoordinateSpace::reals("c" + std::to_string(i + 1), {0.0, 1.0}));
  return sp;
}

// A random positive stochastic row with small rational entries.
inline std::vector<Rational> random_row(int len, std::mt19937_64& rng) {
  std::vector<Rational> row((std::size_t)len);
  Rational total(0);
  for (auto& r : row) {
    int v = 1 + (int)(rng() % 9);
    r = Rational(v);
    total += v;
  }
  for (auto& r : row) r /= total;
  return row;
}

// A full-support measure that factorizes along the graph: random mechanism
// rows per parent value, multiplied over the whole grid.
inline DiscreteMeasure<Rational> random_compatible(const Dag& dag, const ProductSpace& sp,
                                                   std::mt19937_64& rng) {
  std::vector<std::map<AtomTuple, std::vector<Rational>>> mech((std::size_t)dag.n);
  for (int i = 0; i < dag.n; ++i) {
    ProductSpace ps;
    for (int p : dag.parents[(std::size_t)i]) ps.push_back(sp[(std::size_t)p]);
    for (const auto& pt : enumerate_tuples(ps))
      mech[(std::size_t)i][pt] = random_row(sp[(std::size_t)i].size(), rng);
  }
  std::vector<std::pair<AtomTuple, Rational>> entries;
  for (const auto& t : enumerate_tuples(sp)) {
    Rational w(1);
    for (int i = 0; i < dag.n; ++i)
      w *= mech[(std::size_t)i][sub_tuple(t, dag.parents[(std::size_t)i])][(std::size_t)t[(std::size_t)i]];
    entries.emplace_back(t, w);
  }
  return make_measure<Rational>(sp, std::move(entries));
}

// The uniform measure on the full grid.
inline DiscreteMeasure<Rational> uniform_measure(const ProductSpace& sp) {
  auto tuples = enumerate_tuples(sp);
  Rational w = Rational(1) / Rational((long)tuples.size());
  std::vector<std::pair<AtomTuple, Rational>> entries;
  for (const auto& t : tuples) entries.emplace_back(t, w);
  return make_measure<Rational>(sp, std::move(entries));
}

// Margin-preserving rectangle rotations: add eps on one diagonal of a random
// 2x2 minor and subtract it on the other, keeping all entries nonnegative.
inline void rect_perturb(MatrixS<Rational>& w, std::mt19937_64& rng, int steps) {
  const int rows = (int)w.rows(), cols = (int)w.cols();
  if (rows < 2 || cols < 2) return;
  for (int s = 0; s < steps; ++s) {
    int a1 = (int)(rng() % (std::uint64_t)rows), a2 = (int)(rng() % (std::uint64_t)rows);
    int b1 = (int)(rng() % (std::uint64_t)cols), b2 = (int)(rng() % (std::uint64_t)cols);
    if (a1 == a2 || b1 == b2) continue;
    Rational cap = std::min(w(a1, b2), w(a2, b1));
    if (cap == 0) continue;
    Rational eps = cap * Rational(1 + (int)(rng() % 3)) / Rational(4);
    w(a1, b1) += eps;
    w(a2, b2) += eps;
    w(a1, b2) -= eps;
    w(a2, b1) -= eps;
  }
}

// The coupling induced by a deterministic map on the support of mu; the
// second marginal is the pushforward.
inline Coupling<Rational> map_coupling(const DiscreteMeasure<Rational>& mu,
                                       const std::vector<AtomTuple>& images) {
  std::map<AtomTuple, Rational> img_mass;
  for (int a = 0; a < mu.size(); ++a) img_mass[images[(std::size_t)a]] += mu.weight[(std::size_t)a];
  std::vector<std::pair<AtomTuple, Rational>> entries(img_mass.begin(), img_mass.end());
  DiscreteMeasure<Rational> nu = make_measure<Rational>(mu.space, std::move(entries));
  MatrixS<Rational> w = MatrixS<Rational>::Constant(mu.size(), nu.size(), Rational(0));
  for (int a = 0; a < mu.size(); ++a) {
    auto it = std::lower_bound(nu.support.begin(), nu.support.end(), images[(std::size_t)a]);
    w(a, (int)(it - nu.support.begin())) += mu.weight[(std::size_t)a];
  }
  return Coupling<Rational>{mu, std::move(nu), std::move(w)};
}

}  // namespace testsup
