// generate.hpp -- seeded random instances for the experiment subcommands and
// the cross-check suites: tiny compatible marginal pairs sized so the
// exhaustive kernel-vertex oracle stays under its cap, propensity-gated
// treatment pairs, and perturbed Lipschitz structural model pairs.
//
// Everything here is deterministic in the seed and platform-independent (the
// draws come from the solver's splitmix generator, not from std::random
// distributions). Weights are rational so gates and zero checks downstream
// are exact; callers lower to double when they want solver throughput.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "causalot/dag.hpp"
#include "causalot/inference.hpp"
#include "causalot/kernels.hpp"
#include "causalot/measure.hpp"
#include "causalot/metric.hpp"
#include "causalot/rational.hpp"
#include "causalot/scm.hpp"
#include "causalot/solver.hpp"
#include "causalot/space.hpp"
#include "causalot/transport.hpp"

namespace causalot {

// A strictly positive stochastic row with single-digit numerators.
inline std::vector<Rational> random_stochastic_row(int len, detail::Rng& rng) {
  std::vector<Rational> row((std::size_t)len);
  Rational total(0);
  for (auto& r : row) {
    r = Rational(1 + (long)rng.below(9));
    total += r;
  }
  for (auto& r : row) r /= total;
  return row;
}

// A full-support measure that factorizes along the graph: one random
// mechanism row per vertex and parent value, multiplied over the grid.
inline DiscreteMeasure<Rational> random_compatible_measure(const Dag& dag, const ProductSpace& sp,
                                                           detail::Rng& rng) {
  std::vector<std::map<AtomTuple, std::vector<Rational>>> mech((std::size_t)dag.n);
  for (int v : dag.order) {
    ProductSpace ps;
    for (int p : dag.parents[(std::size_t)v]) ps.push_back(sp[(std::size_t)p]);
    std::vector<AtomTuple> tuples =
        ps.empty() ? std::vector<AtomTuple>{AtomTuple{}} : enumerate_tuples(ps);
    for (const AtomTuple& pt : tuples)
      mech[(std::size_t)v][pt] = random_stochastic_row(sp[(std::size_t)v].size(), rng);
  }
  std::vector<std::pair<AtomTuple, Rational>> entries;
  for (const AtomTuple& t : enumerate_tuples(sp)) {
    Rational w(1);
    for (int v = 0; v < dag.n; ++v)
      w *= mech[(std::size_t)v][sub_tuple(t, dag.parents[(std::size_t)v])]
               [(std::size_t)t[(std::size_t)v]];
    entries.emplace_back(t, w);
  }
  return make_measure<Rational>(sp, std::move(entries));
}

// Lowers rational weights to double; support and spaces are unchanged.
inline DiscreteMeasure<double> lower_measure(const DiscreteMeasure<Rational>& m) {
  DiscreteMeasure<double> out;
  out.space = m.space;
  out.support = m.support;
  out.weight.reserve(m.weight.size());
  for (const Rational& w : m.weight) out.weight.push_back(ScalarOps<Rational>::to_dbl(w));
  return out;
}

// One random tiny instance: a sorted DAG on at most three vertices, at most
// three atoms per coordinate (real-embedded), and two full-support compatible
// marginals. vertex_combinations is the exhaustive oracle's search size for
// the pair, kept under the stated budget by redrawing the shape.
struct SmallInstance {
  Dag dag;
  ProductSpace space;
  DiscreteMeasure<Rational> mu, nu;
  double vertex_combinations = 1;
};

namespace detail {

// Product over all kernel blocks of the pair's per-block vertex counts; the
// exhaustive solve walks exactly this many selections.
inline double oracle_search_size(const Dag& dag, const DiscreteMeasure<Rational>& mu,
                                 const DiscreteMeasure<Rational>& nu, double budget) {
  KernelBlocks<Rational> kb = kernel_blocks(dag, mu, nu);
  double product = 1;
  for (const auto& vertex_blocks : kb.blocks)
    for (const KernelBlock<Rational>& b : vertex_blocks) {
      product *= (double)enumerate_vertices(b.row_margin, b.col_margin).size();
      if (product > budget) return product;
    }
  return product;
}

}  // namespace detail

inline SmallInstance small_instance(std::uint64_t seed, double budget = 5e5) {
  detail::Rng rng(detail::mix_seed(seed, 0x5ca1e));
  for (;;) {
    SmallInstance inst;
    // Half the draws take three vertices; ternary coordinates are rarer when
    // edges can multiply the kernel blocks, so fewer shapes bounce off the
    // budget and the accepted mix keeps its graph variety.
    const int n = std::min(3, 1 + (int)rng.below(4));
    ProductSpace sp;
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
      const int atoms = n < 3 ? 2 + (int)rng.below(2) : (rng.below(4) == 0 ? 3 : 2);
      const double step = 0.5 * (double)(1 + rng.below(3));
      const double shift = 0.5 * (double)rng.below(3);
      std::vector<double> values;
      for (int a = 0; a < atoms; ++a) values.push_back(shift + step * a);
      sp.push_back(CoordinateSpace::reals("x" + std::to_string(i + 1), values));
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.below(2) == 0) edges.emplace_back(i, j);
    inst.dag = validate_dag(n, edges);
    inst.space = sp;
    inst.mu = random_compatible_measure(inst.dag, sp, rng);
    inst.nu = random_compatible_measure(inst.dag, sp, rng);
    inst.vertex_combinations = detail::oracle_search_size(inst.dag, inst.mu, inst.nu, budget);
    if (inst.vertex_combinations <= budget) return inst;
  }
}

// The treatment layout shared by all generated gated pairs: a three-vertex
// chain with the treatment in the middle, its parent as the adjustment set,
// and a three-level real outcome.
inline AteSpec gated_spec(double delta = 0.2) {
  AteSpec spec;
  spec.dag = dag_markov(3);
  spec.treatment = 1;
  spec.outcome = 2;
  spec.delta = delta;
  return spec;
}

inline ProductSpace gated_space() {
  ProductSpace sp;
  sp.push_back(CoordinateSpace::reals("z", {0.0, 1.0}));
  sp.push_back(CoordinateSpace::reals("t", {0.0, 1.0}));
  sp.push_back(CoordinateSpace::reals("y", {0.0, 1.0, 2.0}));
  return sp;
}

// A compatible measure whose propensity rows are drawn from {5/20,...,15/20},
// strictly inside the delta = 0.2 gate on both sides in either arithmetic
// (the gate compares against the binary representation of 0.2, which sits a
// hair above 1/5; a quarter clears it with room).
inline DiscreteMeasure<Rational> random_gated_measure(detail::Rng& rng) {
  const Dag dag = dag_markov(3);
  const ProductSpace sp = gated_space();
  std::map<int, std::vector<Rational>> treat_rows;
  for (int z = 0; z < 2; ++z) {
    Rational p1 = Rational(5 + (long)rng.below(11)) / 20;
    treat_rows[z] = {Rational(1) - p1, p1};
  }
  std::vector<Rational> root = random_stochastic_row(2, rng);
  std::map<int, std::vector<Rational>> outcome_rows;
  for (int t = 0; t < 2; ++t) outcome_rows[t] = random_stochastic_row(3, rng);
  std::vector<std::pair<AtomTuple, Rational>> entries;
  for (const AtomTuple& t : enumerate_tuples(sp))
    entries.emplace_back(t, root[(std::size_t)t[0]] * treat_rows[t[0]][(std::size_t)t[1]] *
                                outcome_rows[t[1]][(std::size_t)t[2]]);
  return make_measure<Rational>(sp, std::move(entries));
}

inline std::pair<DiscreteMeasure<Rational>, DiscreteMeasure<Rational>> gated_pair(
    std::uint64_t seed) {
  detail::Rng rng(detail::mix_seed(seed, 0xa7e));
  DiscreteMeasure<Rational> mu = random_gated_measure(rng);
  DiscreteMeasure<Rational> nu = random_gated_measure(rng);
  return {std::move(mu), std::move(nu)};
}

// A perturbed pair of structural models on a chain or a diamond. The base
// mechanisms are clamped affine maps of the parent values and the noise,
//   x_v = clamp(a * x_p1 (+ a' * x_p2) + b * u + c, 0, top),
// whose Lipschitz constant in the additive input metric is max(a, a', b);
// that analytic constant is what the models declare. The partner model is
// one of: identical (exact zero case), one mechanism retabulated from edited
// coefficients, one noise reweighted on the same values, or one noise shifted
// by a whole step with the mechanism retabulated from the same map.
struct ScmPair {
  Scm<Rational> a, b;
  std::vector<CoordinateMetric<Rational>> metrics;
  std::string perturbation;  // "none", "mechanism", "noise-weights", "noise-shift"
};

namespace detail {

struct AffineMech {
  double pa1 = 0, pa2 = 0, noise = 0, constant = 0;

  double eval(const std::vector<double>& parents, double u) const {
    double v = noise * u + constant;
    if (!parents.empty()) v += pa1 * parents[0];
    if (parents.size() > 1) v += pa2 * parents[1];
    return v;
  }
  double lipschitz() const { return std::max({pa1, pa2, noise}); }
};

// Tabulates the clamped affine map over the parent grid and this model's
// noise values; every output lands on an atom because all inputs and
// coefficients are integers.
inline MechanismTable tabulate_affine(const AffineMech& f, const Scm<Rational>& s, int v) {
  const CoordinateSpace& out = s.space[(std::size_t)v];
  const ProductSpace ps = s.parent_space(v);
  const double top = out.embedding.back()(0);
  return tabulate_mechanism(ps, s.noise[(std::size_t)v].size(), [&](const AtomTuple& pt, int u) {
    std::vector<double> pv;
    for (std::size_t j = 0; j < pt.size(); ++j)
      pv.push_back(ps[j].embedding[(std::size_t)pt[j]](0));
    double raw = f.eval(pv, s.noise[(std::size_t)v].atoms[(std::size_t)u]);
    double clamped = std::min(top, std::max(0.0, raw));
    for (int a = 0; a < out.size(); ++a)
      if (out.embedding[(std::size_t)a](0) == clamped) return a;
    fail(ErrorCode::VertexOutOfRange, "affine mechanism output misses every atom");
    return -1;
  });
}

inline NoiseDist<Rational> random_noise(int atoms, double base, detail::Rng& rng) {
  NoiseDist<Rational> nd;
  for (int u = 0; u < atoms; ++u) nd.atoms.push_back(base + u);
  nd.weight = random_stochastic_row(atoms, rng);
  return nd;
}

}  // namespace detail

inline ScmPair scm_pair(std::uint64_t seed) {
  detail::Rng rng(detail::mix_seed(seed, 0x5c31));
  const bool diamond = seed % 2 == 1;

  ScmPair pair;
  Scm<Rational>& a = pair.a;
  a.dag = diamond ? validate_dag(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}}) : dag_markov(3);
  const int n = a.dag.n;
  for (int v = 0; v < n; ++v)
    a.space.push_back(CoordinateSpace::reals("x" + std::to_string(v + 1), {0.0, 1.0, 2.0}));

  // Roots copy their noise; later vertices mix parents and noise. On the
  // diamond the two middle vertices are deterministic so the exhaustive
  // solve of the pushforward pair stays tiny.
  std::vector<detail::AffineMech> maps((std::size_t)n);
  for (int v = 0; v < n; ++v) {
    const bool root = a.dag.parents[(std::size_t)v].empty();
    int atoms;
    if (root) atoms = diamond ? 2 : 2 + (int)rng.below(2);
    else if (diamond && v < 3) atoms = 1;
    else atoms = 2 + (int)rng.below(2);
    a.noise.push_back(detail::random_noise(atoms, 0.0, rng));

    detail::AffineMech& f = maps[(std::size_t)v];
    if (root) {
      f.noise = 1;
    } else {
      f.pa1 = (double)(1 + rng.below(2));
      if (a.dag.parents[(std::size_t)v].size() > 1) f.pa2 = (double)(1 + rng.below(2));
      f.noise = atoms > 1 ? 1 : 0;
      f.constant = (double)rng.below(2) - 1.0;
    }
    a.lipschitz.push_back(f.lipschitz());
  }
  for (int v = 0; v < n; ++v) a.mech.push_back(detail::tabulate_affine(maps[(std::size_t)v], a, v));

  pair.b = a;
  const int kind = (int)rng.below(4);
  // Skip perturbations that cannot bite: reweighting or shifting a one-atom
  // noise changes nothing or nothing but labels.
  int v = (int)rng.below((std::size_t)n);
  if (kind == 1) {
    while (pair.b.dag.parents[(std::size_t)v].empty()) v = (v + 1) % n;
    detail::AffineMech g = maps[(std::size_t)v];
    if (rng.below(2) == 0) g.constant += (rng.below(2) == 0 ? 1.0 : -1.0);
    else g.pa1 = g.pa1 == 1 ? 2 : 1;
    pair.b.mech[(std::size_t)v] = detail::tabulate_affine(g, pair.b, v);
    pair.b.lipschitz[(std::size_t)v] = g.lipschitz();
    pair.perturbation = "mechanism";
  } else if (kind == 2) {
    while (pair.b.noise[(std::size_t)v].size() < 2) v = (v + 1) % n;
    pair.b.noise[(std::size_t)v].weight =
        random_stochastic_row(pair.b.noise[(std::size_t)v].size(), rng);
    pair.perturbation = "noise-weights";
  } else if (kind == 3) {
    while (pair.b.noise[(std::size_t)v].size() < 2) v = (v + 1) % n;
    for (double& u : pair.b.noise[(std::size_t)v].atoms) u += 1.0;
    pair.b.mech[(std::size_t)v] = detail::tabulate_affine(maps[(std::size_t)v], pair.b, v);
    pair.perturbation = "noise-shift";
  } else {
    pair.perturbation = "none";
  }

  pair.metrics.assign((std::size_t)n, CoordinateMetric<Rational>::absdiff());
  return pair;
}

}  // namespace causalot
