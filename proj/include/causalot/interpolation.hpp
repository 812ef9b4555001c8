#pragma once

// Displacement interpolation along optimal bicausal couplings: the blended
// measures kappa_lambda, the finite set of lambdas where the parent blend
// stops being injective, grid paths with compatibility flags, and the bundled
// reproduction of the two worked examples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "causalot/constraints.hpp"
#include "causalot/dag.hpp"
#include "causalot/error.hpp"
#include "causalot/fixtures.hpp"
#include "causalot/measure.hpp"
#include "causalot/parallel.hpp"
#include "causalot/space.hpp"
#include "causalot/wasserstein.hpp"

namespace causalot {

namespace detail {

inline void require_embedded_pair(const ProductSpace& a, const ProductSpace& b) {
  if (a.size() != b.size())
    fail(ErrorCode::CoordinateMismatch, "the marginals disagree on the coordinate count");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].has_embedding() || !b[i].has_embedding())
      fail(ErrorCode::NoEmbedding,
           "coordinate '" + a[i].name + "' needs real embeddings on both sides");
    if (a[i].embedding[0].size() != b[i].embedding[0].size())
      fail(ErrorCode::DimensionMismatch,
           "coordinate '" + a[i].name + "' embeddings differ in dimension");
  }
}

// Distinct blended values of one coordinate, merged exactly for exact scalars
// and within 1e-9 componentwise otherwise.
template <class S>
struct ValuePool {
  std::vector<std::vector<S>> values;

  int put(const std::vector<S>& v) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      bool same = true;
      for (std::size_t c = 0; c < v.size() && same; ++c) {
        S d = ScalarOps<S>::abs(values[i][c] - v[c]);
        same = ScalarOps<S>::exact ? ScalarOps<S>::is_zero(d, 0.0)
                                   : ScalarOps<S>::to_dbl(d) <= 1e-9;
      }
      if (same) return (int)i;
    }
    values.push_back(v);
    return (int)values.size() - 1;
  }
};

inline std::string value_label(const std::vector<double>& v) {
  std::string out;
  for (std::size_t c = 0; c < v.size(); ++c) {
    std::string lab = std::to_string(v[c]);
    lab.erase(lab.find_last_not_of('0') + 1);
    if (!lab.empty() && lab.back() == '.') lab.pop_back();
    out += (c ? "," : "") + lab;
  }
  return out;
}

}  // namespace detail

// Law of (1 - lambda) X + lambda Y under the coupling: every support cell
// contributes its blended atom, equal blends merge by weight addition.
template <class S>
DiscreteMeasure<S> displacement(const Coupling<S>& pi, const S& lambda) {
  detail::require_embedded_pair(pi.mu.space, pi.nu.space);
  const std::size_t n = pi.mu.space.size();
  const S one_minus = S(1) - lambda;

  std::vector<detail::ValuePool<S>> pools(n);
  std::map<AtomTuple, S> mass;
  for (int a = 0; a < pi.rows(); ++a)
    for (int b = 0; b < pi.cols(); ++b) {
      const S& w = pi.weight(a, b);
      if (!(w > S(0))) continue;
      AtomTuple t((std::size_t)n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd& ex =
            pi.mu.space[i].embedding[(std::size_t)pi.mu.support[(std::size_t)a][i]];
        const Eigen::VectorXd& ey =
            pi.nu.space[i].embedding[(std::size_t)pi.nu.support[(std::size_t)b][i]];
        std::vector<S> blend((std::size_t)ex.size());
        for (Eigen::Index c = 0; c < ex.size(); ++c)
          blend[(std::size_t)c] = one_minus * ScalarOps<S>::from_double(ex(c)) +
                                  lambda * ScalarOps<S>::from_double(ey(c));
        t[i] = pools[i].put(blend);
      }
      mass[t] += w;
    }

  // Present each pool in ascending value order so endpoint blends reproduce
  // the original atom order of spaces listed by value.
  ProductSpace sp(n);
  std::vector<std::vector<int>> remap(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> idx((std::size_t)pools[i].values.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = (int)k;
    std::sort(idx.begin(), idx.end(), [&](int x, int y) {
      return pools[i].values[(std::size_t)x] < pools[i].values[(std::size_t)y];
    });
    sp[i].name = pi.mu.space[i].name;
    remap[i].resize(idx.size());
    std::set<std::string> used;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      remap[i][(std::size_t)idx[k]] = (int)k;
      std::vector<double> v;
      for (const S& c : pools[i].values[(std::size_t)idx[k]])
        v.push_back(ScalarOps<S>::to_dbl(c));
      std::string lab = detail::value_label(v);
      while (!used.insert(lab).second) lab += "'";
      sp[i].atoms.push_back(lab);
      Eigen::VectorXd e((Eigen::Index)v.size());
      for (std::size_t c = 0; c < v.size(); ++c) e((Eigen::Index)c) = v[c];
      sp[i].embedding.push_back(std::move(e));
    }
  }

  std::vector<std::pair<AtomTuple, S>> entries;
  for (const auto& [t, w] : mass) {
    AtomTuple m = t;
    for (std::size_t i = 0; i < n; ++i) m[i] = remap[i][(std::size_t)t[i]];
    entries.emplace_back(std::move(m), w);
  }
  return make_measure<S>(std::move(sp), std::move(entries), 1e-9);
}

// Solutions lambda in [0, 1] of (1 - lambda)(x_pa - x'_pa) = lambda(y'_pa -
// y_pa) over distinct parent pairs in the coupling support, for every vertex
// with parents. Away from this finite set the parent blend is injective, so
// the interpolant inherits compatibility.
template <class S>
std::vector<S> exception_lambdas(const Coupling<S>& pi, const Dag& dag) {
  detail::require_embedded_pair(pi.mu.space, pi.nu.space);
  if (pi.mu.n() != dag.n)
    fail(ErrorCode::CoordinateMismatch, "coupling and graph disagree on coordinate count");

  std::set<S> found;
  for (int v = 0; v < dag.n; ++v) {
    const std::vector<int>& pa = dag.parents[(std::size_t)v];
    if (pa.empty()) continue;

    using Pair = std::pair<std::vector<S>, std::vector<S>>;
    std::set<Pair> pairs;
    for (int a = 0; a < pi.rows(); ++a)
      for (int b = 0; b < pi.cols(); ++b) {
        if (!(pi.weight(a, b) > S(0))) continue;
        Pair pr;
        for (int i : pa) {
          const Eigen::VectorXd& ex =
              pi.mu.space[(std::size_t)i]
                  .embedding[(std::size_t)pi.mu.support[(std::size_t)a][(std::size_t)i]];
          const Eigen::VectorXd& ey =
              pi.nu.space[(std::size_t)i]
                  .embedding[(std::size_t)pi.nu.support[(std::size_t)b][(std::size_t)i]];
          for (Eigen::Index c = 0; c < ex.size(); ++c)
            pr.first.push_back(ScalarOps<S>::from_double(ex(c)));
          for (Eigen::Index c = 0; c < ey.size(); ++c)
            pr.second.push_back(ScalarOps<S>::from_double(ey(c)));
        }
        pairs.insert(std::move(pr));
      }

    std::vector<Pair> list(pairs.begin(), pairs.end());
    for (std::size_t p = 0; p < list.size(); ++p)
      for (std::size_t q = p + 1; q < list.size(); ++q) {
        const std::size_t dim = list[p].first.size();
        std::vector<S> dx(dim), dyp(dim);
        for (std::size_t c = 0; c < dim; ++c) {
          dx[c] = list[p].first[c] - list[q].first[c];
          dyp[c] = list[q].second[c] - list[p].second[c];
        }
        // One linear equation per component; a solution must satisfy all.
        S lambda(0);
        bool have = false;
        for (std::size_t c = 0; c < dim && !have; ++c) {
          S denom = dx[c] + dyp[c];
          if (!ScalarOps<S>::is_zero(denom, 0.0)) {
            lambda = dx[c] / denom;
            have = true;
          }
        }
        if (!have) continue;
        bool solves = true;
        for (std::size_t c = 0; c < dim && solves; ++c) {
          S resid = (S(1) - lambda) * dx[c] - lambda * dyp[c];
          solves = ScalarOps<S>::exact ? ScalarOps<S>::is_zero(resid, 0.0)
                                       : std::abs(ScalarOps<S>::to_dbl(resid)) <= 1e-9;
        }
        if (solves && !(lambda < S(0)) && !(S(1) < lambda)) found.insert(lambda);
      }
  }
  return std::vector<S>(found.begin(), found.end());
}

template <class S>
struct InterpolationPath {
  std::vector<S> lambdas;
  std::vector<DiscreteMeasure<S>> measures;
  std::vector<bool> compatible;
  std::vector<S> exception_set;
  DistanceReport<S> source;
};

namespace detail {

template <class S>
bool near_exception(const S& lambda, const std::vector<S>& exceptions) {
  for (const S& e : exceptions) {
    S d = ScalarOps<S>::abs(lambda - e);
    if (ScalarOps<S>::exact ? ScalarOps<S>::is_zero(d, 0.0) : ScalarOps<S>::to_dbl(d) <= 1e-9)
      return true;
  }
  return false;
}

}  // namespace detail

// Optimal bicausal coupling plus its displacement path on a lambda grid. Grid
// points off the exception set must come back compatible; a failure there
// would contradict the compatibility theorem and is reported as an error.
template <class S>
InterpolationPath<S> interpolation_path(const Dag& dag, const DiscreteMeasure<S>& mu,
                                        const DiscreteMeasure<S>& nu, const GroundCost<S>& cost,
                                        int p, const std::vector<S>& grid,
                                        const SuiteOptions& opt = {}) {
  for (const S& l : grid)
    if (l < S(0) || S(1) < l)
      fail(ErrorCode::BadArgument, "interpolation grid points must lie in [0, 1]");

  InterpolationPath<S> path;
  path.lambdas = grid;
  path.source = g_wasserstein_p(dag, mu, nu, cost, p, opt.solver);
  if (path.source.status != SolveStatus::GlobalOptimal)
    fail(ErrorCode::NonGlobalStatus,
         std::string("interpolation needs a global coupling, got ") +
             solve_status_name(path.source.status));
  path.exception_set = exception_lambdas(path.source.coupling, dag);

  struct Task {
    DiscreteMeasure<S> kappa;
    bool ok = false;
    std::exception_ptr err;
  };
  std::vector<Task> tasks = parallel_map<Task>(
      grid.size(),
      [&](std::size_t k) {
        Task t;
        try {
          t.kappa = displacement(path.source.coupling, grid[k]);
          t.ok = is_g_compatible(t.kappa, dag, opt.tol).ok;
        } catch (...) {
          t.err = std::current_exception();
        }
        return t;
      },
      opt.solver.workers);

  for (std::size_t k = 0; k < tasks.size(); ++k) {
    if (tasks[k].err) std::rethrow_exception(tasks[k].err);
    if (!tasks[k].ok && !detail::near_exception(grid[k], path.exception_set))
      fail(ErrorCode::NotCompatible,
           "interpolant at lambda = " + ScalarOps<S>::repr(grid[k]) +
               " is incompatible although the blend is injective there");
    path.measures.push_back(std::move(tasks[k].kappa));
    path.compatible.push_back(tasks[k].ok);
  }
  return path;
}

// The coupling viewed as one measure on the paired space: stage t carries the
// atom pair (x_t, y_t). Bicausal couplings of compatible marginals keep the
// graph structure in this view.
template <class S>
DiscreteMeasure<S> paired_measure(const Coupling<S>& pi) {
  const std::size_t n = pi.mu.space.size();
  if (n != pi.nu.space.size())
    fail(ErrorCode::CoordinateMismatch, "the marginals disagree on the coordinate count");
  ProductSpace sp(n);
  for (std::size_t i = 0; i < n; ++i) {
    sp[i].name = pi.mu.space[i].name + "*" + pi.nu.space[i].name;
    for (const std::string& xa : pi.mu.space[i].atoms)
      for (const std::string& yb : pi.nu.space[i].atoms) sp[i].atoms.push_back(xa + "|" + yb);
  }
  std::vector<std::pair<AtomTuple, S>> entries;
  for (int a = 0; a < pi.rows(); ++a)
    for (int b = 0; b < pi.cols(); ++b) {
      if (!(pi.weight(a, b) > S(0))) continue;
      AtomTuple t(n, 0);
      for (std::size_t i = 0; i < n; ++i)
        t[i] = pi.mu.support[(std::size_t)a][i] * pi.nu.space[i].size() +
               pi.nu.support[(std::size_t)b][i];
      entries.emplace_back(std::move(t), pi.weight(a, b));
    }
  return make_measure<S>(std::move(sp), std::move(entries), 1e-9);
}

template <class S>
struct TrajectorySet {
  std::string name;
  S lambda{0};
  std::vector<std::vector<double>> paths;  // per atom, the 1-d value at each step
  std::vector<S> weight;
};

template <class S>
struct MarkovWitness {
  bool found = false;
  int stage = -1;
  int target = -1;
  AtomTuple history_low, history_high;
  S prob_low{0};
  S prob_high{0};
  std::string description;
};

namespace detail {

template <class S>
TrajectorySet<S> trajectories(std::string name, const S& lambda, const DiscreteMeasure<S>& m) {
  TrajectorySet<S> set;
  set.name = std::move(name);
  set.lambda = lambda;
  for (int a = 0; a < m.size(); ++a) {
    std::vector<double> path;
    for (std::size_t i = 0; i < m.space.size(); ++i)
      path.push_back(m.space[i].embedding[(std::size_t)m.support[(std::size_t)a][i]](0));
    set.paths.push_back(std::move(path));
    set.weight.push_back(m.weight[(std::size_t)a]);
  }
  return set;
}

// Finds the pair of histories sharing their most recent stage whose next-step
// conditionals differ the most; a positive gap is a concrete refutation of
// the Markov property for the paired process.
template <class S>
MarkovWitness<S> markov_witness(const DiscreteMeasure<S>& paired) {
  MarkovWitness<S> best;
  double best_gap = 1e-9;
  const int n = (int)paired.space.size();
  for (int t = 1; t < n; ++t) {
    std::vector<int> hist(t);
    for (int i = 0; i < t; ++i) hist[(std::size_t)i] = i;
    ConditionalTable<S> tbl = conditional_table(paired, t, hist);
    std::map<int, std::vector<const std::pair<const AtomTuple, std::vector<S>>*>> groups;
    for (const auto& row : tbl.rows) groups[row.first[(std::size_t)t - 1]].push_back(&row);
    for (const auto& [recent, rows] : groups)
      for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = a + 1; b < rows.size(); ++b)
          for (int tau = 0; tau < tbl.atom_count; ++tau) {
            S lo = rows[a]->second[(std::size_t)tau];
            S hi = rows[b]->second[(std::size_t)tau];
            if (hi < lo) std::swap(lo, hi);
            double gap = ScalarOps<S>::to_dbl(hi - lo);
            if (gap > best_gap) {
              best_gap = gap;
              best.found = true;
              best.stage = t;
              best.target = tau;
              bool first_low = !(rows[b]->second[(std::size_t)tau] < rows[a]->second[(std::size_t)tau]);
              best.history_low = first_low ? rows[a]->first : rows[b]->first;
              best.history_high = first_low ? rows[b]->first : rows[a]->first;
              best.prob_low = lo;
              best.prob_high = hi;
            }
          }
  }
  if (best.found) {
    auto key_label = [&](const AtomTuple& h) {
      std::string out;
      for (std::size_t i = 0; i < h.size(); ++i)
        out += (i ? ", " : "") + paired.space[i].atoms[(std::size_t)h[i]];
      return out;
    };
    best.description = "P(stage " + std::to_string(best.stage + 1) + " = " +
                       paired.space[(std::size_t)best.stage].atoms[(std::size_t)best.target] +
                       " | " + key_label(best.history_low) + ") = " +
                       ScalarOps<S>::repr(best.prob_low) + " < " +
                       ScalarOps<S>::repr(best.prob_high) + " = same given " +
                       key_label(best.history_high);
  }
  return best;
}

}  // namespace detail

template <class S>
struct ExampleBundle {
  InterpolationPath<S> two_path;
  DistanceReport<S> graph_distance;
  DistanceReport<S> plain_distance;
  TrajectorySet<S> binomial;
  TrajectorySet<S> trinomial;
  TrajectorySet<S> interpolant;
  MembershipReport plain_markov;
  MarkovWitness<S> witness;
  std::vector<S> grid;
  std::vector<bool> graph_flags;
  std::vector<bool> plain_flags;
  std::vector<S> graph_exceptions;
};

// Reproduces the two worked examples: the two-path chain whose interpolant
// loses the Markov property exactly at lambda = 1/2, and the binomial versus
// trinomial random walks where the plain squared-distance coupling is not
// Markov while the graph coupling interpolates compatibly.
template <class S>
ExampleBundle<S> reproduce_examples(const SuiteOptions& opt = {}) {
  ExampleBundle<S> out;

  fixtures::TwoPathInstance<S> two = fixtures::two_path_instance<S>();
  std::vector<S> five;
  for (int k = 0; k <= 4; ++k) five.push_back(S(k) / S(4));
  out.two_path = interpolation_path(two.dag, two.mu, two.nu, two.cost, 2, five, opt);

  fixtures::RandomWalkPair<S> walk = fixtures::random_walk_pair<S>();
  out.graph_distance = g_wasserstein_p(walk.dag, walk.mu, walk.nu, walk.cost, 2, opt.solver);
  out.plain_distance = wasserstein_p(walk.mu, walk.nu, walk.cost, 2, opt.solver);

  S third = S(1) / S(3);
  out.binomial = detail::trajectories("binomial", S(0), walk.mu);
  out.trinomial = detail::trajectories("trinomial", S(1), walk.nu);
  out.interpolant =
      detail::trajectories("interpolant", third, displacement(out.graph_distance.coupling, third));

  out.plain_markov =
      check_membership(out.plain_distance.coupling, walk.dag, CouplingClass::Bicausal, 1e-8);
  out.witness = detail::markov_witness(paired_measure(out.plain_distance.coupling));

  for (int k = 0; k <= 10; ++k) out.grid.push_back(S(k) / S(10));
  out.graph_exceptions = exception_lambdas(out.graph_distance.coupling, walk.dag);
  for (const S& l : out.grid) {
    out.graph_flags.push_back(
        is_g_compatible(displacement(out.graph_distance.coupling, l), walk.dag, opt.tol).ok);
    out.plain_flags.push_back(
        is_g_compatible(displacement(out.plain_distance.coupling, l), walk.dag, opt.tol).ok);
  }
  return out;
}

}  // namespace causalot
