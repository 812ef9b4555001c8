// wasserstein.hpp -- transport distances on top of the solvers: the plain
// W_p, the graph-constrained W_{G,p}, the one-sided causal value, property
// suites (semimetric axioms, edge monotonicity), and the bundled triangle
// counterexample runner.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "causalot/dag.hpp"
#include "causalot/fixtures.hpp"
#include "causalot/measure.hpp"
#include "causalot/metric.hpp"
#include "causalot/parallel.hpp"
#include "causalot/solver.hpp"

namespace causalot {

template <class S>
struct DistanceReport {
  S value{0};  // the distance, p-th root of the optimal cost
  S power{0};  // optimal p-th-power transport cost, exact where the solve is
  int p = 1;
  SolveStatus status = SolveStatus::GlobalOptimal;
  std::string method;
  GraphClass graph_class = GraphClass::Full;
  Coupling<S> coupling;
  double max_residual = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

// Exact for order 1; higher orders go through double since exact p-th roots
// leave the rationals. The power field keeps the exact optimum either way.
template <class S>
S root_p(const S& v, int p) {
  if (p == 1) return v;
  return ScalarOps<S>::from_double(std::pow(ScalarOps<S>::to_dbl(v), 1.0 / p));
}

// The cost is the p-th power of a ground quantity and carries its own order;
// requiring agreement keeps one source of truth for the root taken here.
template <class S>
void require_order(const GroundCost<S>& cost, int p) {
  if (p < 1) fail(ErrorCode::BadArgument, "distance order must be at least 1");
  if (cost.p != p)
    fail(ErrorCode::BadArgument, "cost carries power " + std::to_string(cost.p) +
                                     ", the distance was asked for order " + std::to_string(p));
}

template <class S>
DistanceReport<S> from_solve(SolveReport<S>&& rep, int p, GraphClass cls) {
  DistanceReport<S> d;
  d.power = rep.value;
  d.value = root_p(rep.value, p);
  d.p = p;
  d.status = rep.status;
  d.method = std::move(rep.method);
  d.graph_class = cls;
  d.coupling = std::move(rep.coupling);
  d.max_residual = rep.max_residual;
  d.seed = rep.seed;
  return d;
}

}  // namespace detail

// Plain p-Wasserstein distance: the unconstrained transport LP.
template <class S>
DistanceReport<S> wasserstein_p(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                                const GroundCost<S>& cost, int p, const SolverOptions& opt = {}) {
  detail::require_order(cost, p);
  return detail::from_solve(solve_standard_ot(mu, nu, cost, opt), p, GraphClass::Full);
}

// Graph-constrained distance over the two-sided couplings. Both marginals
// must factorize along the graph; the structure dispatch picks the engine
// (full graphs collapse to the plain distance, chains to backward induction,
// and the empty graph's per-coordinate sum is the chain recursion with no
// conditioning).
template <class S>
DistanceReport<S> g_wasserstein_p(const Dag& dag, const DiscreteMeasure<S>& mu,
                                  const DiscreteMeasure<S>& nu, const GroundCost<S>& cost, int p,
                                  const SolverOptions& opt = {}) {
  detail::require_order(cost, p);
  return detail::from_solve(solve_bicausal(dag, mu, nu, cost, opt), p, classify_structure(dag));
}

// One-sided causal optimum in the same report shape. Not a semimetric: the
// constraint set is not symmetric in the marginals.
template <class S>
DistanceReport<S> g_causal_p(const Dag& dag, const DiscreteMeasure<S>& mu,
                             const DiscreteMeasure<S>& nu, const GroundCost<S>& cost, int p,
                             const SolverOptions& opt = {}) {
  detail::require_order(cost, p);
  return detail::from_solve(solve_causal(dag, mu, nu, cost, opt), p, classify_structure(dag));
}

struct SuiteOptions {
  SolverOptions solver;
  double tol = 1e-9;         // comparison tolerance for symmetry and triangles
  double weight_tol = 1e-9;  // atom-list weight tolerance for zero-iff-equal
};

template <class S>
struct TriangleCheck {
  int i = 0, j = 0, k = 0;  // d(i,j) against d(i,k) + d(k,j)
  S lhs{0}, rhs{0};
  S margin{0};  // lhs - rhs; positive means the inequality fails
  bool violated = false;
};

template <class S>
struct SemimetricReport {
  MatrixS<S> value;  // pairwise distances, both orders solved independently
  bool nonnegative = true;
  bool symmetric = true;
  bool zero_iff_equal = true;
  std::vector<TriangleCheck<S>> triangles;  // all i < j with middle k
  std::vector<std::size_t> violations;      // indices into triangles

  // The semimetric axioms; triangle violations are reported, not judged.
  bool ok() const { return nonnegative && symmetric && zero_iff_equal; }
};

// Checks the semimetric axioms on every pair and enumerates every triangle.
// All pairwise problems must solve to global optimality: an upper bound on
// the long side cannot certify a violation.
template <class S>
SemimetricReport<S> semimetric_suite(const std::vector<DiscreteMeasure<S>>& measures,
                                     const Dag& dag, const GroundCost<S>& cost, int p,
                                     const SuiteOptions& opt = {}) {
  const int N = (int)measures.size();
  if (N == 0) fail(ErrorCode::EmptySpace, "the suite needs at least one measure");
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j) pairs.push_back({i, j});

  // exceptions may not escape the worker threads; they are carried out by
  // value and rethrown in task order
  struct Task {
    DistanceReport<S> rep;
    std::exception_ptr err;
  };
  std::vector<Task> tasks = parallel_map<Task>(
      pairs.size(),
      [&](std::size_t t) {
        Task out;
        try {
          out.rep = g_wasserstein_p(dag, measures[(std::size_t)pairs[t].first],
                                    measures[(std::size_t)pairs[t].second], cost, p, opt.solver);
        } catch (...) {
          out.err = std::current_exception();
        }
        return out;
      },
      opt.solver.workers);
  std::vector<DistanceReport<S>> reports;
  for (Task& t : tasks) {
    if (t.err) std::rethrow_exception(t.err);
    reports.push_back(std::move(t.rep));
  }

  SemimetricReport<S> rep;
  rep.value = MatrixS<S>::Zero(N, N);
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    if (reports[t].status != SolveStatus::GlobalOptimal)
      fail(ErrorCode::NonGlobalStatus,
           "pair (" + std::to_string(pairs[t].first + 1) + "," +
               std::to_string(pairs[t].second + 1) + ") solved to " +
               std::string(solve_status_name(reports[t].status)) +
               "; the suite needs global optima");
    rep.value(pairs[t].first, pairs[t].second) = reports[t].value;
  }

  const S stol = ScalarOps<S>::from_double(opt.tol);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      if (rep.value(i, j) < -stol) rep.nonnegative = false;
      if (j > i) {
        S gap = rep.value(i, j) - rep.value(j, i);
        if (ScalarOps<S>::abs(gap) > stol) rep.symmetric = false;
        bool near_zero = rep.value(i, j) <= stol && rep.value(j, i) <= stol;
        bool equal = measures_equal(measures[(std::size_t)i], measures[(std::size_t)j],
                                    opt.weight_tol);
        if (near_zero != equal) rep.zero_iff_equal = false;
      }
    }

  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      for (int k = 0; k < N; ++k) {
        if (k == i || k == j) continue;
        TriangleCheck<S> tc;
        tc.i = i;
        tc.j = j;
        tc.k = k;
        tc.lhs = rep.value(i, j);
        tc.rhs = rep.value(i, k) + rep.value(k, j);
        tc.margin = tc.lhs - tc.rhs;
        tc.violated = tc.margin > stol;
        if (tc.violated) rep.violations.push_back(rep.triangles.size());
        rep.triangles.push_back(std::move(tc));
      }
  return rep;
}

template <class S>
struct MonotonicityReport {
  DistanceReport<S> sub;    // fewer edges, tighter constraints
  DistanceReport<S> super;  // more edges, weaker constraints
  bool holds = false;       // super.value <= sub.value + tol
  S margin{0};              // sub.value - super.value, negative when violated
};

// Edge monotonicity: adding edges weakens the coupling constraints, so the
// distance cannot increase. Requires globally solved values on both graphs.
template <class S>
MonotonicityReport<S> edge_monotonicity(const Dag& dag_sub, const Dag& dag_super,
                                        const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                                        const GroundCost<S>& cost, int p,
                                        const SuiteOptions& opt = {}) {
  if (!is_subgraph(dag_sub, dag_super))
    fail(ErrorCode::NotASubgraph, "the first graph is not an edge subgraph of the second");
  MonotonicityReport<S> rep;
  rep.sub = g_wasserstein_p(dag_sub, mu, nu, cost, p, opt.solver);
  rep.super = g_wasserstein_p(dag_super, mu, nu, cost, p, opt.solver);
  for (const DistanceReport<S>* d : {&rep.sub, &rep.super})
    if (d->status != SolveStatus::GlobalOptimal)
      fail(ErrorCode::NonGlobalStatus, "monotonicity needs global optima; the " +
                                           std::string(d == &rep.sub ? "subgraph" : "supergraph") +
                                           " solve returned " +
                                           std::string(solve_status_name(d->status)));
  rep.margin = rep.sub.value - rep.super.value;
  rep.holds = rep.super.value <= rep.sub.value + ScalarOps<S>::from_double(opt.tol);
  return rep;
}

template <class S>
struct AppendixBReport {
  DistanceReport<S> mu_nu, nu_eta, mu_eta;
  S reference_mu_nu{0}, reference_nu_eta{0}, reference_mu_eta{0};
  double max_deviation = 0.0;
  bool matches_reference = false;  // all three within 1e-6
  bool violated = false;           // mu_eta > mu_nu + nu_eta
  S violation_margin{0};
};

// Runs the bundled triangle counterexample: three order-1 distances on the
// chain, checked against the reference values 0.585, 2.24, 2.925.
template <class S>
AppendixBReport<S> reproduce_appendix_b(const SolverOptions& opt = {}) {
  fixtures::TriangleInstance<S> f = fixtures::appendix_b_instance<S>();
  AppendixBReport<S> rep;
  rep.mu_nu = g_wasserstein_p(f.dag, f.mu, f.nu, f.cost, 1, opt);
  rep.nu_eta = g_wasserstein_p(f.dag, f.nu, f.eta, f.cost, 1, opt);
  rep.mu_eta = g_wasserstein_p(f.dag, f.mu, f.eta, f.cost, 1, opt);
  rep.reference_mu_nu = S(117) / S(200);
  rep.reference_nu_eta = S(56) / S(25);
  rep.reference_mu_eta = S(117) / S(40);
  auto dev = [](const S& got, const S& ref) {
    return ScalarOps<S>::to_dbl(ScalarOps<S>::abs(S(got - ref)));
  };
  rep.max_deviation = std::max({dev(rep.mu_nu.value, rep.reference_mu_nu),
                                dev(rep.nu_eta.value, rep.reference_nu_eta),
                                dev(rep.mu_eta.value, rep.reference_mu_eta)});
  rep.matches_reference = rep.max_deviation <= 1e-6;
  rep.violation_margin = rep.mu_eta.value - (rep.mu_nu.value + rep.nu_eta.value);
  rep.violated = rep.violation_margin > S(0);
  return rep;
}

}  // namespace causalot
