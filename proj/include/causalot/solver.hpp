// solver.hpp -- optimizers over the compiled feasible sets.
//
// Four engines, picked by structure:
//   standard LP      unconstrained transport (full graph, or no graph at all)
//   class LP         causal/bicausal instances whose compiled program is
//                    purely linear (parents covering histories)
//   chain DP         bicausal instances on chain-shaped graphs with separable
//                    costs: backward induction over per-block transport LPs
//   exhaustive       global search over per-block kernel vertices; the
//                    objective is linear in each block, so some vertex
//                    selection is globally optimal
//   BCD              block-coordinate descent with seeded multistart, the
//                    local fallback when enumeration is out of reach
//
// All reports are deterministic given inputs and seed: restart merging and
// enumeration chunking are pure min-reductions with lexicographic tie-breaks,
// so worker counts never change the result.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "causalot/constraints.hpp"
#include "causalot/dag.hpp"
#include "causalot/error.hpp"
#include "causalot/kernels.hpp"
#include "causalot/measure.hpp"
#include "causalot/metric.hpp"
#include "causalot/parallel.hpp"
#include "causalot/rational.hpp"
#include "causalot/simplex.hpp"
#include "causalot/space.hpp"
#include "causalot/transport.hpp"

namespace causalot {

enum class SolveStatus { GlobalOptimal, LocalUpperBound, Infeasible };

inline const char* solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::GlobalOptimal: return "global-optimal";
    case SolveStatus::LocalUpperBound: return "local-upper-bound";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

struct SolverOptions {
  double max_enum = 1e7;     // cap on the product of per-block vertex counts
  int restarts = 16;         // BCD multistart count
  std::uint64_t seed = 0;
  double tol = 1e-9;         // LP and feasibility tolerance
  int workers = 0;           // 0: CAUSAL_OT_WORKERS, then hardware
  long max_sweeps = 200;     // BCD sweep limit per restart
  double penalty = 0.0;      // causal margin penalty; 0 picks one from the cost scale
  int vertex_dim_cap = 6;    // per-block margin length cap for vertex enumeration
};

// value is always the optimal p-th-power transport cost; distances take roots
// downstream. The returned coupling passes check_membership for the class the
// solve targeted, within max_residual.
template <class S>
struct SolveReport {
  S value = S(0);
  Coupling<S> coupling;
  SolveStatus status = SolveStatus::GlobalOptimal;
  std::string method;
  long iterations = 0;
  double max_residual = 0.0;
  std::uint64_t seed = 0;
  bool has_lower_bound = false;
  S lower_bound = S(0);  // causal solves: value of the linear relaxation
};

namespace detail {

// splitmix64: tiny, stateless-seedable, identical on every platform. Bounded
// draws use plain modulo; the bias is irrelevant for initialization draws and
// determinism is what matters.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  std::size_t below(std::size_t n) { return n ? (std::size_t)(next() % n) : 0; }
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed ^ ((stream + 1) * 0xD1B54A32D192ED03ULL);
}

// Flattened block order (topological vertex order, then stored block order)
// and the per-pair routing (a, b, position) -> (flat block, kernel row/col).
template <class S>
struct BlockRouting {
  int R = 0, C = 0, n = 0;
  std::vector<std::pair<int, int>> flat;  // flat id -> (vertex, block position)
  std::vector<int> base;                  // per vertex: flat id of its first block
  std::vector<int> blk, row, col;         // length R*C*n, position-major per pair

  int at(int a, int b, int k) const { return (a * C + b) * n + k; }
};

template <class S>
BlockRouting<S> make_routing(const KernelBlocks<S>& kb) {
  BlockRouting<S> rt;
  rt.R = kb.mu.size();
  rt.C = kb.nu.size();
  rt.n = kb.dag.n;
  rt.base.assign((std::size_t)kb.dag.n, 0);
  for (int k = 0; k < kb.dag.n; ++k) {
    int v = kb.dag.order[(std::size_t)k];
    rt.base[(std::size_t)v] = (int)rt.flat.size();
    for (int j = 0; j < (int)kb.blocks[(std::size_t)v].size(); ++j) rt.flat.emplace_back(v, j);
  }
  rt.blk.resize((std::size_t)(rt.R * rt.C * rt.n));
  rt.row.resize(rt.blk.size());
  rt.col.resize(rt.blk.size());
  for (int a = 0; a < rt.R; ++a) {
    const AtomTuple& x = kb.mu.support[(std::size_t)a];
    for (int b = 0; b < rt.C; ++b) {
      const AtomTuple& y = kb.nu.support[(std::size_t)b];
      for (int k = 0; k < rt.n; ++k) {
        int v = kb.dag.order[(std::size_t)k];
        const auto& pa = kb.dag.parents[(std::size_t)v];
        int j = kb.index[(std::size_t)v].at({sub_tuple(x, pa), sub_tuple(y, pa)});
        const KernelBlock<S>& blkref = kb.blocks[(std::size_t)v][(std::size_t)j];
        int idx = rt.at(a, b, k);
        rt.blk[(std::size_t)idx] = rt.base[(std::size_t)v] + j;
        rt.row[(std::size_t)idx] = blkref.row_of(x[(std::size_t)v]);
        rt.col[(std::size_t)idx] = blkref.col_of(y[(std::size_t)v]);
      }
    }
  }
  return rt;
}

// Objective of one kernel assignment without materializing the coupling.
template <class S>
S routed_cost(const BlockRouting<S>& rt, const MatrixS<S>& C,
              const std::vector<MatrixS<S>>& K) {
  S total(0);
  for (int a = 0; a < rt.R; ++a)
    for (int b = 0; b < rt.C; ++b) {
      S w(1);
      const int off = (a * rt.C + b) * rt.n;
      for (int k = 0; k < rt.n && !(w == S(0)); ++k) {
        int idx = off + k;
        w *= K[(std::size_t)rt.blk[(std::size_t)idx]]((Eigen::Index)rt.row[(std::size_t)idx],
                                                      (Eigen::Index)rt.col[(std::size_t)idx]);
      }
      if (!(w == S(0))) total += w * C(a, b);
    }
  return total;
}

template <class S>
std::vector<std::vector<MatrixS<S>>> block_vertex_lists(const KernelBlocks<S>& kb,
                                                        const BlockRouting<S>& rt, int dim_cap) {
  std::vector<std::vector<MatrixS<S>>> lists(rt.flat.size());
  for (std::size_t f = 0; f < rt.flat.size(); ++f) {
    const auto& [v, j] = rt.flat[f];
    const KernelBlock<S>& b = kb.blocks[(std::size_t)v][(std::size_t)j];
    lists[f] = enumerate_vertices<S>(b.row_margin, b.col_margin, dim_cap);
  }
  return lists;
}

template <class S>
KernelSelection<S> selection_from_flat(const KernelBlocks<S>& kb, const BlockRouting<S>& rt,
                                       const std::vector<MatrixS<S>>& K) {
  KernelSelection<S> sel = default_selection(kb);
  for (std::size_t f = 0; f < rt.flat.size(); ++f) {
    const auto& [v, j] = rt.flat[f];
    sel[(std::size_t)v][(std::size_t)j] = K[f];
  }
  return sel;
}

// Greedy saturation in a seeded random cell order; used to initialize blocks
// whose margins are too long for full vertex enumeration. Each draw is a
// polytope vertex (uniform over saturation orders, not over vertices).
template <class S>
MatrixS<S> random_block_vertex(const VectorS<S>& r0, const VectorS<S>& c0, Rng& rng) {
  VectorS<S> r = r0, c = c0;
  MatrixS<S> M = MatrixS<S>::Zero(r.size(), c.size());
  for (;;) {
    std::vector<std::pair<int, int>> live;
    for (Eigen::Index i = 0; i < r.size(); ++i)
      if (r(i) > S(0))
        for (Eigen::Index j = 0; j < c.size(); ++j)
          if (c(j) > S(0)) live.emplace_back((int)i, (int)j);
    if (live.empty()) return M;
    auto [i, j] = live[rng.below(live.size())];
    S amount = r(i) < c(j) ? r(i) : c(j);
    M(i, j) += amount;
    r(i) -= amount;
    c(j) -= amount;
  }
}

}  // namespace detail

// Unconstrained optimal transport between the two supports: one dense LP.
template <class S>
SolveReport<S> solve_standard_ot(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                                 const GroundCost<S>& cost, const SolverOptions& opt = {}) {
  MatrixS<S> C = cost_matrix(cost, mu.space, mu.support, nu.space, nu.support);
  VectorS<S> r((Eigen::Index)mu.size()), c((Eigen::Index)nu.size());
  for (int a = 0; a < mu.size(); ++a) r(a) = mu.weight[(std::size_t)a];
  for (int b = 0; b < nu.size(); ++b) c(b) = nu.weight[(std::size_t)b];
  LpResult<S> res = solve_lp(transport_lp(C, r, c), opt.tol);
  if (res.status == LpStatus::Infeasible)
    fail(ErrorCode::Infeasible, "transport LP reported infeasible margins");
  if (res.status == LpStatus::Unbounded)
    fail(ErrorCode::Unbounded, "transport LP reported unbounded");
  SolveReport<S> rep;
  rep.value = res.value;
  rep.coupling = Coupling<S>{mu, nu, MatrixS<S>(mu.size(), nu.size())};
  for (int a = 0; a < mu.size(); ++a)
    for (int b = 0; b < nu.size(); ++b) rep.coupling.weight(a, b) = res.x(a * nu.size() + b);
  rep.status = SolveStatus::GlobalOptimal;
  rep.method = "standard-lp";
  rep.iterations = res.iterations;
  rep.seed = opt.seed;
  MembershipReport mem;
  ConstraintProgram<S> marg = compile_marginals(mu, nu);
  detail::scan_program(marg, rep.coupling.weight, mem, 1e-8);
  rep.max_residual = mem.max_residual;
  return rep;
}

namespace detail {

// Equality-form LP over coupling entries: marginal rows plus every equation
// of the given linear families. Redundant rows are fine; phase one drops them.
template <class S>
LpResult<S> coupling_lp(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                        const std::vector<const LinearConstraintFamily<S>*>& families,
                        const MatrixS<S>& C, double tol) {
  const int R = mu.size(), Cn = nu.size();
  std::size_t extra = 0;
  for (const auto* f : families) extra += f->equations.size();
  LinearProgram<S> lp;
  lp.A = MatrixS<S>::Zero((Eigen::Index)(R + Cn + extra), (Eigen::Index)(R * Cn));
  lp.b = VectorS<S>::Zero(lp.A.rows());
  lp.c = VectorS<S>::Zero(lp.A.cols());
  for (int a = 0; a < R; ++a)
    for (int b = 0; b < Cn; ++b) {
      lp.c(a * Cn + b) = C(a, b);
      lp.A(a, a * Cn + b) = S(1);
      lp.A(R + b, a * Cn + b) = S(1);
    }
  for (int a = 0; a < R; ++a) lp.b(a) = mu.weight[(std::size_t)a];
  for (int b = 0; b < Cn; ++b) lp.b(R + b) = nu.weight[(std::size_t)b];
  Eigen::Index row = R + Cn;
  for (const auto* f : families)
    for (const auto& eq : f->equations) {
      for (const auto& [idx, coef] : eq.lhs.terms) lp.A(row, idx) = coef;
      lp.b(row) = eq.rhs - eq.lhs.constant;
      ++row;
    }
  return solve_lp(lp, tol);
}

template <class S>
bool purely_linear(const ConstraintProgram<S>& prog) {
  for (const auto& f : prog.bilinear)
    if (!f.trivially_satisfied && !f.equations.empty()) return false;
  return true;
}

template <class S>
SolveReport<S> report_from_lp(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                              const LpResult<S>& res, const Dag& dag, CouplingClass cls,
                              const std::string& method, const SolverOptions& opt) {
  if (res.status == LpStatus::Infeasible) {
    SolveReport<S> rep;
    rep.status = SolveStatus::Infeasible;
    rep.method = method;
    rep.iterations = res.iterations;
    rep.seed = opt.seed;
    return rep;
  }
  if (res.status == LpStatus::Unbounded)
    fail(ErrorCode::Unbounded, "transport-class LP reported unbounded");
  SolveReport<S> rep;
  rep.value = res.value;
  rep.coupling = Coupling<S>{mu, nu, MatrixS<S>(mu.size(), nu.size())};
  for (int a = 0; a < mu.size(); ++a)
    for (int b = 0; b < nu.size(); ++b) rep.coupling.weight(a, b) = res.x(a * nu.size() + b);
  rep.status = SolveStatus::GlobalOptimal;
  rep.method = method;
  rep.iterations = res.iterations;
  rep.seed = opt.seed;
  rep.max_residual = check_membership(rep.coupling, dag, cls, 1e-8).max_residual;
  return rep;
}

}  // namespace detail

// True when every vertex's parents lie in the immediately preceding vertex of
// the topological order; such graphs admit exact backward induction for
// separable costs (the continuation value depends on the state (x_i, y_i)
// that the next block conditions on, and on nothing earlier).
inline bool chain_structure(const Dag& dag) {
  if (dag.complete) return false;
  for (int k = 0; k < dag.n; ++k) {
    const auto& pa = dag.parents[(std::size_t)dag.order[(std::size_t)k]];
    if (pa.empty()) continue;
    if (k == 0 || pa.size() > 1 || pa[0] != dag.order[(std::size_t)k - 1]) return false;
  }
  return true;
}

// Backward induction over the blocks of a chain-shaped graph: at each vertex
// and parent-value pair, one transport LP over the block margins with the
// stage cost plus the continuation value as coefficients. Exact because,
// conditional on the parent pair, the block choice affects the future only
// through (x_i, y_i), and the cost adds one term per vertex.
template <class S>
SolveReport<S> solve_bicausal_chain(const KernelBlocks<S>& kb, const GroundCost<S>& cost,
                                    const SolverOptions& opt = {}) {
  const Dag& dag = kb.dag;
  if (!chain_structure(dag))
    fail(ErrorCode::BadArgument, "backward induction needs a chain-shaped graph");
  if (!cost.separable())
    fail(ErrorCode::BadArgument, "backward induction needs a coordinate-separable cost");
  KernelSelection<S> sel = default_selection(kb);
  std::map<std::pair<AtomTuple, AtomTuple>, S> cont;  // value-to-go of the next position
  long iters = 0;
  S root(0);
  for (int k = dag.n - 1; k >= 0; --k) {
    const int v = dag.order[(std::size_t)k];
    const bool next_conditions = k + 1 < dag.n &&
        !dag.parents[(std::size_t)dag.order[(std::size_t)k + 1]].empty();
    std::map<std::pair<AtomTuple, AtomTuple>, S> here;
    for (std::size_t j = 0; j < kb.blocks[(std::size_t)v].size(); ++j) {
      const KernelBlock<S>& b = kb.blocks[(std::size_t)v][j];
      MatrixS<S> D(b.row_margin.size(), b.col_margin.size());
      for (Eigen::Index r = 0; r < D.rows(); ++r)
        for (Eigen::Index c = 0; c < D.cols(); ++c) {
          int ar = b.row_atoms[(std::size_t)r], bc = b.col_atoms[(std::size_t)c];
          S d = cost.coordinate_cost(v, kb.mu.space[(std::size_t)v], ar,
                                     kb.nu.space[(std::size_t)v], bc);
          if (k + 1 < dag.n) {
            std::pair<AtomTuple, AtomTuple> key;
            if (next_conditions) key = {AtomTuple{ar}, AtomTuple{bc}};
            d += cont.at(key);
          }
          D(r, c) = d;
        }
      TransportResult<S> res = solve_transport(D, b.row_margin, b.col_margin, opt.tol);
      sel[(std::size_t)v][j] = res.plan;
      here[{b.x_pa, b.y_pa}] = res.value;
      ++iters;
    }
    cont = std::move(here);
    if (k == 0) root = cont.at({AtomTuple{}, AtomTuple{}});
  }
  SolveReport<S> rep;
  rep.value = root;
  rep.coupling = assemble(kb, sel, opt.tol);
  rep.status = SolveStatus::GlobalOptimal;
  rep.method = "chain-dp";
  rep.iterations = iters;
  rep.seed = opt.seed;
  rep.max_residual = check_membership(rep.coupling, kb.dag, CouplingClass::Bicausal, 1e-8)
                         .max_residual;
  return rep;
}

// Global search over per-block kernel vertices. The objective is linear in
// each block with the others fixed, so its minimum over the product of block
// polytopes is attained at a vertex selection; scanning all combinations in
// lexicographic order (first block most significant) and keeping the first
// strict minimum yields the lexicographically smallest optimal selection.
template <class S>
SolveReport<S> solve_bicausal_exhaustive(const KernelBlocks<S>& kb, const GroundCost<S>& cost,
                                         const SolverOptions& opt = {}) {
  if (kb.dag.complete)
    fail(ErrorCode::BadArgument,
         "kernel factorization is undefined on a complete graph; use the unconstrained solve");
  detail::BlockRouting<S> rt = detail::make_routing(kb);
  MatrixS<S> C = cost_matrix(cost, kb.mu.space, kb.mu.support, kb.nu.space, kb.nu.support);
  auto lists = detail::block_vertex_lists(kb, rt, opt.vertex_dim_cap);
  double product = 1;
  for (const auto& l : lists) {
    product *= (double)l.size();
    if (product > opt.max_enum)
      fail(ErrorCode::EnumerationCap,
           "kernel-vertex combinations exceed the cap of " + std::to_string(opt.max_enum));
  }
  const std::size_t total = (std::size_t)(product + 0.5);
  std::vector<std::size_t> stride(lists.size(), 1);
  for (int f = (int)lists.size() - 2; f >= 0; --f)
    stride[(std::size_t)f] = stride[(std::size_t)f + 1] * lists[(std::size_t)f + 1].size();

  struct Best {
    bool any = false;
    S value = S(0);
    std::size_t index = 0;
  };
  const std::size_t chunk = 4096;
  const std::size_t nchunks = (total + chunk - 1) / chunk;
  std::vector<Best> bests = parallel_map<Best>(
      nchunks,
      [&](std::size_t ci) {
        Best best;
        std::vector<MatrixS<S>> K(lists.size());
        const std::size_t lo = ci * chunk, hi = std::min(total, lo + chunk);
        for (std::size_t g = lo; g < hi; ++g) {
          for (std::size_t f = 0; f < lists.size(); ++f)
            K[f] = lists[f][(g / stride[f]) % lists[f].size()];
          S v = detail::routed_cost(rt, C, K);
          if (!best.any || v < best.value) {
            best.any = true;
            best.value = v;
            best.index = g;
          }
        }
        return best;
      },
      opt.workers);
  Best best;
  for (const Best& b : bests) {
    if (!b.any) continue;
    if (!best.any || b.value < best.value) best = b;
  }

  std::vector<MatrixS<S>> K(lists.size());
  for (std::size_t f = 0; f < lists.size(); ++f)
    K[f] = lists[f][(best.index / stride[f]) % lists[f].size()];
  SolveReport<S> rep;
  rep.value = best.value;
  rep.coupling = assemble(kb, detail::selection_from_flat(kb, rt, K), opt.tol);
  rep.status = SolveStatus::GlobalOptimal;
  rep.method = "exhaustive";
  rep.iterations = (long)total;
  rep.seed = opt.seed;
  rep.max_residual = check_membership(rep.coupling, kb.dag, CouplingClass::Bicausal, 1e-8)
                         .max_residual;
  return rep;
}

// Block-coordinate descent over the kernel blocks: sweeps the blocks in
// topological order, replacing each kernel by an exact transport-LP optimum
// with the others fixed, until a sweep improves the objective by no more than
// 1e-10. Restarts draw initial kernels uniformly among block vertices.
template <class S>
SolveReport<S> solve_bicausal_bcd(const KernelBlocks<S>& kb, const GroundCost<S>& cost,
                                  const SolverOptions& opt = {}) {
  if (kb.dag.complete)
    fail(ErrorCode::BadArgument,
         "kernel factorization is undefined on a complete graph; use the unconstrained solve");
  detail::BlockRouting<S> rt = detail::make_routing(kb);
  MatrixS<S> C = cost_matrix(cost, kb.mu.space, kb.mu.support, kb.nu.space, kb.nu.support);
  const std::size_t F = rt.flat.size();
  const int P = rt.R * rt.C;

  // initialization draws come from enumerated vertex lists where the margins
  // are short enough, and from random greedy saturation otherwise
  std::vector<std::vector<MatrixS<S>>> lists(F);
  for (std::size_t f = 0; f < F; ++f) {
    const auto& [v, j] = rt.flat[f];
    const KernelBlock<S>& b = kb.blocks[(std::size_t)v][(std::size_t)j];
    if (b.row_margin.size() <= opt.vertex_dim_cap && b.col_margin.size() <= opt.vertex_dim_cap) {
      try {
        lists[f] = enumerate_vertices<S>(b.row_margin, b.col_margin, opt.vertex_dim_cap);
      } catch (const Error&) {
        lists[f].clear();
      }
    }
  }

  struct Run {
    S value = S(0);
    long sweeps = 0;
    std::vector<MatrixS<S>> kernels;
  };
  const int restarts = std::max(1, opt.restarts);
  std::vector<Run> runs = parallel_map<Run>(
      (std::size_t)restarts,
      [&](std::size_t s) {
        detail::Rng rng(detail::mix_seed(opt.seed, s));
        Run run;
        run.kernels.resize(F);
        for (std::size_t f = 0; f < F; ++f) {
          const auto& [v, j] = rt.flat[f];
          const KernelBlock<S>& b = kb.blocks[(std::size_t)v][(std::size_t)j];
          run.kernels[f] = lists[f].empty()
                               ? detail::random_block_vertex(b.row_margin, b.col_margin, rng)
                               : lists[f][rng.below(lists[f].size())];
        }
        std::vector<MatrixS<S>>& K = run.kernels;
        S obj = detail::routed_cost(rt, C, K);
        std::vector<std::vector<S>> suf((std::size_t)rt.n);
        std::vector<S> pref((std::size_t)P);
        for (long sweep = 0; sweep < opt.max_sweeps; ++sweep) {
          ++run.sweeps;
          for (int k = rt.n - 1; k >= 0; --k) {
            suf[(std::size_t)k].assign((std::size_t)P, S(1));
            if (k + 1 < rt.n)
              for (int p = 0; p < P; ++p) {
                int idx = p * rt.n + k + 1;
                suf[(std::size_t)k][(std::size_t)p] =
                    suf[(std::size_t)k + 1][(std::size_t)p] *
                    K[(std::size_t)rt.blk[(std::size_t)idx]](rt.row[(std::size_t)idx],
                                                             rt.col[(std::size_t)idx]);
              }
          }
          std::fill(pref.begin(), pref.end(), S(1));
          for (int k = 0; k < rt.n; ++k) {
            const int v = kb.dag.order[(std::size_t)k];
            const std::size_t nb = kb.blocks[(std::size_t)v].size();
            std::vector<MatrixS<S>> D(nb);
            for (std::size_t j = 0; j < nb; ++j) {
              const KernelBlock<S>& b = kb.blocks[(std::size_t)v][j];
              D[j] = MatrixS<S>::Zero(b.row_margin.size(), b.col_margin.size());
            }
            for (int p = 0; p < P; ++p) {
              int idx = p * rt.n + k;
              S w = pref[(std::size_t)p] * suf[(std::size_t)k][(std::size_t)p];
              if (w == S(0)) continue;
              int f = rt.blk[(std::size_t)idx];
              D[(std::size_t)(f - rt.base[(std::size_t)v])](rt.row[(std::size_t)idx],
                                                            rt.col[(std::size_t)idx]) +=
                  C(p / rt.C, p % rt.C) * w;
            }
            for (std::size_t j = 0; j < nb; ++j) {
              const int f = rt.base[(std::size_t)v] + (int)j;
              const KernelBlock<S>& b = kb.blocks[(std::size_t)v][j];
              S old(0);
              for (Eigen::Index r = 0; r < D[j].rows(); ++r)
                for (Eigen::Index c = 0; c < D[j].cols(); ++c)
                  old += D[j](r, c) * K[(std::size_t)f](r, c);
              TransportResult<S> res = solve_transport(D[j], b.row_margin, b.col_margin, opt.tol);
              if (res.value < old) K[(std::size_t)f] = res.plan;
            }
            for (int p = 0; p < P; ++p) {
              int idx = p * rt.n + k;
              pref[(std::size_t)p] *= K[(std::size_t)rt.blk[(std::size_t)idx]](
                  rt.row[(std::size_t)idx], rt.col[(std::size_t)idx]);
            }
          }
          S next(0);
          for (int p = 0; p < P; ++p)
            if (!(pref[(std::size_t)p] == S(0)))
              next += pref[(std::size_t)p] * C(p / rt.C, p % rt.C);
          double gain = ScalarOps<S>::to_dbl(obj - next);
          obj = next;
          if (gain <= 1e-10) break;
        }
        run.value = obj;
        return run;
      },
      opt.workers);

  int best = 0;
  long iters = 0;
  for (int s = 0; s < restarts; ++s) {
    iters += runs[(std::size_t)s].sweeps;
    if (runs[(std::size_t)s].value < runs[(std::size_t)best].value) best = s;
  }
  SolveReport<S> rep;
  rep.value = runs[(std::size_t)best].value;
  rep.coupling =
      assemble(kb, detail::selection_from_flat(kb, rt, runs[(std::size_t)best].kernels), opt.tol);
  rep.status = SolveStatus::LocalUpperBound;
  rep.method = "bcd";
  rep.iterations = iters;
  rep.seed = opt.seed;
  rep.max_residual = check_membership(rep.coupling, kb.dag, CouplingClass::Bicausal, 1e-8)
                         .max_residual;
  return rep;
}

template <class S>
SolveReport<S> solve_bicausal_bcd(const KernelBlocks<S>& kb, const GroundCost<S>& cost,
                                  int restarts, std::uint64_t seed) {
  SolverOptions opt;
  opt.restarts = restarts;
  opt.seed = seed;
  return solve_bicausal_bcd(kb, cost, opt);
}

// Structure-dispatched bicausal solve. Order: unconstrained short-circuit,
// backward induction, purely linear program, exhaustive enumeration under the
// cap, block-coordinate descent.
template <class S>
SolveReport<S> solve_bicausal(const Dag& dag, const DiscreteMeasure<S>& mu,
                              const DiscreteMeasure<S>& nu, const GroundCost<S>& cost,
                              const SolverOptions& opt = {}) {
  if (dag.complete || classify_structure(dag) == GraphClass::Full)
    return solve_standard_ot(mu, nu, cost, opt);
  KernelBlocks<S> kb = kernel_blocks(dag, mu, nu);
  if (chain_structure(dag) && cost.separable()) return solve_bicausal_chain(kb, cost, opt);
  ConstraintProgram<S> prog = compile_bicausal(dag, mu, nu);
  if (detail::purely_linear(prog)) {
    std::vector<const LinearConstraintFamily<S>*> fams;
    for (const auto& f : prog.linear) fams.push_back(&f);
    MatrixS<S> C = cost_matrix(cost, mu.space, mu.support, nu.space, nu.support);
    LpResult<S> res = detail::coupling_lp(mu, nu, fams, C, opt.tol);
    return detail::report_from_lp(mu, nu, res, dag, CouplingClass::Bicausal, "linear-lp", opt);
  }
  try {
    return solve_bicausal_exhaustive(kb, cost, opt);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EnumerationCap && e.code() != ErrorCode::DimensionCap &&
        e.code() != ErrorCode::CapExceeded)
      throw;
  }
  return solve_bicausal_bcd(kb, cost, opt);
}

namespace detail {

// One-sided parametrization of the causal couplings with x-marginal mu: per
// vertex i, free conditional rows q_i(y_i | x_i, x_pa, y_pa) against the mu
// mechanism. The y side ranges over the product of nu's coordinate supports;
// matching nu's joint law is enforced by an L1 penalty inside each block LP.
template <class S>
struct OneSided {
  int n = 0, R = 0, G = 0;
  std::vector<std::vector<int>> universe;  // per coordinate: nu-marginal atoms
  std::vector<AtomTuple> ygrid;            // lexicographic product of universes
  std::vector<S> ytarget;                  // nu mass of each grid tuple
  MatrixS<S> C;                            // cost over mu.support x ygrid
  std::vector<S> muw;
  // per vertex: conditional rows and their column count
  std::vector<std::map<std::tuple<AtomTuple, int, AtomTuple>, int>> rowid;
  std::vector<int> rowcount;
  std::vector<int> route_row;  // (a*G + g)*n + k -> row of vertex order[k]
  std::vector<int> route_col;  // same index -> column (position in universe)
  std::vector<int> ycol;       // g*n + vertex -> column of ygrid[g][vertex]
};

template <class S>
OneSided<S> one_sided_model(const Dag& dag, const DiscreteMeasure<S>& mu,
                            const DiscreteMeasure<S>& nu, const GroundCost<S>& cost,
                            double grid_cap = 50000) {
  OneSided<S> m;
  m.n = dag.n;
  m.R = mu.size();
  m.muw = mu.weight;
  m.universe.resize((std::size_t)dag.n);
  ProductSpace grid_space;
  double count = 1;
  for (int i = 0; i < dag.n; ++i) {
    DiscreteMeasure<S> mi = marginal(nu, {i});
    for (const AtomTuple& t : mi.support) m.universe[(std::size_t)i].push_back(t[0]);
    count *= (double)m.universe[(std::size_t)i].size();
    if (count > grid_cap)
      fail(ErrorCode::CapExceeded, "one-sided y-grid exceeds the cap of " +
                                       std::to_string((long long)grid_cap) + " tuples");
    CoordinateSpace cs;
    cs.name = nu.space[(std::size_t)i].name;
    for (int a : m.universe[(std::size_t)i]) {
      cs.atoms.push_back(nu.space[(std::size_t)i].atoms[(std::size_t)a]);
      if (nu.space[(std::size_t)i].has_embedding())
        cs.embedding.push_back(nu.space[(std::size_t)i].embedding[(std::size_t)a]);
    }
    grid_space.push_back(std::move(cs));
  }
  for (AtomTuple& t : enumerate_tuples(grid_space)) {
    AtomTuple y(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
      y[i] = m.universe[i][(std::size_t)t[(std::size_t)i]];
    m.ygrid.push_back(std::move(y));
  }
  m.G = (int)m.ygrid.size();
  m.ytarget.resize((std::size_t)m.G);
  for (int g = 0; g < m.G; ++g) m.ytarget[(std::size_t)g] = nu.mass(m.ygrid[(std::size_t)g]);
  m.C = cost_matrix(cost, mu.space, mu.support, nu.space, m.ygrid);

  m.rowid.resize((std::size_t)dag.n);
  m.rowcount.assign((std::size_t)dag.n, 0);
  for (int i = 0; i < dag.n; ++i) {
    const auto& pa = dag.parents[(std::size_t)i];
    ConditionalTable<S> mech = conditional_table(mu, i, pa);
    ProductSpace pa_univ;
    for (int p : pa) {
      CoordinateSpace cs;
      for (std::size_t a = 0; a < m.universe[(std::size_t)p].size(); ++a)
        cs.atoms.push_back("u" + std::to_string(a));
      pa_univ.push_back(std::move(cs));
    }
    std::vector<AtomTuple> pa_tuples =
        pa.empty() ? std::vector<AtomTuple>{AtomTuple{}} : enumerate_tuples(pa_univ);
    for (const auto& [xp, rowvals] : mech.rows)
      for (int a = 0; a < (int)rowvals.size(); ++a) {
        if (rowvals[(std::size_t)a] == S(0)) continue;
        for (const AtomTuple& pt : pa_tuples) {
          AtomTuple yp(pt.size());
          for (std::size_t c = 0; c < pt.size(); ++c)
            yp[c] = m.universe[(std::size_t)pa[c]][(std::size_t)pt[c]];
          m.rowid[(std::size_t)i].emplace(std::make_tuple(xp, a, yp),
                                          m.rowcount[(std::size_t)i]++);
        }
      }
  }

  m.route_row.resize((std::size_t)(m.R * m.G * dag.n));
  m.route_col.resize(m.route_row.size());
  m.ycol.resize((std::size_t)(m.G * dag.n));
  for (int g = 0; g < m.G; ++g)
    for (int i = 0; i < dag.n; ++i) {
      const auto& u = m.universe[(std::size_t)i];
      int c = (int)(std::lower_bound(u.begin(), u.end(), m.ygrid[(std::size_t)g][(std::size_t)i]) -
                    u.begin());
      m.ycol[(std::size_t)(g * dag.n + i)] = c;
    }
  for (int a = 0; a < m.R; ++a) {
    const AtomTuple& x = mu.support[(std::size_t)a];
    for (int g = 0; g < m.G; ++g) {
      const AtomTuple& y = m.ygrid[(std::size_t)g];
      for (int k = 0; k < dag.n; ++k) {
        int v = dag.order[(std::size_t)k];
        const auto& pa = dag.parents[(std::size_t)v];
        auto key = std::make_tuple(sub_tuple(x, pa), x[(std::size_t)v], sub_tuple(y, pa));
        int idx = (a * m.G + g) * dag.n + k;
        m.route_row[(std::size_t)idx] = m.rowid[(std::size_t)v].at(key);
        m.route_col[(std::size_t)idx] = m.ycol[(std::size_t)(g * dag.n + v)];
      }
    }
  }
  return m;
}

// cost + penalty objective of a full q assignment
template <class S>
S one_sided_objective(const OneSided<S>& m, const Dag& dag, const std::vector<MatrixS<S>>& Q,
                      const S& penalty) {
  S total(0);
  std::vector<S> margin((std::size_t)m.G, S(0));
  for (int a = 0; a < m.R; ++a)
    for (int g = 0; g < m.G; ++g) {
      S w = m.muw[(std::size_t)a];
      const int off = (a * m.G + g) * m.n;
      for (int k = 0; k < m.n && !(w == S(0)); ++k) {
        int v = dag.order[(std::size_t)k];
        int idx = off + k;
        w *= Q[(std::size_t)v](m.route_row[(std::size_t)idx], m.route_col[(std::size_t)idx]);
      }
      if (w == S(0)) continue;
      total += w * m.C(a, g);
      margin[(std::size_t)g] += w;
    }
  for (int g = 0; g < m.G; ++g) {
    S d = margin[(std::size_t)g] - m.ytarget[(std::size_t)g];
    total += penalty * ScalarOps<S>::abs(d);
  }
  return total;
}

}  // namespace detail

// Causal optimal transport. When the compiled program is purely linear the
// problem is one LP and the optimum is global. Otherwise the LP over the
// linear families gives a lower bound, and block-coordinate descent over the
// one-sided kernel parametrization (with an L1 penalty driving the y-marginal
// to nu) gives a local upper bound; when nu also factorizes, the bicausal
// solution both competes as a candidate and warm-starts one descent, so the
// causal value never exceeds the bicausal one.
template <class S>
SolveReport<S> solve_causal(const Dag& dag, const DiscreteMeasure<S>& mu,
                            const DiscreteMeasure<S>& nu, const GroundCost<S>& cost,
                            const SolverOptions& opt = {}) {
  ConstraintProgram<S> prog = compile_causal(dag, mu, nu);  // MuNotCompatible guard
  if (dag.complete || classify_structure(dag) == GraphClass::Full) {
    SolveReport<S> rep = solve_standard_ot(mu, nu, cost, opt);
    rep.has_lower_bound = true;
    rep.lower_bound = rep.value;
    return rep;
  }
  MatrixS<S> C = cost_matrix(cost, mu.space, mu.support, nu.space, nu.support);
  std::vector<const LinearConstraintFamily<S>*> fams;
  for (const auto& f : prog.linear) fams.push_back(&f);
  LpResult<S> relax = detail::coupling_lp(mu, nu, fams, C, opt.tol);
  if (detail::purely_linear(prog)) {
    SolveReport<S> rep =
        detail::report_from_lp(mu, nu, relax, dag, CouplingClass::Causal, "causal-lp", opt);
    if (rep.status == SolveStatus::GlobalOptimal) {
      rep.has_lower_bound = true;
      rep.lower_bound = rep.value;
    }
    return rep;
  }
  if (relax.status == LpStatus::Infeasible) {
    SolveReport<S> rep;
    rep.status = SolveStatus::Infeasible;
    rep.method = "causal-bcd";
    rep.seed = opt.seed;
    return rep;
  }
  if (relax.status == LpStatus::Unbounded)
    fail(ErrorCode::Unbounded, "causal relaxation LP reported unbounded");

  detail::OneSided<S> m = detail::one_sided_model(dag, mu, nu, cost);
  S maxc(0);
  for (int a = 0; a < m.R; ++a)
    for (int g = 0; g < m.G; ++g)
      if (m.C(a, g) > maxc) maxc = m.C(a, g);
  const S penalty = opt.penalty > 0 ? ScalarOps<S>::from_double(opt.penalty)
                                    : S(100) * (S(1) + maxc);

  // the bicausal solution, when it exists, is causal-feasible: keep it as a
  // candidate and derive a warm start from its conditionals
  bool have_bicausal = false;
  SolveReport<S> bic;
  try {
    bic = solve_bicausal(dag, mu, nu, cost, opt);
    have_bicausal = bic.status != SolveStatus::Infeasible;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MarginalNotCompatible) throw;
  }

  auto dirac_rows = [&](detail::Rng& rng) {
    std::vector<MatrixS<S>> Q((std::size_t)dag.n);
    for (int i = 0; i < dag.n; ++i) {
      int cols = (int)m.universe[(std::size_t)i].size();
      Q[(std::size_t)i] = MatrixS<S>::Zero(m.rowcount[(std::size_t)i], cols);
      for (int r = 0; r < m.rowcount[(std::size_t)i]; ++r)
        Q[(std::size_t)i](r, (Eigen::Index)rng.below((std::size_t)cols)) = S(1);
    }
    return Q;
  };
  auto warm_rows = [&]() {
    std::vector<MatrixS<S>> Q((std::size_t)dag.n);
    for (int i = 0; i < dag.n; ++i) {
      int cols = (int)m.universe[(std::size_t)i].size();
      Q[(std::size_t)i].resize(m.rowcount[(std::size_t)i], cols);
      const auto& pa = dag.parents[(std::size_t)i];
      for (const auto& [key, r] : m.rowid[(std::size_t)i]) {
        const auto& [xp, xi, yp] = key;
        // conditional of the bicausal coupling given (x_pa, x_i, y_pa)
        S den(0);
        std::vector<S> num((std::size_t)cols, S(0));
        for (int a = 0; a < mu.size(); ++a) {
          const AtomTuple& x = mu.support[(std::size_t)a];
          if (sub_tuple(x, pa) != xp || x[(std::size_t)i] != xi) continue;
          for (int b = 0; b < nu.size(); ++b) {
            const AtomTuple& y = nu.support[(std::size_t)b];
            if (sub_tuple(y, pa) != yp) continue;
            const S& w = bic.coupling.weight(a, b);
            den += w;
            const auto& u = m.universe[(std::size_t)i];
            int c = (int)(std::lower_bound(u.begin(), u.end(), y[(std::size_t)i]) - u.begin());
            num[(std::size_t)c] += w;
          }
        }
        if (den == S(0)) {
          for (int c = 0; c < cols; ++c)
            Q[(std::size_t)i](r, c) = S(1) / S(cols);
        } else {
          for (int c = 0; c < cols; ++c) Q[(std::size_t)i](r, c) = num[(std::size_t)c] / den;
        }
      }
    }
    return Q;
  };

  struct Run {
    S objective = S(0);
    long sweeps = 0;
    std::vector<MatrixS<S>> rows;
  };
  auto descend = [&](std::vector<MatrixS<S>> Q) {
    Run run;
    S obj = detail::one_sided_objective(m, dag, Q, penalty);
    const int P = m.R * m.G;
    std::vector<std::vector<S>> suf((std::size_t)m.n);
    std::vector<S> pref((std::size_t)P);
    for (long sweep = 0; sweep < opt.max_sweeps; ++sweep) {
      ++run.sweeps;
      for (int k = m.n - 1; k >= 0; --k) {
        suf[(std::size_t)k].assign((std::size_t)P, S(1));
        if (k + 1 < m.n) {
          int v = dag.order[(std::size_t)k + 1];
          for (int p = 0; p < P; ++p) {
            int idx = p * m.n + k + 1;
            suf[(std::size_t)k][(std::size_t)p] =
                suf[(std::size_t)k + 1][(std::size_t)p] *
                Q[(std::size_t)v](m.route_row[(std::size_t)idx], m.route_col[(std::size_t)idx]);
          }
        }
      }
      std::fill(pref.begin(), pref.end(), S(1));
      for (int k = 0; k < m.n; ++k) {
        const int v = dag.order[(std::size_t)k];
        const int nr = m.rowcount[(std::size_t)v];
        const int nc = (int)m.universe[(std::size_t)v].size();
        // linear coefficients of the block objective and of each grid margin
        MatrixS<S> lin = MatrixS<S>::Zero(nr, nc);
        MatrixS<S> mco = MatrixS<S>::Zero(m.G, nr);  // margin row g vs block row
        for (int p = 0; p < P; ++p) {
          int a = p / m.G, g = p % m.G;
          int idx = p * m.n + k;
          S w = m.muw[(std::size_t)a] * pref[(std::size_t)p] * suf[(std::size_t)k][(std::size_t)p];
          if (w == S(0)) continue;
          int r = m.route_row[(std::size_t)idx], c = m.route_col[(std::size_t)idx];
          lin(r, c) += m.C(a, g) * w;
          mco(g, r) += w;
        }
        // equality LP: per-row simplex constraints plus per-grid-point margin
        // rows with split slack u - v for the L1 penalty
        const int nq = nr * nc;
        LinearProgram<S> lp;
        lp.A = MatrixS<S>::Zero(nr + m.G, nq + 2 * m.G);
        lp.b = VectorS<S>::Zero(nr + m.G);
        lp.c = VectorS<S>::Zero(nq + 2 * m.G);
        for (int r = 0; r < nr; ++r) {
          for (int c = 0; c < nc; ++c) {
            lp.A(r, r * nc + c) = S(1);
            lp.c(r * nc + c) = lin(r, c);
          }
          lp.b(r) = S(1);
        }
        for (int g = 0; g < m.G; ++g) {
          int cg = m.ycol[(std::size_t)(g * m.n + v)];
          for (int r = 0; r < nr; ++r)
            if (!(mco(g, r) == S(0))) lp.A(nr + g, r * nc + cg) = mco(g, r);
          lp.A(nr + g, nq + g) = S(-1);
          lp.A(nr + g, nq + m.G + g) = S(1);
          lp.b(nr + g) = m.ytarget[(std::size_t)g];
          lp.c(nq + g) = penalty;
          lp.c(nq + m.G + g) = penalty;
        }
        LpResult<S> res = solve_lp(lp, opt.tol);
        if (res.status == LpStatus::Optimal) {
          S old(0);
          for (int r = 0; r < nr; ++r)
            for (int c = 0; c < nc; ++c) old += lin(r, c) * Q[(std::size_t)v](r, c);
          for (int g = 0; g < m.G; ++g) {
            S mg(0);
            for (int r = 0; r < nr; ++r)
              mg += mco(g, r) * Q[(std::size_t)v](r, m.ycol[(std::size_t)(g * m.n + v)]);
            old += penalty * ScalarOps<S>::abs(mg - m.ytarget[(std::size_t)g]);
          }
          if (res.value < old)
            for (int r = 0; r < nr; ++r)
              for (int c = 0; c < nc; ++c) Q[(std::size_t)v](r, c) = res.x(r * nc + c);
        }
        for (int p = 0; p < P; ++p) {
          int idx = p * m.n + k;
          pref[(std::size_t)p] *= Q[(std::size_t)v](m.route_row[(std::size_t)idx],
                                                    m.route_col[(std::size_t)idx]);
        }
      }
      S next = detail::one_sided_objective(m, dag, Q, penalty);
      double gain = ScalarOps<S>::to_dbl(obj - next);
      obj = next;
      if (gain <= 1e-10) break;
    }
    run.objective = obj;
    run.rows = std::move(Q);
    return run;
  };

  const int restarts = std::max(1, opt.restarts);
  std::vector<Run> runs = parallel_map<Run>(
      (std::size_t)restarts,
      [&](std::size_t s) {
        if (s == 0 && have_bicausal) return descend(warm_rows());
        detail::Rng rng(detail::mix_seed(opt.seed, s));
        return descend(dirac_rows(rng));
      },
      opt.workers);

  // candidates: each descent endpoint truncated onto supp(nu), plus the
  // bicausal coupling itself; admissible means the causal membership residual
  // survives at solver tolerance
  ConstraintProgram<S> marg = compile_marginals(mu, nu);
  struct Candidate {
    S value = S(0);
    Coupling<S> coupling;
    double residual = 0.0;
    long sweeps = 0;
  };
  std::vector<Candidate> cands;
  std::vector<int> g_of_support(nu.size());
  {
    std::map<AtomTuple, int> gidx;
    for (int g = 0; g < m.G; ++g) gidx[m.ygrid[(std::size_t)g]] = g;
    for (int b = 0; b < nu.size(); ++b) g_of_support[(std::size_t)b] = gidx.at(nu.support[(std::size_t)b]);
  }
  long iters = 0;
  for (const Run& run : runs) {
    iters += run.sweeps;
    Candidate cand;
    cand.sweeps = run.sweeps;
    cand.coupling = Coupling<S>{mu, nu, MatrixS<S>::Zero(mu.size(), nu.size())};
    for (int a = 0; a < mu.size(); ++a)
      for (int b = 0; b < nu.size(); ++b) {
        int g = g_of_support[(std::size_t)b];
        S w = m.muw[(std::size_t)a];
        const int off = (a * m.G + g) * m.n;
        for (int k = 0; k < m.n && !(w == S(0)); ++k) {
          int v = dag.order[(std::size_t)k];
          int idx = off + k;
          w *= run.rows[(std::size_t)v](m.route_row[(std::size_t)idx],
                                        m.route_col[(std::size_t)idx]);
        }
        cand.coupling.weight(a, b) = w;
        cand.value += w * C(a, b);
      }
    MembershipReport mem;
    detail::scan_program(marg, cand.coupling.weight, mem, 1e-8);
    detail::scan_program(prog, cand.coupling.weight, mem, 1e-8);
    cand.residual = mem.max_residual;
    cands.push_back(std::move(cand));
  }
  if (have_bicausal) {
    Candidate cand;
    cand.coupling = bic.coupling;
    for (int a = 0; a < mu.size(); ++a)
      for (int b = 0; b < nu.size(); ++b) cand.value += cand.coupling.weight(a, b) * C(a, b);
    MembershipReport mem;
    detail::scan_program(marg, cand.coupling.weight, mem, 1e-8);
    detail::scan_program(prog, cand.coupling.weight, mem, 1e-8);
    cand.residual = mem.max_residual;
    cands.push_back(std::move(cand));
  }
  const double admit = std::max(opt.tol, 1e-9);
  int best = -1;
  for (int i = 0; i < (int)cands.size(); ++i) {
    if (best < 0) {
      best = i;
      continue;
    }
    bool ia = cands[(std::size_t)i].residual <= admit, ba = cands[(std::size_t)best].residual <= admit;
    if (ia != ba) {
      if (ia) best = i;
      continue;
    }
    if (cands[(std::size_t)i].value < cands[(std::size_t)best].value) best = i;
  }

  SolveReport<S> rep;
  rep.value = cands[(std::size_t)best].value;
  rep.coupling = cands[(std::size_t)best].coupling;
  rep.status = SolveStatus::LocalUpperBound;
  rep.method = "causal-bcd";
  rep.iterations = iters;
  rep.seed = opt.seed;
  rep.max_residual = cands[(std::size_t)best].residual;
  rep.has_lower_bound = true;
  rep.lower_bound = relax.value;
  return rep;
}

}  // namespace causalot
