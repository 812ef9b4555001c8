// kernels.hpp -- the block parametrization of the bicausal polytope.
//
// When both marginals factorize along the graph, bicausal couplings are
// exactly the products of per-vertex kernels kappa_i(x_i, y_i | x_pa, y_pa)
// whose margins are the two mechanisms. Each (vertex, parent-value pair)
// therefore contributes an independent small transportation polytope, a
// "block"; choosing one kernel per block and multiplying along a topological
// order assembles a coupling with exact marginals. Parent-value pairs that
// end up unreachable under a particular selection still get blocks (with the
// product kernel as default) so that the block index set does not depend on
// the selection.
#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "causalot/constraints.hpp"
#include "causalot/dag.hpp"
#include "causalot/error.hpp"
#include "causalot/measure.hpp"
#include "causalot/metric.hpp"
#include "causalot/rational.hpp"
#include "causalot/simplex.hpp"
#include "causalot/space.hpp"

namespace causalot {

template <class S>
struct KernelBlock {
  int vertex = 0;              // graph vertex the block belongs to
  AtomTuple x_pa, y_pa;        // conditioning parent values
  std::vector<int> row_atoms;  // atoms of the vertex with positive mass given x_pa
  std::vector<int> col_atoms;  // same on the y side
  VectorS<S> row_margin;       // mu(x_i = row_atoms[r] | x_pa), sums to 1
  VectorS<S> col_margin;       // nu(y_i = col_atoms[c] | y_pa), sums to 1
  MatrixS<S> kernel;           // current kernel; defaults to the product

  int row_of(int atom) const {
    auto it = std::lower_bound(row_atoms.begin(), row_atoms.end(), atom);
    return (int)(it - row_atoms.begin());
  }
  int col_of(int atom) const {
    auto it = std::lower_bound(col_atoms.begin(), col_atoms.end(), atom);
    return (int)(it - col_atoms.begin());
  }
};

template <class S>
struct KernelBlocks {
  Dag dag;
  DiscreteMeasure<S> mu;
  DiscreteMeasure<S> nu;
  std::vector<std::vector<KernelBlock<S>>> blocks;  // indexed by vertex id
  // lookup (x_pa, y_pa) -> position in blocks[vertex]
  std::vector<std::map<std::pair<AtomTuple, AtomTuple>, int>> index;

  std::size_t block_count() const {
    std::size_t n = 0;
    for (const auto& v : blocks) n += v.size();
    return n;
  }
  const KernelBlock<S>& at(int vertex, const AtomTuple& xp, const AtomTuple& yp) const {
    const auto& idx = index[(std::size_t)vertex];
    auto it = idx.find({xp, yp});
    if (it == idx.end())
      fail(ErrorCode::ZeroMassConditioning, "no block for the requested parent values");
    return blocks[(std::size_t)vertex][(std::size_t)it->second];
  }
};

// One block per vertex and per pair of supported parent values. Requires both
// marginals to factorize along the graph, otherwise the assembled products
// would not reproduce them.
template <class S>
KernelBlocks<S> kernel_blocks(const Dag& dag, const DiscreteMeasure<S>& mu,
                              const DiscreteMeasure<S>& nu) {
  if (mu.n() != dag.n || nu.n() != dag.n)
    fail(ErrorCode::CoordinateMismatch, "measures and graph disagree on coordinate count");
  if (CompatReport c = is_g_compatible(mu, dag); !c)
    fail(ErrorCode::MarginalNotCompatible,
         "mu does not factorize along the graph (vertex " + std::to_string(c.vertex + 1) + ")");
  if (CompatReport c = is_g_compatible(nu, dag); !c)
    fail(ErrorCode::MarginalNotCompatible,
         "nu does not factorize along the graph (vertex " + std::to_string(c.vertex + 1) + ")");
  KernelBlocks<S> kb{dag, mu, nu, {}, {}};
  kb.blocks.resize((std::size_t)dag.n);
  kb.index.resize((std::size_t)dag.n);
  for (int i = 0; i < dag.n; ++i) {
    const auto& pa = dag.parents[(std::size_t)i];
    ConditionalTable<S> mx = conditional_table(mu, i, pa);
    ConditionalTable<S> my = conditional_table(nu, i, pa);
    for (const auto& [xp, rx] : mx.rows)
      for (const auto& [yp, ry] : my.rows) {
        KernelBlock<S> b;
        b.vertex = i;
        b.x_pa = xp;
        b.y_pa = yp;
        for (int a = 0; a < (int)rx.size(); ++a)
          if (!(rx[(std::size_t)a] == S(0))) b.row_atoms.push_back(a);
        for (int a = 0; a < (int)ry.size(); ++a)
          if (!(ry[(std::size_t)a] == S(0))) b.col_atoms.push_back(a);
        b.row_margin.resize((Eigen::Index)b.row_atoms.size());
        b.col_margin.resize((Eigen::Index)b.col_atoms.size());
        for (std::size_t r = 0; r < b.row_atoms.size(); ++r)
          b.row_margin((Eigen::Index)r) = rx[(std::size_t)b.row_atoms[r]];
        for (std::size_t c = 0; c < b.col_atoms.size(); ++c)
          b.col_margin((Eigen::Index)c) = ry[(std::size_t)b.col_atoms[c]];
        b.kernel.resize(b.row_margin.size(), b.col_margin.size());
        for (Eigen::Index r = 0; r < b.kernel.rows(); ++r)
          for (Eigen::Index c = 0; c < b.kernel.cols(); ++c)
            b.kernel(r, c) = b.row_margin(r) * b.col_margin(c);
        kb.index[(std::size_t)i].emplace(std::make_pair(xp, yp),
                                         (int)kb.blocks[(std::size_t)i].size());
        kb.blocks[(std::size_t)i].push_back(std::move(b));
      }
  }
  return kb;
}

// A selection assigns one kernel matrix to every block, in block order.
template <class S>
using KernelSelection = std::vector<std::vector<MatrixS<S>>>;

template <class S>
KernelSelection<S> default_selection(const KernelBlocks<S>& kb) {
  KernelSelection<S> sel(kb.blocks.size());
  for (std::size_t i = 0; i < kb.blocks.size(); ++i)
    for (const auto& b : kb.blocks[i]) sel[i].push_back(b.kernel);
  return sel;
}

namespace detail {

template <class S>
void require_feasible_kernel(const KernelBlock<S>& b, const MatrixS<S>& k, double tol) {
  if (k.rows() != (Eigen::Index)b.row_atoms.size() || k.cols() != (Eigen::Index)b.col_atoms.size())
    fail(ErrorCode::InfeasibleKernel, "kernel shape does not match the block margins");
  for (Eigen::Index r = 0; r < k.rows(); ++r)
    for (Eigen::Index c = 0; c < k.cols(); ++c)
      if (k(r, c) < S(0) && !ScalarOps<S>::is_zero(k(r, c), tol))
        fail(ErrorCode::InfeasibleKernel, "kernel has a negative entry");
  for (Eigen::Index r = 0; r < k.rows(); ++r)
    if (!ScalarOps<S>::equal(k.row(r).sum(), b.row_margin(r), tol))
      fail(ErrorCode::InfeasibleKernel, "kernel row margin mismatch");
  for (Eigen::Index c = 0; c < k.cols(); ++c)
    if (!ScalarOps<S>::equal(k.col(c).sum(), b.col_margin(c), tol))
      fail(ErrorCode::InfeasibleKernel, "kernel column margin mismatch");
}

}  // namespace detail

// Multiplies the selected kernels along the graph: the resulting coupling has
// marginals mu and nu exactly, and is bicausal by construction.
template <class S>
Coupling<S> assemble(const KernelBlocks<S>& kb, const KernelSelection<S>& sel,
                     double tol = 1e-9) {
  if (sel.size() != kb.blocks.size())
    fail(ErrorCode::SelectionShapeMismatch, "selection has the wrong number of vertices");
  for (std::size_t i = 0; i < kb.blocks.size(); ++i) {
    if (sel[i].size() != kb.blocks[i].size())
      fail(ErrorCode::SelectionShapeMismatch,
           "selection for vertex " + std::to_string(i + 1) + " has the wrong block count");
    for (std::size_t jb = 0; jb < kb.blocks[i].size(); ++jb)
      detail::require_feasible_kernel(kb.blocks[i][jb], sel[i][jb], tol);
  }
  const auto& mu = kb.mu;
  const auto& nu = kb.nu;
  Coupling<S> pi{mu, nu, MatrixS<S>(mu.size(), nu.size())};
  for (int a = 0; a < mu.size(); ++a) {
    const AtomTuple& x = mu.support[(std::size_t)a];
    for (int b = 0; b < nu.size(); ++b) {
      const AtomTuple& y = nu.support[(std::size_t)b];
      S m(1);
      for (int i = 0; i < kb.dag.n && !(m == S(0)); ++i) {
        const auto& pa = kb.dag.parents[(std::size_t)i];
        int at = kb.index[(std::size_t)i].at({sub_tuple(x, pa), sub_tuple(y, pa)});
        const KernelBlock<S>& blk = kb.blocks[(std::size_t)i][(std::size_t)at];
        m *= sel[(std::size_t)i][(std::size_t)at](blk.row_of(x[(std::size_t)i]),
                                                  blk.col_of(y[(std::size_t)i]));
      }
      pi.weight(a, b) = m;
    }
  }
  return pi;
}

// Convenience: assemble the kernels currently stored in the blocks.
template <class S>
Coupling<S> assemble(const KernelBlocks<S>& kb, double tol = 1e-9) {
  return assemble(kb, default_selection(kb), tol);
}

}  // namespace causalot
