// Solver tests. Oracle strategy: the standard LP is checked against a
// permutation brute force and against transportation-polytope vertex
// enumeration; the chain recursion, the exhaustive kernel search, and the
// linear-program route are independent derivations of the same optimum and
// must agree; block-coordinate descent is checked against the exhaustive
// optimum; the causal LP is checked against basis enumeration of its
// feasible polytope, built in this file from the raw equations.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "causalot/solver.hpp"
#include "test_support.hpp"

using namespace causalot;

namespace {

DiscreteMeasure<double> dbl_measure(const DiscreteMeasure<Rational>& m) {
  DiscreteMeasure<double> out;
  out.space = m.space;
  out.support = m.support;
  out.weight.reserve(m.weight.size());
  for (const Rational& w : m.weight) out.weight.push_back(to_double(w));
  return out;
}

template <class S>
GroundCost<S> abs_additive(int n) {
  std::vector<CoordinateMetric<S>> ms((std::size_t)n, CoordinateMetric<S>::absdiff());
  return GroundCost<S>::additive(std::move(ms), 1);
}

template <class S>
GroundCost<S> sq_power(int n) {
  std::vector<CoordinateMetric<S>> ms((std::size_t)n, CoordinateMetric<S>::absdiff());
  return GroundCost<S>::power_sum(std::move(ms), 2);
}

GroundCost<double> random_joint(const ProductSpace& sp, std::mt19937_64& rng) {
  std::vector<AtomTuple> tuples = enumerate_tuples(sp);
  const int m = (int)tuples.size();
  MatrixS<double> M = MatrixS<double>::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) M(i, j) = M(j, i) = (double)(1 + rng() % 9);
  return GroundCost<double>::joint_matrix(sp, std::move(tuples), std::move(M));
}

template <class S>
S coupling_cost(const MatrixS<S>& C, const MatrixS<S>& W) {
  S total(0);
  for (Eigen::Index i = 0; i < C.rows(); ++i)
    for (Eigen::Index j = 0; j < C.cols(); ++j) total += C(i, j) * W(i, j);
  return total;
}

// All basic feasible solutions of {Ax = b, x >= 0} by exact basis
// enumeration: every size-rank(A) column subset that forms a consistent
// nonsingular system and solves nonnegatively.
int echelon(MatrixS<Rational>& M) {
  int rank = 0;
  for (Eigen::Index col = 0; col < M.cols() && rank < M.rows(); ++col) {
    Eigen::Index piv = -1;
    for (Eigen::Index r = rank; r < M.rows(); ++r)
      if (!(M(r, col) == Rational(0))) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    for (Eigen::Index c = 0; c < M.cols(); ++c) std::swap(M(rank, c), M(piv, c));
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      if (r == rank || M(r, col) == Rational(0)) continue;
      Rational f = M(r, col) / M(rank, col);
      for (Eigen::Index c = 0; c < M.cols(); ++c) M(r, c) -= f * M(rank, c);
    }
    ++rank;
  }
  return rank;
}

std::vector<VectorS<Rational>> basic_points(const MatrixS<Rational>& A,
                                            const VectorS<Rational>& b) {
  const int m = (int)A.rows(), n = (int)A.cols();
  MatrixS<Rational> probe = A;
  const int rank = echelon(probe);
  std::vector<VectorS<Rational>> points;
  std::vector<int> pick(rank);
  std::iota(pick.begin(), pick.end(), 0);
  for (;;) {
    MatrixS<Rational> M(m, rank + 1);
    for (int j = 0; j < rank; ++j)
      for (int r = 0; r < m; ++r) M(r, j) = A(r, pick[(std::size_t)j]);
    for (int r = 0; r < m; ++r) M(r, rank) = b(r);
    MatrixS<Rational> red = M;
    int consistent_rank = echelon(red);
    MatrixS<Rational> cols = M.leftCols(rank);
    int basis_rank = echelon(cols);
    if (basis_rank == rank && consistent_rank == rank) {
      // back substitution on the reduced system
      VectorS<Rational> xb = VectorS<Rational>::Zero(rank);
      bool ok = true;
      for (int r = rank - 1; r >= 0 && ok; --r) {
        Eigen::Index lead = -1;
        for (Eigen::Index c = 0; c < rank; ++c)
          if (!(red(r, c) == Rational(0))) {
            lead = c;
            break;
          }
        if (lead < 0) {
          ok = !(red(r, rank) == Rational(0)) ? false : ok;
          continue;
        }
        Rational s = red(r, rank);
        for (Eigen::Index c = lead + 1; c < rank; ++c) s -= red(r, c) * xb(c);
        xb(lead) = s / red(r, lead);
      }
      for (int j = 0; j < rank && ok; ++j)
        if (xb(j) < Rational(0)) ok = false;
      if (ok) {
        VectorS<Rational> x = VectorS<Rational>::Zero(n);
        for (int j = 0; j < rank; ++j) x(pick[(std::size_t)j]) = xb(j);
        points.push_back(std::move(x));
      }
    }
    int i = rank - 1;
    while (i >= 0 && pick[(std::size_t)i] == n - rank + i) --i;
    if (i < 0) break;
    ++pick[(std::size_t)i];
    for (int j = i + 1; j < rank; ++j) pick[(std::size_t)j] = pick[(std::size_t)j - 1] + 1;
  }
  return points;
}

}  // namespace

TEST_CASE("standard transport matches the permutation brute force") {
  std::mt19937_64 rng(11);
  std::vector<double> xv(6), yv(6);
  for (auto& v : xv) v = (double)(rng() % 50);
  for (auto& v : yv) v = (double)(rng() % 50);
  ProductSpace spx{CoordinateSpace::reals("x", xv)};
  ProductSpace spy{CoordinateSpace::reals("y", yv)};
  std::vector<std::pair<AtomTuple, Rational>> ex, ey;
  for (int i = 0; i < 6; ++i) {
    ex.emplace_back(AtomTuple{i}, Rational(1) / Rational(6));
    ey.emplace_back(AtomTuple{i}, Rational(1) / Rational(6));
  }
  auto mu = make_measure<Rational>(spx, std::move(ex));
  auto nu = make_measure<Rational>(spy, std::move(ey));
  auto cost = abs_additive<Rational>(1);
  SolveReport<Rational> rep = solve_standard_ot(mu, nu, cost);
  CHECK(rep.status == SolveStatus::GlobalOptimal);
  CHECK(rep.method == "standard-lp");

  MatrixS<Rational> C = cost_matrix(cost, spx, mu.support, spy, nu.support);
  std::vector<int> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  Rational best(-1);
  do {
    Rational v(0);
    for (int i = 0; i < 6; ++i) v += C(i, perm[(std::size_t)i]) / Rational(6);
    if (best < Rational(0) || v < best) best = v;
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(rep.value == best);
}

TEST_CASE("standard transport matches vertex enumeration on random margins") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> xv{0, 1, 2, 3}, yv{0.5, 1.5, 2.5, 3.5, 4.5};
    ProductSpace spx{CoordinateSpace::reals("x", xv)};
    ProductSpace spy{CoordinateSpace::reals("y", yv)};
    auto rw = testsup::random_row(4, rng), cw = testsup::random_row(5, rng);
    std::vector<std::pair<AtomTuple, Rational>> ex, ey;
    for (int i = 0; i < 4; ++i) ex.emplace_back(AtomTuple{i}, rw[(std::size_t)i]);
    for (int i = 0; i < 5; ++i) ey.emplace_back(AtomTuple{i}, cw[(std::size_t)i]);
    auto mu = make_measure<Rational>(spx, std::move(ex));
    auto nu = make_measure<Rational>(spy, std::move(ey));
    auto cost = abs_additive<Rational>(1);
    SolveReport<Rational> rep = solve_standard_ot(mu, nu, cost);

    MatrixS<Rational> C = cost_matrix(cost, spx, mu.support, spy, nu.support);
    VectorS<Rational> r(4), c(5);
    for (int i = 0; i < 4; ++i) r(i) = mu.weight[(std::size_t)i];
    for (int i = 0; i < 5; ++i) c(i) = nu.weight[(std::size_t)i];
    Rational best(-1);
    for (const auto& v : enumerate_vertices<Rational>(r, c)) {
      Rational val = coupling_cost(C, v);
      if (best < Rational(0) || val < best) best = val;
    }
    CHECK(rep.value == best);
    CHECK(coupling_cost(C, rep.coupling.weight) == rep.value);
  }
}

TEST_CASE("chain recursion, exhaustive search, and descent agree on random chains") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    std::mt19937_64 rng(seed);
    Dag dag = seed % 3 == 0 ? validate_dag(3, {{0, 1}}) : dag_markov(3);
    ProductSpace sp = testsup::binary_space(3);
    auto mu = dbl_measure(testsup::random_compatible(dag, sp, rng));
    auto nu = dbl_measure(testsup::random_compatible(dag, sp, rng));
    GroundCost<double> cost = seed % 2 == 0 ? abs_additive<double>(3) : sq_power<double>(3);

    KernelBlocks<double> kb = kernel_blocks(dag, mu, nu);
    SolveReport<double> dp = solve_bicausal_chain(kb, cost);
    SolveReport<double> ex = solve_bicausal_exhaustive(kb, cost);
    CHECK(dp.status == SolveStatus::GlobalOptimal);
    CHECK(ex.status == SolveStatus::GlobalOptimal);
    CHECK(dp.method == "chain-dp");
    CHECK(ex.method == "exhaustive");
    CHECK(dp.value == doctest::Approx(ex.value).epsilon(1e-9));

    SolveReport<double> bcd = solve_bicausal_bcd(kb, cost, 16, seed);
    CHECK(bcd.status == SolveStatus::LocalUpperBound);
    CHECK(bcd.method == "bcd");
    CHECK(bcd.value == doctest::Approx(ex.value).epsilon(1e-9));

    MatrixS<double> C = cost_matrix(cost, sp, mu.support, sp, nu.support);
    CHECK(coupling_cost(C, dp.coupling.weight) == doctest::Approx(dp.value).epsilon(1e-12));
    for (const SolveReport<double>* rep : {&dp, &ex, &bcd}) {
      CHECK(rep->max_residual <= 1e-8);
      CHECK(check_membership(rep->coupling, dag, mu, nu, CouplingClass::Bicausal, 1e-8).ok);
    }

    SolveReport<double> via = solve_bicausal(dag, mu, nu, cost);
    CHECK(via.method == "chain-dp");
    CHECK(via.value == dp.value);
  }
}

TEST_CASE("full graphs reduce to unconstrained transport") {
  // measures are built on an acyclic graph; every measure is compatible with
  // the complete graph, which only routes the solve to the unconstrained LP
  std::mt19937_64 rng(3);
  Dag full = dag_complete(2);
  ProductSpace sp = testsup::binary_space(2);
  auto mu = dbl_measure(testsup::random_compatible(dag_markov(2), sp, rng));
  auto nu = dbl_measure(testsup::random_compatible(dag_markov(2), sp, rng));
  GroundCost<double> cost = abs_additive<double>(2);
  SolveReport<double> flat = solve_standard_ot(mu, nu, cost);
  SolveReport<double> rep = solve_bicausal(full, mu, nu, cost);
  CHECK(rep.method == "standard-lp");
  CHECK(rep.value == flat.value);
  CHECK(rep.status == SolveStatus::GlobalOptimal);

  // the kernel solvers refuse the complete graph outright: its preset parent
  // lists are not a factorization order
  KernelBlocks<double> kb;
  kb.dag = full;
  try {
    solve_bicausal_exhaustive(kb, cost);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadArgument);
  }

  Dag lone = dag_empty(1);
  ProductSpace sp1 = testsup::binary_space(1);
  auto m1 = dbl_measure(testsup::random_compatible(lone, sp1, rng));
  auto n1 = dbl_measure(testsup::random_compatible(lone, sp1, rng));
  SolveReport<double> one = solve_bicausal(lone, m1, n1, abs_additive<double>(1));
  CHECK(one.method == "standard-lp");
}

TEST_CASE("empty graphs with product marginals add per-coordinate optima") {
  for (std::uint64_t seed = 2; seed <= 6; ++seed) {
    std::mt19937_64 rng(seed);
    Dag dag = dag_empty(3);
    ProductSpace sp = testsup::binary_space(3);
    auto mu = dbl_measure(testsup::random_compatible(dag, sp, rng));
    auto nu = dbl_measure(testsup::random_compatible(dag, sp, rng));
    GroundCost<double> cost = seed % 2 == 0 ? abs_additive<double>(3) : sq_power<double>(3);
    SolveReport<double> rep = solve_bicausal(dag, mu, nu, cost);
    CHECK(rep.status == SolveStatus::GlobalOptimal);

    double total = 0;
    for (int i = 0; i < 3; ++i) {
      DiscreteMeasure<double> mi = marginal(mu, {i});
      DiscreteMeasure<double> ni = marginal(nu, {i});
      GroundCost<double> ci = cost.kind == GroundCost<double>::Kind::Additive
                                  ? abs_additive<double>(1)
                                  : sq_power<double>(1);
      total += solve_standard_ot(mi, ni, ci).value;
    }
    CHECK(rep.value == doctest::Approx(total).epsilon(1e-9));
  }
}

TEST_CASE("history-spanning parents make the program one linear program") {
  // two vertices, parents covering the whole history, but a joint-matrix cost
  // so the chain recursion does not apply
  std::mt19937_64 rng(7);
  Dag dag = dag_markov(2);
  ProductSpace sp = testsup::binary_space(2);
  auto mu = dbl_measure(testsup::random_compatible(dag, sp, rng));
  auto nu = dbl_measure(testsup::random_compatible(dag, sp, rng));
  GroundCost<double> cost = random_joint(sp, rng);
  SolveReport<double> rep = solve_bicausal(dag, mu, nu, cost);
  CHECK(rep.method == "linear-lp");
  CHECK(rep.status == SolveStatus::GlobalOptimal);
  CHECK(rep.max_residual <= 1e-8);

  KernelBlocks<double> kb = kernel_blocks(dag, mu, nu);
  SolveReport<double> ex = solve_bicausal_exhaustive(kb, cost);
  CHECK(rep.value == doctest::Approx(ex.value).epsilon(1e-9));
}

TEST_CASE("three-vertex history-spanning graphs match the exhaustive oracle") {
  std::mt19937_64 rng(17);
  Dag dag = dag_linear(3);
  ProductSpace sp = testsup::binary_space(3);
  auto mu = dbl_measure(testsup::random_compatible(dag, sp, rng));
  auto nu = dbl_measure(testsup::random_compatible(dag, sp, rng));
  GroundCost<double> cost = abs_additive<double>(3);
  SolveReport<double> rep = solve_bicausal(dag, mu, nu, cost);
  CHECK(rep.method == "linear-lp");
  CHECK(rep.status == SolveStatus::GlobalOptimal);

  KernelBlocks<double> kb = kernel_blocks(dag, mu, nu);
  SolveReport<double> ex = solve_bicausal_exhaustive(kb, cost);
  CHECK(rep.value == doctest::Approx(ex.value).epsilon(1e-9));
  CHECK(check_membership(rep.coupling, dag, mu, nu, CouplingClass::Bicausal, 1e-8).ok);
}

TEST_CASE("causal linear program matches basis enumeration of its polytope") {
  ProductSpace sp = testsup::binary_space(2);
  Dag dag = dag_markov(2);
  auto measure3 = [&](std::vector<std::pair<AtomTuple, Rational>> entries) {
    return make_measure<Rational>(sp, std::move(entries));
  };
  struct Instance {
    DiscreteMeasure<Rational> mu, nu;
  };
  std::vector<Instance> instances;
  instances.push_back({measure3({{{0, 0}, Rational(1) / 2},
                                 {{0, 1}, Rational(1) / 4},
                                 {{1, 0}, Rational(1) / 4}}),
                       measure3({{{0, 1}, Rational(1) / 3},
                                 {{1, 0}, Rational(1) / 3},
                                 {{1, 1}, Rational(1) / 3}})});
  instances.push_back({measure3({{{0, 0}, Rational(2) / 5},
                                 {{1, 0}, Rational(2) / 5},
                                 {{1, 1}, Rational(1) / 5}}),
                       measure3({{{0, 0}, Rational(1) / 2},
                                 {{0, 1}, Rational(1) / 4},
                                 {{1, 1}, Rational(1) / 4}})});
  for (const Instance& inst : instances) {
    const DiscreteMeasure<Rational>&mu = inst.mu, &nu = inst.nu;
    GroundCost<Rational> cost = abs_additive<Rational>(2);
    SolveReport<Rational> rep = solve_causal(dag, mu, nu, cost);
    CHECK(rep.method == "causal-lp");
    CHECK(rep.status == SolveStatus::GlobalOptimal);
    CHECK(rep.has_lower_bound);
    CHECK(rep.lower_bound == rep.value);

    // raw system: both marginals, then one mechanism row per supported pair
    // (x1, x2) of mu and supported first coordinate q of nu:
    //   mu(x1) * pi[x = (x1,x2), y1 = q] = mu(x1,x2) * pi[x1 = x1, y1 = q]
    const int R = mu.size(), Cn = nu.size();
    std::vector<int> qvals;
    for (int j = 0; j < Cn; ++j)
      if (qvals.empty() || qvals.back() != nu.support[(std::size_t)j][0])
        qvals.push_back(nu.support[(std::size_t)j][0]);
    const int extra = R * (int)qvals.size();
    MatrixS<Rational> A = MatrixS<Rational>::Zero(R + Cn + extra, R * Cn);
    VectorS<Rational> b = VectorS<Rational>::Zero(R + Cn + extra);
    for (int a = 0; a < R; ++a) {
      for (int j = 0; j < Cn; ++j) A(a, a * Cn + j) = Rational(1);
      b(a) = mu.weight[(std::size_t)a];
    }
    for (int j = 0; j < Cn; ++j) {
      for (int a = 0; a < R; ++a) A(R + j, a * Cn + j) = Rational(1);
      b(R + j) = nu.weight[(std::size_t)j];
    }
    int row = R + Cn;
    for (int pair = 0; pair < R; ++pair) {
      const int x1 = mu.support[(std::size_t)pair][0];
      const int x2 = mu.support[(std::size_t)pair][1];
      Rational m1 = mu.mass(AtomTuple{x1, 0}) + mu.mass(AtomTuple{x1, 1});
      Rational m12 = mu.mass(AtomTuple{x1, x2});
      for (int q : qvals) {
        for (int a = 0; a < R; ++a) {
          if (mu.support[(std::size_t)a][0] != x1) continue;
          for (int j = 0; j < Cn; ++j) {
            if (nu.support[(std::size_t)j][0] != q) continue;
            if (mu.support[(std::size_t)a][1] == x2) A(row, a * Cn + j) += m1;
            A(row, a * Cn + j) -= m12;
          }
        }
        ++row;
      }
    }
    MatrixS<Rational> C = cost_matrix(cost, sp, mu.support, sp, nu.support);
    Rational best(-1);
    int found = 0;
    for (const VectorS<Rational>& x : basic_points(A, b)) {
      ++found;
      Rational v(0);
      for (int a = 0; a < R; ++a)
        for (int j = 0; j < Cn; ++j) v += C(a, j) * x(a * Cn + j);
      if (best < Rational(0) || v < best) best = v;
    }
    CHECK(found > 0);
    CHECK(rep.value == best);
  }
}

TEST_CASE("causal descent lands between unconstrained and bicausal optima") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    std::mt19937_64 rng(seed * 31);
    Dag dag = dag_markov(3);
    ProductSpace sp = testsup::binary_space(3);
    auto mu = dbl_measure(testsup::random_compatible(dag, sp, rng));
    auto nu = dbl_measure(testsup::random_compatible(dag, sp, rng));
    GroundCost<double> cost = seed % 2 == 0 ? abs_additive<double>(3) : sq_power<double>(3);
    SolverOptions opt;
    opt.restarts = 8;
    opt.seed = seed;

    SolveReport<double> flat = solve_standard_ot(mu, nu, cost, opt);
    SolveReport<double> bi = solve_bicausal(dag, mu, nu, cost, opt);
    SolveReport<double> ca = solve_causal(dag, mu, nu, cost, opt);
    CHECK(ca.method == "causal-bcd");
    CHECK(ca.status == SolveStatus::LocalUpperBound);
    CHECK(ca.has_lower_bound);
    CHECK(ca.lower_bound <= ca.value + 1e-9);
    CHECK(flat.value <= ca.value + 1e-8);
    CHECK(ca.value <= bi.value + 1e-8);
    CHECK(ca.max_residual <= 1e-8);
    CHECK(check_membership(ca.coupling, dag, mu, nu, CouplingClass::Causal, 1e-6).ok);
  }
}

TEST_CASE("identical inputs and seeds give identical reports at any worker count") {
  std::mt19937_64 rng(23);
  Dag dag = dag_markov(3);
  ProductSpace sp = testsup::binary_space(3);
  auto mu = dbl_measure(testsup::random_compatible(dag, sp, rng));
  auto nu = dbl_measure(testsup::random_compatible(dag, sp, rng));
  GroundCost<double> cost = random_joint(sp, rng);
  KernelBlocks<double> kb = kernel_blocks(dag, mu, nu);

  SolverOptions a, b;
  a.restarts = b.restarts = 6;
  a.seed = b.seed = 9;
  a.workers = 1;
  b.workers = 4;
  SolveReport<double> r1 = solve_bicausal_bcd(kb, cost, a);
  SolveReport<double> r2 = solve_bicausal_bcd(kb, cost, b);
  CHECK(r1.value == r2.value);
  for (Eigen::Index i = 0; i < r1.coupling.weight.rows(); ++i)
    for (Eigen::Index j = 0; j < r1.coupling.weight.cols(); ++j)
      CHECK(r1.coupling.weight(i, j) == r2.coupling.weight(i, j));

  SolveReport<double> e1 = solve_bicausal_exhaustive(kb, cost, a);
  SolveReport<double> e2 = solve_bicausal_exhaustive(kb, cost, b);
  CHECK(e1.value == e2.value);
  for (Eigen::Index i = 0; i < e1.coupling.weight.rows(); ++i)
    for (Eigen::Index j = 0; j < e1.coupling.weight.cols(); ++j)
      CHECK(e1.coupling.weight(i, j) == e2.coupling.weight(i, j));
  CHECK(r1.value >= e1.value - 1e-12);
}

TEST_CASE("the enumeration cap trips and the dispatcher falls back to descent") {
  std::mt19937_64 rng(29);
  Dag dag = dag_markov(3);
  ProductSpace sp = testsup::binary_space(3);
  auto mu = dbl_measure(testsup::random_compatible(dag, sp, rng));
  auto nu = dbl_measure(testsup::random_compatible(dag, sp, rng));
  GroundCost<double> cost = random_joint(sp, rng);
  KernelBlocks<double> kb = kernel_blocks(dag, mu, nu);
  SolverOptions opt;
  opt.max_enum = 4;
  opt.restarts = 4;
  try {
    solve_bicausal_exhaustive(kb, cost, opt);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EnumerationCap);
  }
  SolveReport<double> rep = solve_bicausal(dag, mu, nu, cost, opt);
  CHECK(rep.method == "bcd");
  CHECK(rep.status == SolveStatus::LocalUpperBound);

  SolverOptions wide;
  SolveReport<double> full = solve_bicausal(dag, mu, nu, cost, wide);
  CHECK(full.method == "exhaustive");
  CHECK(rep.value >= full.value - 1e-9);
}

TEST_CASE("reports echo the seed and carry membership residuals") {
  std::mt19937_64 rng(31);
  Dag dag = dag_markov(2);
  ProductSpace sp = testsup::binary_space(2);
  auto mu = dbl_measure(testsup::random_compatible(dag, sp, rng));
  auto nu = dbl_measure(testsup::random_compatible(dag, sp, rng));
  SolverOptions opt;
  opt.seed = 42;
  SolveReport<double> rep = solve_bicausal(dag, mu, nu, abs_additive<double>(2), opt);
  CHECK(rep.seed == 42);
  CHECK(rep.max_residual <= 1e-8);
  CHECK_NOTHROW(validate_coupling(rep.coupling));

  try {
    solve_bicausal_chain(kernel_blocks(dag, mu, nu), random_joint(sp, rng), opt);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadArgument);
  }
}
