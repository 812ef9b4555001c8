#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <tuple>
#include <vector>

#include "causalot/constraints.hpp"
#include "causalot/dag.hpp"
#include "causalot/measure.hpp"
#include "test_support.hpp"

using namespace causalot;
using testsup::binary_space;
using testsup::map_coupling;
using testsup::random_compatible;
using testsup::random_row;
using testsup::rect_perturb;
using testsup::uniform_measure;

namespace {

Dag diamond4() { return validate_dag(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}}); }

// ------------------------------------------------------------------
// An independent oracle: conditional independence checked directly on the
// joint distribution of (X, Y) as a 2n-coordinate table, with X_j at
// coordinate j and Y_j at coordinate n + j.

using Joint = std::map<AtomTuple, Rational>;

Joint joint_of(const Coupling<Rational>& c) {
  Joint j;
  for (int a = 0; a < c.rows(); ++a)
    for (int b = 0; b < c.cols(); ++b) {
      if (c.weight(a, b) == 0) continue;
      AtomTuple t = c.mu.support[(std::size_t)a];
      t.insert(t.end(), c.nu.support[(std::size_t)b].begin(), c.nu.support[(std::size_t)b].end());
      j[t] += c.weight(a, b);
    }
  return j;
}

// A independent of B given C, checked exactly over all supported values.
bool ci_holds(const Joint& j, const std::vector<int>& A, const std::vector<int>& B,
              const std::vector<int>& C) {
  std::map<AtomTuple, Rational> wc;
  std::map<AtomTuple, std::map<AtomTuple, Rational>> wa, wb;
  std::map<AtomTuple, std::map<std::pair<AtomTuple, AtomTuple>, Rational>> wab;
  for (const auto& [t, w] : j) {
    AtomTuple a = sub_tuple(t, A), b = sub_tuple(t, B), c = sub_tuple(t, C);
    wc[c] += w;
    wa[c][a] += w;
    wb[c][b] += w;
    wab[c][{a, b}] += w;
  }
  for (const auto& [c, total] : wc)
    for (const auto& [a, ma] : wa[c])
      for (const auto& [b, mb] : wb[c]) {
        Rational joint_ab(0);
        auto it = wab[c].find({a, b});
        if (it != wab[c].end()) joint_ab = it->second;
        if (joint_ab * total != ma * mb) return false;
      }
  return true;
}

bool causal_oracle(const Coupling<Rational>& pi, const Dag& dag) {
  const int n = dag.n;
  Joint j = joint_of(pi);
  for (int k = 0; k < n; ++k) {
    int i = dag.order[(std::size_t)k];
    std::vector<int> rest;
    for (int v : dag.history(i)) {
      rest.push_back(v);
      rest.push_back(n + v);
    }
    const std::vector<int>& pa = dag.parents[(std::size_t)i];
    if (!ci_holds(j, {i}, rest, pa)) return false;
    std::vector<int> condy = pa;
    condy.push_back(i);
    for (int v : pa) condy.push_back(n + v);
    if (!ci_holds(j, {n + i}, rest, condy)) return false;
  }
  return true;
}

bool bicausal_oracle(const Coupling<Rational>& pi, const Dag& dag) {
  const int n = dag.n;
  Joint j = joint_of(pi);
  for (int k = 1; k < n; ++k) {
    int i = dag.order[(std::size_t)k];
    std::vector<int> rest;
    for (int v : dag.history(i)) {
      rest.push_back(v);
      rest.push_back(n + v);
    }
    const std::vector<int>& pa = dag.parents[(std::size_t)i];
    std::vector<int> pay, both = pa;
    for (int v : pa) {
      pay.push_back(n + v);
      both.push_back(n + v);
    }
    if (!ci_holds(j, {i, n + i}, rest, both)) return false;
    if (!ci_holds(j, {i}, pay, pa)) return false;
    if (!ci_holds(j, {n + i}, pa, pay)) return false;
  }
  return true;
}

// ------------------------------------------------------------------
// Forward constructions that are members by the kernel characterizations.

// Per vertex and per (x_pa, y_pa) pair, a random coupling of the two
// mechanism rows (product kernel plus rectangle rotations), multiplied along
// the graph.
Coupling<Rational> random_bicausal(const Dag& dag, const DiscreteMeasure<Rational>& mu,
                                   const DiscreteMeasure<Rational>& nu, std::mt19937_64& rng) {
  std::vector<ConditionalTable<Rational>> mx, my;
  for (int i = 0; i < dag.n; ++i) {
    mx.push_back(mechanism(mu, dag, i));
    my.push_back(mechanism(nu, dag, i));
  }
  std::map<std::tuple<int, AtomTuple, AtomTuple>, MatrixS<Rational>> kernels;
  auto kernel = [&](int i, const AtomTuple& xp, const AtomTuple& yp) -> const MatrixS<Rational>& {
    auto key = std::make_tuple(i, xp, yp);
    auto it = kernels.find(key);
    if (it == kernels.end()) {
      const auto& rx = mx[(std::size_t)i].row(xp);
      const auto& ry = my[(std::size_t)i].row(yp);
      MatrixS<Rational> k((int)rx.size(), (int)ry.size());
      for (int a = 0; a < (int)rx.size(); ++a)
        for (int b = 0; b < (int)ry.size(); ++b) k(a, b) = rx[(std::size_t)a] * ry[(std::size_t)b];
      rect_perturb(k, rng, 8);
      it = kernels.emplace(key, std::move(k)).first;
    }
    return it->second;
  };
  MatrixS<Rational> w(mu.size(), nu.size());
  for (int a = 0; a < mu.size(); ++a)
    for (int b = 0; b < nu.size(); ++b) {
      Rational m(1);
      for (int i = 0; i < dag.n; ++i) {
        const auto& pa = dag.parents[(std::size_t)i];
        const auto& k = kernel(i, sub_tuple(mu.support[(std::size_t)a], pa),
                               sub_tuple(nu.support[(std::size_t)b], pa));
        m *= k(mu.support[(std::size_t)a][(std::size_t)i], nu.support[(std::size_t)b][(std::size_t)i]);
      }
      w(a, b) = m;
    }
  return Coupling<Rational>{mu, nu, std::move(w)};
}

// X follows the mechanisms of mu, Y_i responds with a random row depending on
// (x_i, x_pa, y_pa); the second marginal is whatever comes out.
Coupling<Rational> random_causal(const Dag& dag, const DiscreteMeasure<Rational>& mu,
                                 std::mt19937_64& rng) {
  std::vector<ConditionalTable<Rational>> mx;
  for (int i = 0; i < dag.n; ++i) mx.push_back(mechanism(mu, dag, i));
  std::map<std::tuple<int, int, AtomTuple, AtomTuple>, std::vector<Rational>> resp;
  auto response = [&](int i, int xi, const AtomTuple& xp, const AtomTuple& yp)
      -> const std::vector<Rational>& {
    auto key = std::make_tuple(i, xi, xp, yp);
    auto it = resp.find(key);
    if (it == resp.end())
      it = resp.emplace(key, random_row(mu.space[(std::size_t)i].size(), rng)).first;
    return it->second;
  };
  std::vector<AtomTuple> grid = enumerate_tuples(mu.space);
  MatrixS<Rational> w(mu.size(), (int)grid.size());
  std::vector<Rational> col_mass(grid.size(), Rational(0));
  for (int a = 0; a < mu.size(); ++a) {
    const AtomTuple& x = mu.support[(std::size_t)a];
    for (int b = 0; b < (int)grid.size(); ++b) {
      const AtomTuple& y = grid[(std::size_t)b];
      Rational m(1);
      for (int i = 0; i < dag.n; ++i) {
        const auto& pa = dag.parents[(std::size_t)i];
        AtomTuple xp = sub_tuple(x, pa), yp = sub_tuple(y, pa);
        m *= mx[(std::size_t)i].row(xp)[(std::size_t)x[(std::size_t)i]];
        m *= response(i, x[(std::size_t)i], xp, yp)[(std::size_t)y[(std::size_t)i]];
      }
      w(a, b) = m;
      col_mass[(std::size_t)b] += m;
    }
  }
  std::vector<std::pair<AtomTuple, Rational>> entries;
  for (std::size_t b = 0; b < grid.size(); ++b) entries.emplace_back(grid[b], col_mass[b]);
  DiscreteMeasure<Rational> nu = make_measure<Rational>(mu.space, std::move(entries));
  return Coupling<Rational>{mu, std::move(nu), std::move(w)};
}

}  // namespace

TEST_CASE("coupling validation and the product coupling") {
  std::mt19937_64 rng(7);
  Dag g = dag_markov(3);
  ProductSpace sp = binary_space(3);
  auto mu = random_compatible(g, sp, rng);
  auto nu = random_compatible(g, sp, rng);

  Coupling<Rational> prod = product_coupling(mu, nu);
  CHECK_NOTHROW(validate_coupling(prod));
  MembershipReport any = check_membership(prod, g, CouplingClass::Any);
  CHECK(any.ok);
  CHECK(any.max_residual == 0.0);

  Coupling<Rational> bad = prod;
  bad.weight(0, 0) += Rational(1, 100);
  CHECK_THROWS_AS(validate_coupling(bad), Error);

  Coupling<Rational> neg = prod;
  neg.weight(0, 0) = Rational(-1, 100);
  try {
    validate_coupling(neg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NegativeWeight);
  }

  Coupling<Rational> shape = prod;
  shape.weight = MatrixS<Rational>::Constant(2, 2, Rational(1, 4));
  try {
    validate_coupling(shape);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("marginal families: layout and violation detection") {
  std::mt19937_64 rng(11);
  Dag g = dag_markov(3);
  ProductSpace sp = binary_space(3);
  auto mu = random_compatible(g, sp, rng);
  auto nu = random_compatible(g, sp, rng);
  auto prog = compile_marginals(mu, nu);
  REQUIRE(prog.linear.size() == 2);
  CHECK(prog.linear[0].label == "marginal-x");
  CHECK(prog.linear[1].label == "marginal-y");
  CHECK(prog.linear[0].equations.size() == 8);
  CHECK(prog.linear[1].equations.size() == 8);
  for (const auto& eq : prog.linear[0].equations) CHECK(eq.lhs.terms.size() == 8);

  // moving mass inside one row keeps row sums but breaks two column sums
  Coupling<Rational> pi = product_coupling(mu, nu);
  Rational eps(1, 32);
  pi.weight(0, 0) += eps;
  pi.weight(0, 1) -= eps;
  MembershipReport rep = check_membership(pi, g, CouplingClass::Any);
  CHECK(!rep.ok);
  CHECK(rep.family == "marginal-y");
  CHECK(rep.vertex == -1);
  CHECK(rep.max_residual == doctest::Approx(1.0 / 32.0));
}

TEST_CASE("program shapes on a structured fixture") {
  // mu: first coordinate free, second constant zero, third free
  // nu: second coordinate copies the first, third free
  ProductSpace sp = binary_space(3);
  Dag g = dag_markov(3);
  Rational q(1, 4);
  auto mu = make_measure<Rational>(
      sp, {{{0, 0, 0}, q}, {{0, 0, 1}, q}, {{1, 0, 0}, q}, {{1, 0, 1}, q}});
  auto nu = make_measure<Rational>(
      sp, {{{0, 0, 0}, q}, {{0, 0, 1}, q}, {{1, 1, 0}, q}, {{1, 1, 1}, q}});
  REQUIRE(is_g_compatible(mu, g).ok);
  REQUIRE(is_g_compatible(nu, g).ok);

  auto causal = compile_causal(g, mu, nu);
  REQUIRE(causal.linear.size() == 2);
  CHECK(causal.linear[0].label == "causal-mechanism");
  CHECK(causal.linear[0].vertex == 1);
  CHECK(causal.linear[0].equations.size() == 4);
  CHECK(causal.linear[1].vertex == 2);
  CHECK(causal.linear[1].equations.size() == 8);
  REQUIRE(causal.bilinear.size() == 2);
  CHECK(causal.bilinear[0].trivially_satisfied);
  CHECK(causal.bilinear[0].vacuous());
  CHECK(!causal.bilinear[1].trivially_satisfied);
  CHECK(causal.bilinear[1].equations.size() == 16);
  CHECK(causal.linear_count() == 12);
  CHECK(causal.bilinear_count() == 16);

  auto bicausal = compile_bicausal(g, mu, nu);
  REQUIRE(bicausal.linear.size() == 4);
  for (const auto& f : bicausal.linear) CHECK(f.equations.size() == 4);
  REQUIRE(bicausal.bilinear.size() == 2);
  CHECK(bicausal.bilinear[0].vacuous());
  CHECK(bicausal.bilinear[1].equations.size() == 16);

  // the complete graph compiles to the empty program
  Dag full = dag_complete(3);
  CHECK(compile_causal(full, mu, nu).linear.empty());
  CHECK(compile_causal(full, mu, nu).bilinear.empty());
  CHECK(compile_bicausal(full, mu, nu).bilinear.empty());

  // the linear graph needs no bilinear equations at all
  Dag lin = dag_linear(3);
  auto lc = compile_causal(lin, mu, nu);
  CHECK(lc.bilinear_count() == 0);
  for (const auto& f : lc.bilinear) CHECK(f.trivially_satisfied);
  auto lb = compile_bicausal(lin, mu, nu);
  CHECK(lb.bilinear_count() == 0);
  CHECK(lb.linear_count() > 0);
}

TEST_CASE("compile preconditions") {
  ProductSpace sp = binary_space(2);
  Dag empty = dag_empty(2);
  Rational h(1, 2);
  auto corr = make_measure<Rational>(sp, {{{0, 0}, h}, {{1, 1}, h}});
  auto unif = uniform_measure(sp);
  try {
    compile_causal(empty, corr, unif);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MuNotCompatible);
  }
  try {
    compile_bicausal(empty, unif, corr);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MarginalNotCompatible);
  }
  auto mu3 = uniform_measure(binary_space(3));
  CHECK_THROWS_AS(compile_causal(dag_markov(3), mu3, unif), Error);
}

TEST_CASE("deterministic transports that break causality are caught") {
  // two coordinates, empty graph, y = (x1, x2 xor x1)
  {
    auto mu = uniform_measure(binary_space(2));
    std::vector<AtomTuple> img;
    for (const auto& t : mu.support) img.push_back({t[0], t[1] ^ t[0]});
    Coupling<Rational> pi = map_coupling(mu, img);
    Dag g = dag_empty(2);
    CHECK(check_membership(pi, g, CouplingClass::Any).ok);
    MembershipReport c = check_membership(pi, g, CouplingClass::Causal);
    CHECK(!c.ok);
    CHECK(c.family == "causal-ci");
    CHECK(c.vertex == 1);
    MembershipReport b = check_membership(pi, g, CouplingClass::Bicausal);
    CHECK(!b.ok);
    CHECK(b.family == "bicausal-joint");
    CHECK(b.vertex == 1);
  }
  // three coordinates, markov graph, y = (x1, x2, x3 xor x1): the third
  // kernel peeks at a non-parent
  {
    auto mu = uniform_measure(binary_space(3));
    std::vector<AtomTuple> img;
    for (const auto& t : mu.support) img.push_back({t[0], t[1], t[2] ^ t[0]});
    Coupling<Rational> pi = map_coupling(mu, img);
    Dag g = dag_markov(3);
    CHECK(check_membership(pi, g, CouplingClass::Any).ok);
    MembershipReport c = check_membership(pi, g, CouplingClass::Causal);
    CHECK(!c.ok);
    CHECK(c.family == "causal-ci");
    CHECK(c.vertex == 2);
    CHECK(c.max_residual > 1e-3);
    CHECK(!check_membership(pi, g, CouplingClass::Bicausal).ok);
    // the same transport is fine when the graph allows full history
    CHECK(check_membership(pi, dag_linear(3), CouplingClass::Causal).ok);
  }
  // two coordinates, chain graph, y = (x2, x1): the first kernel leaks the
  // future, caught by a purely linear family
  {
    auto mu = uniform_measure(binary_space(2));
    std::vector<AtomTuple> img;
    for (const auto& t : mu.support) img.push_back({t[1], t[0]});
    Coupling<Rational> pi = map_coupling(mu, img);
    Dag g = dag_markov(2);
    MembershipReport c = check_membership(pi, g, CouplingClass::Causal);
    CHECK(!c.ok);
    CHECK(c.family == "causal-mechanism");
    CHECK(c.vertex == 1);
    MembershipReport b = check_membership(pi, g, CouplingClass::Bicausal);
    CHECK(!b.ok);
    CHECK(b.family == "bicausal-x");
  }
}

TEST_CASE("kernel-built couplings are exact members") {
  std::mt19937_64 rng(23);
  for (const Dag& g : {dag_markov(3), dag_empty(3), diamond4()}) {
    ProductSpace sp = binary_space(g.n);
    for (int trial = 0; trial < 5; ++trial) {
      auto mu = random_compatible(g, sp, rng);
      auto nu = random_compatible(g, sp, rng);
      Coupling<Rational> pi = random_bicausal(g, mu, nu, rng);
      CHECK_NOTHROW(validate_coupling(pi));
      MembershipReport b = check_membership(pi, g, CouplingClass::Bicausal);
      CHECK(b.ok);
      CHECK(b.max_residual == 0.0);
      CHECK(check_membership(pi, g, CouplingClass::Causal).ok);
      CHECK(check_membership(pi, g, CouplingClass::Any).ok);

      Coupling<Rational> pc = random_causal(g, mu, rng);
      MembershipReport c = check_membership(pc, g, CouplingClass::Causal);
      CHECK(c.ok);
      CHECK(c.max_residual == 0.0);
      CHECK(check_membership(pc, g, CouplingClass::Any).ok);
    }
  }
}

TEST_CASE("membership agrees with the conditional-independence oracle") {
  std::mt19937_64 rng(31);
  int causal_members = 0, bicausal_members = 0, rejections = 0;
  for (const Dag& g : {dag_markov(3), dag_empty(3), diamond4(), dag_linear(3)}) {
    ProductSpace sp = binary_space(g.n);
    for (int trial = 0; trial < 6; ++trial) {
      auto mu = random_compatible(g, sp, rng);
      auto nu = random_compatible(g, sp, rng);
      std::vector<Coupling<Rational>> cases;
      cases.push_back(random_bicausal(g, mu, nu, rng));
      cases.push_back(random_causal(g, mu, rng));
      Coupling<Rational> rp = product_coupling(mu, nu);
      rect_perturb(rp.weight, rng, 6);
      cases.push_back(rp);
      // a member nudged by a single small rotation
      Coupling<Rational> nudged = random_bicausal(g, mu, nu, rng);
      rect_perturb(nudged.weight, rng, 1);
      cases.push_back(nudged);
      for (const auto& pi : cases) {
        bool c_mine = check_membership(pi, g, CouplingClass::Causal).ok;
        bool c_oracle = causal_oracle(pi, g);
        CHECK(c_mine == c_oracle);
        // the bicausal program needs a compatible second marginal
        if (is_g_compatible(pi.nu, g).ok) {
          bool b_mine = check_membership(pi, g, CouplingClass::Bicausal).ok;
          bool b_oracle = bicausal_oracle(pi, g);
          CHECK(b_mine == b_oracle);
          if (b_mine) ++bicausal_members;
          CHECK((!b_mine || c_mine));  // nesting
        }
        if (c_mine) ++causal_members;
        else ++rejections;
      }
    }
  }
  // the sample saw both verdicts
  CHECK(causal_members > 0);
  CHECK(bicausal_members > 0);
  CHECK(rejections > 0);
}

TEST_CASE("membership shape errors") {
  std::mt19937_64 rng(41);
  Dag g = dag_markov(3);
  ProductSpace sp = binary_space(3);
  auto mu = random_compatible(g, sp, rng);
  auto nu = random_compatible(g, sp, rng);
  Coupling<Rational> pi = product_coupling(mu, nu);
  pi.weight = MatrixS<Rational>::Constant(3, 3, Rational(1, 9));
  try {
    check_membership(pi, g, CouplingClass::Causal);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
  Coupling<Rational> ok = product_coupling(mu, nu);
  CHECK_THROWS_AS(check_membership(ok, dag_markov(2), CouplingClass::Any), Error);
}
