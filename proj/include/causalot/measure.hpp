// measure.hpp -- finitely supported probability measures on product spaces,
// marginals, causal mechanisms, and the graph-compatibility check.
//
// Weights are templated on the scalar: double for solving throughput,
// Rational for the exact algebraic identities. All types are immutable
// after construction.
#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "causalot/dag.hpp"
#include "causalot/rational.hpp"
#include "causalot/space.hpp"

namespace causalot {

template <class S>
struct DiscreteMeasure {
  ProductSpace space;
  std::vector<AtomTuple> support;  // distinct, lexicographically sorted
  std::vector<S> weight;           // positive, aligned with support, sums to 1

  int n() const { return (int)space.size(); }
  int size() const { return (int)support.size(); }

  // Mass of one tuple (0 when off-support).
  S mass(const AtomTuple& t) const {
    auto it = std::lower_bound(support.begin(), support.end(), t);
    if (it == support.end() || *it != t) return S(0);
    return weight[it - support.begin()];
  }
};

// Validates and normalizes (sorts support, drops exact zeros). The weight-sum
// check is exact for Rational and within tol for double.
template <class S>
DiscreteMeasure<S> make_measure(ProductSpace space, std::vector<std::pair<AtomTuple, S>> entries,
                                double tol = 1e-12) {
  validate_product(space);
  DiscreteMeasure<S> m;
  m.space = std::move(space);
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  S total(0);
  for (auto& [t, w] : entries) {
    if (t.size() != m.space.size())
      fail(ErrorCode::CoordinateMismatch, "support tuple has " + std::to_string(t.size()) +
                                              " coordinates, space has " +
                                              std::to_string(m.space.size()));
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] < 0 || t[i] >= m.space[i].size())
        fail(ErrorCode::VertexOutOfRange,
             "atom index " + std::to_string(t[i]) + " outside coordinate '" + m.space[i].name + "'");
    if (w < S(0)) fail(ErrorCode::NegativeWeight, "negative weight at " + tuple_label(m.space, t));
    if (ScalarOps<S>::is_zero(w, 0.0)) continue;
    if (!m.support.empty() && m.support.back() == t)
      fail(ErrorCode::DuplicateSupportPoint, "tuple " + tuple_label(m.space, t) + " repeated");
    m.support.push_back(t);
    m.weight.push_back(w);
    total += w;
  }
  if (m.support.empty()) fail(ErrorCode::EmptySpace, "measure has empty support");
  if (!ScalarOps<S>::equal(total, S(1), tol))
    fail(ErrorCode::WeightSumOff, "weights sum to " + ScalarOps<S>::repr(total) + ", expected 1");
  return m;
}

template <class S>
bool measures_equal(const DiscreteMeasure<S>& a, const DiscreteMeasure<S>& b, double tol = 0.0) {
  if (a.support != b.support) return false;
  for (std::size_t k = 0; k < a.weight.size(); ++k)
    if (!ScalarOps<S>::equal(a.weight[k], b.weight[k], tol)) return false;
  return true;
}

// Pushforward under coordinate projection; collapsing atoms add their mass.
template <class S>
DiscreteMeasure<S> marginal(const DiscreteMeasure<S>& m, const std::vector<int>& coords) {
  if (coords.empty()) fail(ErrorCode::BadArgument, "marginal needs a nonempty coordinate subset");
  ProductSpace sub;
  for (int c : coords) {
    if (c < 0 || c >= m.n())
      fail(ErrorCode::VertexOutOfRange, "coordinate " + std::to_string(c + 1) + " outside 1.." +
                                            std::to_string(m.n()));
    sub.push_back(m.space[(std::size_t)c]);
  }
  std::map<AtomTuple, S> acc;
  for (int k = 0; k < m.size(); ++k) acc[sub_tuple(m.support[(std::size_t)k], coords)] += m.weight[(std::size_t)k];
  DiscreteMeasure<S> out;
  out.space = std::move(sub);
  for (auto& [t, w] : acc) {
    out.support.push_back(t);
    out.weight.push_back(w);
  }
  return out;
}

// Conditional distribution of one coordinate given a conditioning subset,
// with a row for every conditioning tuple of positive mass. For an empty
// conditioning set there is a single row keyed by the empty tuple.
template <class S>
struct ConditionalTable {
  int target = 0;                       // coordinate whose distribution the rows hold
  std::vector<int> conditioning;        // ordered coordinate subset
  int atom_count = 0;                   // atoms of the target coordinate
  std::map<AtomTuple, std::vector<S>> rows;

  const std::vector<S>& row(const AtomTuple& cond) const {
    auto it = rows.find(cond);
    if (it == rows.end())
      fail(ErrorCode::ZeroMassConditioning, "no conditional row for the requested tuple");
    return it->second;
  }
};

template <class S>
ConditionalTable<S> conditional_table(const DiscreteMeasure<S>& m, int target,
                                      const std::vector<int>& conditioning) {
  ConditionalTable<S> ct;
  ct.target = target;
  ct.conditioning = conditioning;
  ct.atom_count = m.space[(std::size_t)target].size();
  std::map<AtomTuple, S> cond_mass;
  std::map<AtomTuple, std::vector<S>> joint;
  for (int k = 0; k < m.size(); ++k) {
    AtomTuple c = sub_tuple(m.support[(std::size_t)k], conditioning);
    cond_mass[c] += m.weight[(std::size_t)k];
    auto& vec = joint[c];
    if (vec.empty()) vec.assign((std::size_t)ct.atom_count, S(0));
    vec[(std::size_t)m.support[(std::size_t)k][(std::size_t)target]] += m.weight[(std::size_t)k];
  }
  for (auto& [c, vec] : joint) {
    for (auto& w : vec) w /= cond_mass[c];
    ct.rows.emplace(c, std::move(vec));
  }
  return ct;
}

// The causal mechanism mu(dx_i | x_pa_i) of one vertex.
template <class S>
ConditionalTable<S> mechanism(const DiscreteMeasure<S>& m, const Dag& dag, int vertex) {
  return conditional_table(m, vertex, dag.parents[(std::size_t)vertex]);
}

struct CompatReport {
  bool ok = true;
  int vertex = -1;              // 0-based vertex of the first violated equation
  std::string conditioning;     // rendered conditioning tuple
  double residual = 0.0;

  explicit operator bool() const { return ok; }
};

// Checks the factorization of m along the graph: for every vertex i, the
// conditional independence of x_i from the earlier coordinates given the
// parents, in the cross-multiplied form
//   m(hist, a) * m_pa(pa) = m(a, pa) * m_hist(hist)
// evaluated over histories of positive mass and all atoms a. Exact equality
// for Rational, residual <= tol for double.
template <class S>
CompatReport is_g_compatible(const DiscreteMeasure<S>& m, const Dag& dag, double tol = 1e-12) {
  if (m.n() != dag.n)
    fail(ErrorCode::CoordinateMismatch, "measure has " + std::to_string(m.n()) +
                                            " coordinates, graph has " + std::to_string(dag.n));
  CompatReport rep;
  if (dag.complete) return rep;  // every measure factorizes along the full graph
  for (int k = 1; k < dag.n; ++k) {
    int i = dag.order[(std::size_t)k];
    std::vector<int> hist = dag.history(i);
    const std::vector<int>& pa = dag.parents[(std::size_t)i];
    if ((int)pa.size() == k) continue;  // parents cover the whole history
    std::vector<int> pa_in_hist;        // positions of parents inside hist
    for (std::size_t c = 0; c < hist.size(); ++c)
      if (std::find(pa.begin(), pa.end(), hist[c]) != pa.end()) pa_in_hist.push_back((int)c);
    std::map<AtomTuple, S> mh, mp;
    std::map<AtomTuple, std::vector<S>> mha, mpa;
    int na = m.space[(std::size_t)i].size();
    for (int s = 0; s < m.size(); ++s) {
      const AtomTuple& t = m.support[(std::size_t)s];
      const S& w = m.weight[(std::size_t)s];
      AtomTuple h = sub_tuple(t, hist);
      AtomTuple p = sub_tuple(h, pa_in_hist);
      int a = t[(std::size_t)i];
      mh[h] += w;
      mp[p] += w;
      auto& vh = mha[h];
      if (vh.empty()) vh.assign((std::size_t)na, S(0));
      vh[(std::size_t)a] += w;
      auto& vp = mpa[p];
      if (vp.empty()) vp.assign((std::size_t)na, S(0));
      vp[(std::size_t)a] += w;
    }
    for (auto& [h, wh] : mh) {
      AtomTuple p = sub_tuple(h, pa_in_hist);
      const S& wp = mp[p];
      for (int a = 0; a < na; ++a) {
        S lhs = mha[h][(std::size_t)a] * wp;
        S rhs = mpa[p][(std::size_t)a] * wh;
        double res = ScalarOps<S>::to_dbl(lhs > rhs ? lhs - rhs : rhs - lhs);
        if (!ScalarOps<S>::equal(lhs, rhs, tol)) {
          rep.ok = false;
          rep.vertex = i;
          ProductSpace pa_space;
          for (int c : pa) pa_space.push_back(m.space[(std::size_t)c]);
          rep.conditioning = pa.empty() ? "()" : tuple_label(pa_space, sub_tuple(h, pa_in_hist));
          rep.residual = res;
          return rep;
        }
      }
    }
  }
  return rep;
}

// The n-fold product of per-coordinate measures; compatible with every graph.
template <class S>
DiscreteMeasure<S> product_measure(const std::vector<DiscreteMeasure<S>>& factors) {
  ProductSpace sp;
  for (auto& f : factors) {
    if (f.n() != 1) fail(ErrorCode::CoordinateMismatch, "product factors must be 1-coordinate");
    sp.push_back(f.space[0]);
  }
  std::vector<std::pair<AtomTuple, S>> entries{{AtomTuple{}, S(1)}};
  for (auto& f : factors) {
    std::vector<std::pair<AtomTuple, S>> next;
    for (auto& [t, w] : entries)
      for (int k = 0; k < f.size(); ++k) {
        AtomTuple u = t;
        u.push_back(f.support[(std::size_t)k][0]);
        next.emplace_back(std::move(u), w * f.weight[(std::size_t)k]);
      }
    entries = std::move(next);
  }
  return make_measure<S>(std::move(sp), std::move(entries));
}

// Bit-exact lift of a double-weighted measure into rational arithmetic.
inline DiscreteMeasure<Rational> lift_exact(const DiscreteMeasure<double>& m) {
  DiscreteMeasure<Rational> out;
  out.space = m.space;
  out.support = m.support;
  Rational total(0);
  for (double w : m.weight) {
    out.weight.push_back(ScalarOps<Rational>::from_double(w));
    total += out.weight.back();
  }
  // Renormalize so the exact weights sum to exactly 1.
  for (auto& w : out.weight) w /= total;
  return out;
}

}  // namespace causalot
