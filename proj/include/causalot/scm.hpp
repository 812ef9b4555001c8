// scm.hpp -- structural causal models: per-vertex function tables driven by
// independent exogenous noise, exact pushforward to a discrete measure, and
// Lipschitz-constant estimation of the mechanisms.
#pragma once

#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "causalot/dag.hpp"
#include "causalot/measure.hpp"
#include "causalot/metric.hpp"
#include "causalot/space.hpp"

namespace causalot {

template <class S>
struct NoiseDist {
  std::vector<double> atoms;  // real noise values
  std::vector<S> weight;      // positive, sums to 1

  int size() const { return (int)atoms.size(); }
};

template <class S>
void validate_noise(const NoiseDist<S>& nd, double tol = 1e-12) {
  if (nd.atoms.empty()) fail(ErrorCode::EmptySpace, "noise distribution has no atoms");
  if (nd.atoms.size() != nd.weight.size())
    fail(ErrorCode::CoordinateMismatch, "noise atoms and weights differ in length");
  S total(0);
  for (auto& w : nd.weight) {
    if (w < S(0)) fail(ErrorCode::NegativeWeight, "negative noise weight");
    total += w;
  }
  if (!ScalarOps<S>::equal(total, S(1), tol))
    fail(ErrorCode::WeightSumOff, "noise weights sum to " + ScalarOps<S>::repr(total));
}

// Function table of one mechanism: (parent atom tuple, noise index) -> atom.
struct MechanismTable {
  std::map<std::pair<AtomTuple, int>, int> rows;

  int apply(const AtomTuple& parents, int noise) const {
    auto it = rows.find({parents, noise});
    if (it == rows.end())
      fail(ErrorCode::MissingRow, "mechanism has no row for the requested input");
    return it->second;
  }
};

// Materializes fn over every parent-tuple combination and noise atom, so the
// table is total by construction.
template <class Fn>
MechanismTable tabulate_mechanism(const ProductSpace& parent_spaces, int noise_count, Fn fn) {
  MechanismTable t;
  std::vector<AtomTuple> tuples =
      parent_spaces.empty() ? std::vector<AtomTuple>{AtomTuple{}} : enumerate_tuples(parent_spaces);
  for (auto& pt : tuples)
    for (int u = 0; u < noise_count; ++u) t.rows[{pt, u}] = fn(pt, u);
  return t;
}

template <class S>
struct Scm {
  Dag dag;
  ProductSpace space;
  std::vector<NoiseDist<S>> noise;   // per vertex
  std::vector<MechanismTable> mech;  // per vertex
  std::vector<double> lipschitz;     // declared constants, >= 0

  ProductSpace parent_space(int v) const {
    ProductSpace ps;
    for (int p : dag.parents[(std::size_t)v]) ps.push_back(space[(std::size_t)p]);
    return ps;
  }
};

template <class S>
void validate_scm(const Scm<S>& s) {
  validate_product(s.space);
  if ((int)s.space.size() != s.dag.n || (int)s.noise.size() != s.dag.n ||
      (int)s.mech.size() != s.dag.n)
    fail(ErrorCode::CoordinateMismatch, "graph, space, noises and mechanisms disagree on length");
  if (s.dag.complete) fail(ErrorCode::CycleDetected, "a structural model needs an acyclic graph");
  for (auto& nd : s.noise) validate_noise(nd);
  for (double L : s.lipschitz)
    if (L < 0) fail(ErrorCode::BadArgument, "negative declared Lipschitz constant");
}

template <class S>
struct PushforwardResult {
  DiscreteMeasure<S> measure;
  // Inputs actually used per vertex: (parent tuple, noise index).
  std::vector<std::set<std::pair<AtomTuple, int>>> reachable;
};

// Exact distribution of (X_1,...,X_n): walks vertices in topological order,
// branching on noise atoms and merging equal prefixes as it goes. The cap
// bounds the nominal noise-combination count.
template <class S>
PushforwardResult<S> scm_pushforward(const Scm<S>& s, double combination_cap = 1e7) {
  validate_scm(s);
  double combos = 1;
  for (auto& nd : s.noise) {
    combos *= nd.size();
    if (combos > combination_cap)
      fail(ErrorCode::SupportExplosion, "noise combinations exceed the cap of " +
                                            std::to_string((long long)combination_cap));
  }
  PushforwardResult<S> out;
  out.reachable.resize((std::size_t)s.dag.n);
  std::map<AtomTuple, S> acc{{AtomTuple((std::size_t)s.dag.n, -1), S(1)}};
  for (int v : s.dag.order) {
    std::map<AtomTuple, S> next;
    for (auto& [t, w] : acc) {
      AtomTuple pt = sub_tuple(t, s.dag.parents[(std::size_t)v]);
      for (int u = 0; u < s.noise[(std::size_t)v].size(); ++u) {
        int a = s.mech[(std::size_t)v].apply(pt, u);
        if (a < 0 || a >= s.space[(std::size_t)v].size())
          fail(ErrorCode::VertexOutOfRange, "mechanism output outside coordinate '" +
                                                s.space[(std::size_t)v].name + "'");
        out.reachable[(std::size_t)v].insert({pt, u});
        AtomTuple t2 = t;
        t2[(std::size_t)v] = a;
        next[t2] += w * s.noise[(std::size_t)v].weight[(std::size_t)u];
      }
    }
    acc = std::move(next);
  }
  std::vector<std::pair<AtomTuple, S>> entries(acc.begin(), acc.end());
  out.measure = make_measure<S>(s.space, std::move(entries));
  return out;
}

// Largest output-distance / input-distance ratio over distinct table inputs,
// with the additive input metric (parent coordinate metrics plus absolute
// difference on the noise reals). Constant mechanisms give 0.
template <class S>
double lipschitz_estimate(const Scm<S>& s, int vertex,
                          const std::vector<CoordinateMetric<double>>& metrics) {
  const MechanismTable& t = s.mech[(std::size_t)vertex];
  const std::vector<int>& pa = s.dag.parents[(std::size_t)vertex];
  const CoordinateSpace& out_space = s.space[(std::size_t)vertex];
  std::vector<std::pair<std::pair<AtomTuple, int>, int>> rows(t.rows.begin(), t.rows.end());
  double best = 0;
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      const auto& [ina, fa] = rows[a];
      const auto& [inb, fb] = rows[b];
      double din = std::abs(s.noise[(std::size_t)vertex].atoms[(std::size_t)ina.second] -
                            s.noise[(std::size_t)vertex].atoms[(std::size_t)inb.second]);
      for (std::size_t j = 0; j < pa.size(); ++j) {
        const CoordinateSpace& psp = s.space[(std::size_t)pa[j]];
        din += metrics[(std::size_t)pa[j]].evaluate(psp, ina.first[j], psp, inb.first[j]);
      }
      double dout = metrics[(std::size_t)vertex].evaluate(out_space, fa, out_space, fb);
      if (din == 0) {
        if (dout > 0) return std::numeric_limits<double>::infinity();
        continue;
      }
      best = std::max(best, dout / din);
    }
  return best;
}

}  // namespace causalot
