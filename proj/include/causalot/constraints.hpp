// constraints.hpp -- couplings and the constraint programs that carve the
// causal and bicausal transport polytopes out of the standard one.
//
// A coupling between two measures on n-coordinate product spaces is stored as
// a dense weight matrix over supp(mu) x supp(nu). Beyond the usual marginal
// equations, causality is expressed per vertex i of the graph:
//
//   causal-mechanism (linear, uses mu):
//     mu_pa(p_pa) * pi[x_{1:i} = p, y_hist = g]
//       = mu_{i,pa}(p_i, p_pa) * pi[x_hist = p_hist, y_hist = g]
//   causal-ci (bilinear):
//     pi[x_{1:i} = p, y_{1:i} = q] * pi[x_i = p_i, x_pa = p_pa, y_pa = q_pa]
//       = pi[x_i = p_i, y_i = q_i, x_pa = p_pa, y_pa = q_pa]
//         * pi[x_{1:i} = p, y_hist = q_hist]
//
// where "hist" is the history of i in a topological order, prefixes p, q run
// over supported values, and pa is the parent set. The bicausal program uses
// the symmetric kernel characterization: a joint bilinear family plus one
// linear family per side pinning the conditional kernels to the marginals.
// Families whose conditions hold trivially (parents covering the history, or
// an empty parent set for the one-sided families) are kept as explicitly
// vacuous entries so callers can report the structure of the program.
#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "causalot/dag.hpp"
#include "causalot/error.hpp"
#include "causalot/measure.hpp"
#include "causalot/metric.hpp"
#include "causalot/rational.hpp"
#include "causalot/space.hpp"

namespace causalot {

// A joint distribution over supp(mu) x supp(nu); weight(a, b) is the mass on
// the pair (mu.support[a], nu.support[b]). Margins are only enforced by
// validate_coupling / make_coupling so that solver iterates with slightly off
// margins can reuse the type.
template <class S>
struct Coupling {
  DiscreteMeasure<S> mu;
  DiscreteMeasure<S> nu;
  MatrixS<S> weight;

  int rows() const { return (int)weight.rows(); }
  int cols() const { return (int)weight.cols(); }
};

template <class S>
void validate_coupling(const Coupling<S>& c, double tol = 1e-9) {
  if (c.rows() != c.mu.size() || c.cols() != c.nu.size())
    fail(ErrorCode::ShapeMismatch,
         "weight matrix is " + std::to_string(c.rows()) + "x" + std::to_string(c.cols()) +
             ", supports are " + std::to_string(c.mu.size()) + " and " +
             std::to_string(c.nu.size()));
  for (int a = 0; a < c.rows(); ++a)
    for (int b = 0; b < c.cols(); ++b)
      if (c.weight(a, b) < S(0) && !ScalarOps<S>::is_zero(c.weight(a, b), tol))
        fail(ErrorCode::NegativeWeight, "coupling weight at (" + std::to_string(a) + "," +
                                            std::to_string(b) + ") is negative");
  for (int a = 0; a < c.rows(); ++a) {
    S row = c.weight.row(a).sum();
    if (!ScalarOps<S>::equal(row, c.mu.weight[(std::size_t)a], tol))
      fail(ErrorCode::WeightSumOff,
           "row " + std::to_string(a) + " sums to " + ScalarOps<S>::repr(row) + ", expected " +
               ScalarOps<S>::repr(c.mu.weight[(std::size_t)a]));
  }
  for (int b = 0; b < c.cols(); ++b) {
    S col = c.weight.col(b).sum();
    if (!ScalarOps<S>::equal(col, c.nu.weight[(std::size_t)b], tol))
      fail(ErrorCode::WeightSumOff,
           "column " + std::to_string(b) + " sums to " + ScalarOps<S>::repr(col) +
               ", expected " + ScalarOps<S>::repr(c.nu.weight[(std::size_t)b]));
  }
}

template <class S>
Coupling<S> make_coupling(DiscreteMeasure<S> mu, DiscreteMeasure<S> nu, MatrixS<S> weight,
                          double tol = 1e-9) {
  Coupling<S> c{std::move(mu), std::move(nu), std::move(weight)};
  validate_coupling(c, tol);
  return c;
}

// The independent coupling mu (x) nu; a member of every coupling class.
template <class S>
Coupling<S> product_coupling(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) {
  Coupling<S> c{mu, nu, MatrixS<S>(mu.size(), nu.size())};
  for (int a = 0; a < c.rows(); ++a)
    for (int b = 0; b < c.cols(); ++b)
      c.weight(a, b) = mu.weight[(std::size_t)a] * nu.weight[(std::size_t)b];
  return c;
}

// sum_k coeff_k * pi[var_k] + constant, on flattened variables var = a*ny + b.
template <class S>
struct LinearForm {
  std::vector<std::pair<int, S>> terms;  // sorted by variable index
  S constant = S(0);

  S eval(const MatrixS<S>& w) const {
    S v = constant;
    int ny = (int)w.cols();
    for (const auto& [idx, c] : terms) v += c * w(idx / ny, idx % ny);
    return v;
  }
};

template <class S>
struct LinearEquation {
  LinearForm<S> lhs;  // lhs == rhs
  S rhs = S(0);
  std::string tag;
};

template <class S>
struct BilinearEquation {
  LinearForm<S> a, b, c, d;  // a*b == c*d
  std::string tag;
};

template <class S>
struct LinearConstraintFamily {
  std::string label;
  int vertex = -1;  // 0-based; -1 for marginal families
  bool trivially_satisfied = false;
  std::vector<LinearEquation<S>> equations;

  bool vacuous() const { return equations.empty(); }
};

template <class S>
struct BilinearConstraintFamily {
  std::string label;
  int vertex = -1;
  bool trivially_satisfied = false;
  std::vector<BilinearEquation<S>> equations;

  bool vacuous() const { return equations.empty(); }
};

// Everything a membership check or a solver needs: variables are the entries
// of a coupling weight matrix (row-major), constraints come in families.
template <class S>
struct ConstraintProgram {
  int nx = 0;
  int ny = 0;
  std::vector<LinearConstraintFamily<S>> linear;
  std::vector<BilinearConstraintFamily<S>> bilinear;

  int var(int a, int b) const { return a * ny + b; }
  std::size_t linear_count() const {
    std::size_t n = 0;
    for (const auto& f : linear) n += f.equations.size();
    return n;
  }
  std::size_t bilinear_count() const {
    std::size_t n = 0;
    for (const auto& f : bilinear) n += f.equations.size();
    return n;
  }
};

namespace detail {

inline std::map<AtomTuple, std::vector<int>> group_support(const std::vector<AtomTuple>& supp,
                                                           const std::vector<int>& coords) {
  std::map<AtomTuple, std::vector<int>> groups;
  for (int a = 0; a < (int)supp.size(); ++a) groups[sub_tuple(supp[(std::size_t)a], coords)].push_back(a);
  return groups;
}

template <class S>
std::map<AtomTuple, S> mass_by(const DiscreteMeasure<S>& m, const std::vector<int>& coords) {
  std::map<AtomTuple, S> mass;
  for (int s = 0; s < m.size(); ++s) mass[sub_tuple(m.support[(std::size_t)s], coords)] += m.weight[(std::size_t)s];
  return mass;
}

// The indicator form of the event {rows} x {cols}; variable order is already
// ascending because var = a*ny + b.
template <class S>
LinearForm<S> event_form(const std::vector<int>& rows, const std::vector<int>& cols, int ny) {
  LinearForm<S> f;
  f.terms.reserve(rows.size() * cols.size());
  for (int a : rows)
    for (int b : cols) f.terms.emplace_back(a * ny + b, S(1));
  return f;
}

inline std::string coords_label(const std::vector<int>& coords) {
  std::string s = "(";
  for (std::size_t k = 0; k < coords.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(coords[k] + 1);
  }
  return s + ")";
}

inline std::string value_label(const ProductSpace& sp, const std::vector<int>& coords,
                               const AtomTuple& value) {
  ProductSpace sub;
  for (int c : coords) sub.push_back(sp[(std::size_t)c]);
  return coords_label(coords) + "=" + tuple_label(sub, value);
}

}  // namespace detail

// Marginal equations: row sums equal mu, column sums equal nu.
template <class S>
ConstraintProgram<S> compile_marginals(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) {
  ConstraintProgram<S> prog;
  prog.nx = mu.size();
  prog.ny = nu.size();
  LinearConstraintFamily<S> fx{"marginal-x", -1, false, {}};
  for (int a = 0; a < prog.nx; ++a) {
    LinearEquation<S> eq;
    eq.lhs.terms.reserve((std::size_t)prog.ny);
    for (int b = 0; b < prog.ny; ++b) eq.lhs.terms.emplace_back(prog.var(a, b), S(1));
    eq.rhs = mu.weight[(std::size_t)a];
    eq.tag = "x" + tuple_label(mu.space, mu.support[(std::size_t)a]);
    fx.equations.push_back(std::move(eq));
  }
  LinearConstraintFamily<S> fy{"marginal-y", -1, false, {}};
  for (int b = 0; b < prog.ny; ++b) {
    LinearEquation<S> eq;
    eq.lhs.terms.reserve((std::size_t)prog.nx);
    for (int a = 0; a < prog.nx; ++a) eq.lhs.terms.emplace_back(prog.var(a, b), S(1));
    eq.rhs = nu.weight[(std::size_t)b];
    eq.tag = "y" + tuple_label(nu.space, nu.support[(std::size_t)b]);
    fy.equations.push_back(std::move(eq));
  }
  prog.linear.push_back(std::move(fx));
  prog.linear.push_back(std::move(fy));
  return prog;
}

// The causal program: pi transports mu to nu causally along the graph iff all
// emitted equations hold (together with the marginals). Requires mu to be
// compatible with the graph; on the complete graph every coupling is causal
// and the program is empty.
template <class S>
ConstraintProgram<S> compile_causal(const Dag& dag, const DiscreteMeasure<S>& mu,
                                    const DiscreteMeasure<S>& nu) {
  if (mu.n() != dag.n || nu.n() != dag.n)
    fail(ErrorCode::CoordinateMismatch, "measures and graph disagree on coordinate count");
  CompatReport compat = is_g_compatible(mu, dag);
  if (!compat)
    fail(ErrorCode::MuNotCompatible,
         "mu does not factorize along the graph (vertex " + std::to_string(compat.vertex + 1) +
             ", conditioning " + compat.conditioning + ")");
  ConstraintProgram<S> prog;
  prog.nx = mu.size();
  prog.ny = nu.size();
  if (dag.complete) return prog;

  const int ny = prog.ny;
  for (int k = 1; k < dag.n; ++k) {
    const int i = dag.order[(std::size_t)k];
    std::vector<int> hist = dag.history(i);
    std::vector<int> hx = hist;
    hx.push_back(i);
    const std::vector<int>& pa = dag.parents[(std::size_t)i];
    std::vector<int> pai = pa;
    pai.push_back(i);

    auto rows_hx = detail::group_support(mu.support, hx);
    auto rows_hist = detail::group_support(mu.support, hist);
    auto cols_hist = detail::group_support(nu.support, hist);
    auto mu_pa = detail::mass_by(mu, pa);
    auto mu_pai = detail::mass_by(mu, pai);

    // positions of pa inside hx (pa is sorted by topological position, as is hx)
    std::vector<int> pa_in_hx;
    for (std::size_t c = 0; c < hx.size(); ++c)
      if (std::find(pa.begin(), pa.end(), hx[c]) != pa.end()) pa_in_hx.push_back((int)c);

    LinearConstraintFamily<S> mech{"causal-mechanism", i, false, {}};
    for (const auto& [p, rows_p] : rows_hx) {
      AtomTuple p_hist(p.begin(), p.end() - 1);
      AtomTuple p_pa = sub_tuple(p, pa_in_hx);
      AtomTuple p_pai = p_pa;
      p_pai.push_back(p.back());
      const S wpa = mu_pa.at(p_pa);
      const S wpai = mu_pai.at(p_pai);
      const auto& rows_h = rows_hist.at(p_hist);
      for (const auto& [g, cols_g] : cols_hist) {
        std::map<int, S> coeff;
        for (int a : rows_p)
          for (int b : cols_g) coeff[a * ny + b] += wpa;
        for (int a : rows_h)
          for (int b : cols_g) coeff[a * ny + b] -= wpai;
        LinearEquation<S> eq;
        for (auto& [idx, c] : coeff)
          if (!(c == S(0))) eq.lhs.terms.emplace_back(idx, c);
        eq.tag = "v" + std::to_string(i + 1) + ": x" + detail::value_label(mu.space, hx, p) +
                 " y" + detail::value_label(nu.space, hist, g);
        mech.equations.push_back(std::move(eq));
      }
    }
    prog.linear.push_back(std::move(mech));

    // The equation must also bind for atom values q_i that extend a supported
    // y-history to an unsupported prefix: the prefix event is structurally
    // empty, yet the product on the other side can be positive, so those
    // instances are emitted as well (they degenerate to c*d = 0).
    BilinearConstraintFamily<S> ci{"causal-ci", i, (int)pa.size() == k, {}};
    if (!ci.trivially_satisfied) {
      auto rows_pai = detail::group_support(mu.support, pai);
      auto cols_pa = detail::group_support(nu.support, pa);
      const int nby = nu.space[(std::size_t)i].size();
      for (const auto& [p, rows_p] : rows_hx) {
        AtomTuple p_pa = sub_tuple(p, pa_in_hx);
        AtomTuple p_pai = p_pa;
        p_pai.push_back(p.back());
        const auto& rows_z = rows_pai.at(p_pai);
        for (const auto& [qh, cols_qh] : cols_hist) {
          AtomTuple q_pa = sub_tuple(qh, pa_in_hx);
          const auto& cols_z = cols_pa.at(q_pa);
          for (int bq = 0; bq < nby; ++bq) {
            std::vector<int> cols_q, cols_zi;
            for (int b : cols_qh)
              if (nu.support[(std::size_t)b][(std::size_t)i] == bq) cols_q.push_back(b);
            for (int b : cols_z)
              if (nu.support[(std::size_t)b][(std::size_t)i] == bq) cols_zi.push_back(b);
            if (cols_zi.empty()) continue;  // both sides structurally zero
            AtomTuple q = qh;
            q.push_back(bq);
            BilinearEquation<S> eq;
            eq.a = detail::event_form<S>(rows_p, cols_q, ny);
            eq.b = detail::event_form<S>(rows_z, cols_z, ny);
            eq.c = detail::event_form<S>(rows_z, cols_zi, ny);
            eq.d = detail::event_form<S>(rows_p, cols_qh, ny);
            eq.tag = "v" + std::to_string(i + 1) + ": x" + detail::value_label(mu.space, hx, p) +
                     " y" + detail::value_label(nu.space, hx, q);
            ci.equations.push_back(std::move(eq));
          }
        }
      }
    }
    prog.bilinear.push_back(std::move(ci));
  }
  return prog;
}

// The bicausal program: the joint conditional-independence family plus the
// two one-sided kernel families. Requires both marginals to be compatible.
template <class S>
ConstraintProgram<S> compile_bicausal(const Dag& dag, const DiscreteMeasure<S>& mu,
                                      const DiscreteMeasure<S>& nu) {
  if (mu.n() != dag.n || nu.n() != dag.n)
    fail(ErrorCode::CoordinateMismatch, "measures and graph disagree on coordinate count");
  if (CompatReport c = is_g_compatible(mu, dag); !c)
    fail(ErrorCode::MarginalNotCompatible,
         "mu does not factorize along the graph (vertex " + std::to_string(c.vertex + 1) + ")");
  if (CompatReport c = is_g_compatible(nu, dag); !c)
    fail(ErrorCode::MarginalNotCompatible,
         "nu does not factorize along the graph (vertex " + std::to_string(c.vertex + 1) + ")");
  ConstraintProgram<S> prog;
  prog.nx = mu.size();
  prog.ny = nu.size();
  if (dag.complete) return prog;

  const int ny = prog.ny;
  for (int k = 1; k < dag.n; ++k) {
    const int i = dag.order[(std::size_t)k];
    std::vector<int> hist = dag.history(i);
    std::vector<int> hx = hist;
    hx.push_back(i);
    const std::vector<int>& pa = dag.parents[(std::size_t)i];
    std::vector<int> pai = pa;
    pai.push_back(i);

    std::vector<int> pa_in_hx;
    for (std::size_t c = 0; c < hx.size(); ++c)
      if (std::find(pa.begin(), pa.end(), hx[c]) != pa.end()) pa_in_hx.push_back((int)c);

    auto rows_pa = detail::group_support(mu.support, pa);
    auto cols_pa = detail::group_support(nu.support, pa);
    auto rows_pai = detail::group_support(mu.support, pai);
    auto cols_pai = detail::group_support(nu.support, pai);

    // As in the causal family, atom pairs (a, b) extending supported histories
    // to unsupported prefixes still produce binding instances c*d = 0, so the
    // loop runs over history pairs times all atom pairs whose parent-level
    // events are nonempty.
    BilinearConstraintFamily<S> joint{"bicausal-joint", i, (int)pa.size() == k, {}};
    if (!joint.trivially_satisfied) {
      auto rows_hist = detail::group_support(mu.support, hist);
      auto cols_hist = detail::group_support(nu.support, hist);
      const int nax = mu.space[(std::size_t)i].size();
      const int nby = nu.space[(std::size_t)i].size();
      for (const auto& [ph, rows_ph] : rows_hist) {
        AtomTuple p_pa = sub_tuple(ph, pa_in_hx);
        const auto& rows_pav = rows_pa.at(p_pa);
        for (const auto& [qh, cols_qh] : cols_hist) {
          AtomTuple q_pa = sub_tuple(qh, pa_in_hx);
          const auto& cols_pav = cols_pa.at(q_pa);
          for (int ax = 0; ax < nax; ++ax) {
            AtomTuple p_pai = p_pa;
            p_pai.push_back(ax);
            auto itr = rows_pai.find(p_pai);
            if (itr == rows_pai.end()) continue;  // no row carries (x_i, x_pa)
            std::vector<int> rows_full;
            for (int a : rows_ph)
              if (mu.support[(std::size_t)a][(std::size_t)i] == ax) rows_full.push_back(a);
            for (int by = 0; by < nby; ++by) {
              AtomTuple q_pai = q_pa;
              q_pai.push_back(by);
              auto itc = cols_pai.find(q_pai);
              if (itc == cols_pai.end()) continue;
              std::vector<int> cols_full;
              for (int b : cols_qh)
                if (nu.support[(std::size_t)b][(std::size_t)i] == by) cols_full.push_back(b);
              AtomTuple p = ph, q = qh;
              p.push_back(ax);
              q.push_back(by);
              BilinearEquation<S> eq;
              eq.a = detail::event_form<S>(rows_full, cols_full, ny);
              eq.b = detail::event_form<S>(rows_pav, cols_pav, ny);
              eq.c = detail::event_form<S>(itr->second, itc->second, ny);
              eq.d = detail::event_form<S>(rows_ph, cols_qh, ny);
              eq.tag = "v" + std::to_string(i + 1) + ": x" +
                       detail::value_label(mu.space, hx, p) + " y" +
                       detail::value_label(nu.space, hx, q);
              joint.equations.push_back(std::move(eq));
            }
          }
        }
      }
    }
    prog.bilinear.push_back(std::move(joint));

    // One-sided families: the x-kernel of pi given both parent values must be
    // the mechanism of mu (and symmetrically for nu). With no parents the
    // condition is implied by the marginals and the family is vacuous.
    LinearConstraintFamily<S> kx{"bicausal-x", i, pa.empty(), {}};
    if (!kx.trivially_satisfied) {
      auto mu_pa = detail::mass_by(mu, pa);
      auto mu_pai = detail::mass_by(mu, pai);
      for (const auto& [ppai, rows_ai] : rows_pai) {
        AtomTuple p_pa(ppai.begin(), ppai.end() - 1);
        const auto& rows_par = rows_pa.at(p_pa);
        const S wpa = mu_pa.at(p_pa);
        const S wpai = mu_pai.at(ppai);
        for (const auto& [qpa, cols_par] : cols_pa) {
          std::map<int, S> coeff;
          for (int a : rows_ai)
            for (int b : cols_par) coeff[a * ny + b] += wpa;
          for (int a : rows_par)
            for (int b : cols_par) coeff[a * ny + b] -= wpai;
          LinearEquation<S> eq;
          for (auto& [idx, c] : coeff)
            if (!(c == S(0))) eq.lhs.terms.emplace_back(idx, c);
          eq.tag = "v" + std::to_string(i + 1) + ": x" + detail::value_label(mu.space, pai, ppai) +
                   " y" + detail::value_label(nu.space, pa, qpa);
          kx.equations.push_back(std::move(eq));
        }
      }
    }
    prog.linear.push_back(std::move(kx));

    LinearConstraintFamily<S> ky{"bicausal-y", i, pa.empty(), {}};
    if (!ky.trivially_satisfied) {
      auto nu_pa = detail::mass_by(nu, pa);
      auto nu_pai = detail::mass_by(nu, pai);
      for (const auto& [qpai, cols_ai] : cols_pai) {
        AtomTuple q_pa(qpai.begin(), qpai.end() - 1);
        const auto& cols_par = cols_pa.at(q_pa);
        const S wpa = nu_pa.at(q_pa);
        const S wpai = nu_pai.at(qpai);
        for (const auto& [ppa, rows_par] : rows_pa) {
          std::map<int, S> coeff;
          for (int a : rows_par)
            for (int b : cols_ai) coeff[a * ny + b] += wpa;
          for (int a : rows_par)
            for (int b : cols_par) coeff[a * ny + b] -= wpai;
          LinearEquation<S> eq;
          for (auto& [idx, c] : coeff)
            if (!(c == S(0))) eq.lhs.terms.emplace_back(idx, c);
          eq.tag = "v" + std::to_string(i + 1) + ": y" + detail::value_label(nu.space, pai, qpai) +
                   " x" + detail::value_label(mu.space, pa, ppa);
          ky.equations.push_back(std::move(eq));
        }
      }
    }
    prog.linear.push_back(std::move(ky));
  }
  return prog;
}

enum class CouplingClass { Any, Causal, Bicausal };

inline const char* coupling_class_name(CouplingClass c) {
  switch (c) {
    case CouplingClass::Any: return "any";
    case CouplingClass::Causal: return "causal";
    case CouplingClass::Bicausal: return "bicausal";
  }
  return "unknown";
}

struct MembershipReport {
  bool ok = true;
  double max_residual = 0.0;
  std::string family;   // label of the first violated family
  int vertex = -1;      // its vertex (0-based), -1 for marginals
  std::string witness;  // tag of the first violated equation
  double witness_residual = 0.0;

  explicit operator bool() const { return ok; }
};

namespace detail {

template <class S>
double linear_residual(const LinearEquation<S>& eq, const MatrixS<S>& w) {
  S lhs = eq.lhs.eval(w);
  S diff = lhs - eq.rhs;
  double num = std::abs(ScalarOps<S>::to_dbl(diff));
  double den = std::max(1.0, std::abs(ScalarOps<S>::to_dbl(eq.rhs)));
  return num / den;
}

template <class S>
double bilinear_residual(const BilinearEquation<S>& eq, const MatrixS<S>& w) {
  S a = eq.a.eval(w), b = eq.b.eval(w), c = eq.c.eval(w), d = eq.d.eval(w);
  double num = std::abs(ScalarOps<S>::to_dbl(a * b - c * d));
  double den = std::max({1.0, std::abs(ScalarOps<S>::to_dbl(a)), std::abs(ScalarOps<S>::to_dbl(b)),
                         std::abs(ScalarOps<S>::to_dbl(c)), std::abs(ScalarOps<S>::to_dbl(d))});
  return num / den;
}

template <class S>
void scan_program(const ConstraintProgram<S>& prog, const MatrixS<S>& w, MembershipReport& rep,
                  double tol) {
  for (const auto& fam : prog.linear)
    for (const auto& eq : fam.equations) {
      double r = linear_residual(eq, w);
      rep.max_residual = std::max(rep.max_residual, r);
      if (r > tol && rep.ok) {
        rep.ok = false;
        rep.family = fam.label;
        rep.vertex = fam.vertex;
        rep.witness = eq.tag;
        rep.witness_residual = r;
      }
    }
  for (const auto& fam : prog.bilinear)
    for (const auto& eq : fam.equations) {
      double r = bilinear_residual(eq, w);
      rep.max_residual = std::max(rep.max_residual, r);
      if (r > tol && rep.ok) {
        rep.ok = false;
        rep.family = fam.label;
        rep.vertex = fam.vertex;
        rep.witness = eq.tag;
        rep.witness_residual = r;
      }
    }
}

}  // namespace detail

// Evaluates every constraint of the requested class on the coupling's own
// marginals and reports the largest scale-normalized residual. Marginal
// equations are always included; the first violated equation is the witness.
template <class S>
MembershipReport check_membership(const Coupling<S>& pi, const Dag& dag, CouplingClass cls,
                                  double tol = 1e-8) {
  if (pi.rows() != pi.mu.size() || pi.cols() != pi.nu.size())
    fail(ErrorCode::ShapeMismatch, "coupling weight shape does not match the supports");
  if (pi.mu.n() != dag.n)
    fail(ErrorCode::CoordinateMismatch, "coupling and graph disagree on coordinate count");
  MembershipReport rep;
  ConstraintProgram<S> marg = compile_marginals(pi.mu, pi.nu);
  detail::scan_program(marg, pi.weight, rep, tol);
  if (cls == CouplingClass::Causal) {
    ConstraintProgram<S> prog = compile_causal(dag, pi.mu, pi.nu);
    detail::scan_program(prog, pi.weight, rep, tol);
  } else if (cls == CouplingClass::Bicausal) {
    ConstraintProgram<S> prog = compile_bicausal(dag, pi.mu, pi.nu);
    detail::scan_program(prog, pi.weight, rep, tol);
  }
  return rep;
}

// Same check against explicitly given target marginals; the coupling's
// supports must match theirs.
template <class S>
MembershipReport check_membership(const Coupling<S>& pi, const Dag& dag,
                                  const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                                  CouplingClass cls, double tol = 1e-8) {
  if (pi.mu.support != mu.support || pi.nu.support != nu.support)
    fail(ErrorCode::ShapeMismatch, "coupling supports do not match the given marginals");
  Coupling<S> against{mu, nu, pi.weight};
  return check_membership(against, dag, cls, tol);
}

}  // namespace causalot
