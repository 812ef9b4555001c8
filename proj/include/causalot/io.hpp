// io.hpp -- file formats: headerless CSV matrices, the JSON model file, and
// the LP-text/JSON-sidecar export of compiled constraint programs.
//
// Numeric cells and weight strings are parsed exactly and converted to the
// requested scalar, so the Rational path sees decimal literals and "p/q"
// fractions without rounding. JSON numbers carry their binary double value.
#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "causalot/constraints.hpp"
#include "causalot/dag.hpp"
#include "causalot/error.hpp"
#include "causalot/measure.hpp"
#include "causalot/metric.hpp"
#include "causalot/rational.hpp"
#include "causalot/scm.hpp"
#include "causalot/space.hpp"

namespace causalot {

using Json = nlohmann::ordered_json;

template <class S>
MatrixS<S> read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::vector<std::vector<S>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<S> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.erase(cell.begin());
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
        cell.pop_back();
      row.push_back(ScalarOps<S>::from_rational(parse_rational(cell)));
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorCode::ParseError, "ragged CSV row in '" + path + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::ParseError, "empty CSV file '" + path + "'");
  MatrixS<S> M((Eigen::Index)rows.size(), (Eigen::Index)rows.front().size());
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = rows[(std::size_t)i][(std::size_t)j];
  return M;
}

template <class S>
void write_matrix_csv(const std::string& path, const MatrixS<S>& M) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out << ",";
      out << ScalarOps<S>::repr(M(i, j));
    }
    out << "\n";
  }
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// JSON model file
//   {"spaces":    [{"name", "atoms": [...], "embedding": [[...]]?}, ...],
//    "graph":     {"n", "edges": [[i,j], ...]},            1-based vertices
//    "measures":  {"<name>": {"support": [{"atoms": [...], "weight": w}]}},
//    "scms":      {"<name>": {"vertices": [{"noise": {"values", "weights"},
//                                           "lipschitz"?, "table": [...]}]}}}
// Weights are decimal strings, "p/q" strings, or JSON numbers. Atoms are
// labels or 1-based indices into the coordinate's atom list.

template <class S>
struct Model {
  ProductSpace space;
  bool has_graph = false;
  Dag graph;
  std::map<std::string, DiscreteMeasure<S>> measures;
  std::map<std::string, Scm<S>> scms;
};

namespace detail {

template <class S>
S scalar_from_json(const Json& v, const std::string& what) {
  if (v.is_string()) return ScalarOps<S>::from_rational(parse_rational(v.get<std::string>()));
  if (v.is_number_integer()) return S((long)v.get<long long>());
  if (v.is_number_float()) return ScalarOps<S>::from_double(v.get<double>());
  fail(ErrorCode::ParseError, what + " must be a number or a numeric string");
  return S(0);
}

inline int atom_from_json(const Json& v, const CoordinateSpace& sp) {
  if (v.is_string()) {
    int a = sp.index_of(v.get<std::string>());
    if (a < 0)
      fail(ErrorCode::ParseError,
           "atom '" + v.get<std::string>() + "' is not in coordinate '" + sp.name + "'");
    return a;
  }
  if (v.is_number_integer()) {
    long a = v.get<long>();
    if (a < 1 || a > sp.size())
      fail(ErrorCode::ParseError, "atom index " + std::to_string(a) + " outside 1.." +
                                      std::to_string(sp.size()) + " of coordinate '" + sp.name + "'");
    return (int)(a - 1);
  }
  fail(ErrorCode::ParseError, "atoms must be labels or 1-based indices");
  return -1;
}

inline const Json& member(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::ParseError, where + " is missing \"" + key + "\"");
  return *it;
}

}  // namespace detail

inline Dag parse_graph_json(const Json& g, int expect_n = -1) {
  if (!g.is_object()) fail(ErrorCode::ParseError, "graph must be an object");
  int n = (int)detail::member(g, "n", "graph").get<long>();
  if (expect_n >= 0 && n != expect_n)
    fail(ErrorCode::ParseError, "graph has " + std::to_string(n) + " vertices, the spaces have " +
                                    std::to_string(expect_n));
  std::vector<std::pair<int, int>> edges;
  if (g.contains("edges"))
    for (const Json& e : g["edges"]) {
      if (!e.is_array() || e.size() != 2)
        fail(ErrorCode::ParseError, "graph edges must be [from, to] pairs");
      edges.emplace_back((int)e[0].get<long>() - 1, (int)e[1].get<long>() - 1);
    }
  return validate_dag(n, edges);
}

template <class S>
Model<S> parse_model(const Json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "model file must hold a JSON object");
  Model<S> m;
  for (const Json& js : detail::member(j, "spaces", "model")) {
    CoordinateSpace sp;
    sp.name = detail::member(js, "name", "space").get<std::string>();
    for (const Json& a : detail::member(js, "atoms", "space '" + sp.name + "'"))
      sp.atoms.push_back(a.is_string() ? a.get<std::string>() : a.dump());
    if (js.contains("embedding"))
      for (const Json& row : js["embedding"]) {
        Eigen::VectorXd v((Eigen::Index)row.size());
        for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = row[(std::size_t)k].get<double>();
        sp.embedding.push_back(std::move(v));
      }
    validate_space(sp);
    m.space.push_back(std::move(sp));
  }
  validate_product(m.space);

  if (j.contains("graph")) {
    m.graph = parse_graph_json(j["graph"], (int)m.space.size());
    m.has_graph = true;
  }

  if (j.contains("measures"))
    for (const auto& [name, jm] : j["measures"].items()) {
      std::vector<std::pair<AtomTuple, S>> entries;
      for (const Json& pt : detail::member(jm, "support", "measure '" + name + "'")) {
        const Json& atoms = detail::member(pt, "atoms", "support point of '" + name + "'");
        if (atoms.size() != m.space.size())
          fail(ErrorCode::ParseError, "support point of '" + name + "' has " +
                                          std::to_string(atoms.size()) + " atoms, expected " +
                                          std::to_string(m.space.size()));
        AtomTuple t;
        for (std::size_t c = 0; c < atoms.size(); ++c)
          t.push_back(detail::atom_from_json(atoms[c], m.space[c]));
        entries.emplace_back(std::move(t),
                             detail::scalar_from_json<S>(
                                 detail::member(pt, "weight", "support point of '" + name + "'"),
                                 "weight of '" + name + "'"));
      }
      m.measures.emplace(name, make_measure<S>(m.space, std::move(entries)));
    }

  if (j.contains("scms")) {
    if (!m.has_graph) fail(ErrorCode::ParseError, "structural models need a \"graph\"");
    for (const auto& [name, js] : j["scms"].items()) {
      Scm<S> s;
      s.dag = m.graph;
      s.space = m.space;
      const Json& vertices = detail::member(js, "vertices", "scm '" + name + "'");
      if ((int)vertices.size() != m.graph.n)
        fail(ErrorCode::ParseError, "scm '" + name + "' describes " +
                                        std::to_string(vertices.size()) + " of " +
                                        std::to_string(m.graph.n) + " vertices");
      bool any_lipschitz = false;
      for (int v = 0; v < m.graph.n; ++v) {
        const Json& jv = vertices[(std::size_t)v];
        const std::string where = "scm '" + name + "' vertex " + std::to_string(v + 1);
        const Json& jn = detail::member(jv, "noise", where);
        NoiseDist<S> nd;
        for (const Json& x : detail::member(jn, "values", where)) nd.atoms.push_back(x.get<double>());
        for (const Json& w : detail::member(jn, "weights", where))
          nd.weight.push_back(detail::scalar_from_json<S>(w, where + " noise weight"));
        s.noise.push_back(std::move(nd));
        MechanismTable mech;
        const ProductSpace ps = s.parent_space(v);
        for (const Json& row : detail::member(jv, "table", where)) {
          const Json& parents = detail::member(row, "parents", where + " table row");
          if (parents.size() != ps.size())
            fail(ErrorCode::ParseError, where + " table row has " +
                                            std::to_string(parents.size()) +
                                            " parent atoms, expected " + std::to_string(ps.size()));
          AtomTuple pt;
          for (std::size_t c = 0; c < ps.size(); ++c)
            pt.push_back(detail::atom_from_json(parents[c], ps[c]));
          int u = (int)detail::member(row, "noise", where + " table row").get<long>() - 1;
          if (u < 0 || u >= s.noise[(std::size_t)v].size())
            fail(ErrorCode::ParseError, where + " table row names noise atom " +
                                            std::to_string(u + 1) + " of " +
                                            std::to_string(s.noise[(std::size_t)v].size()));
          int out = detail::atom_from_json(detail::member(row, "out", where + " table row"),
                                           m.space[(std::size_t)v]);
          if (!mech.rows.emplace(std::make_pair(pt, u), out).second)
            fail(ErrorCode::ParseError, where + " repeats a table row");
        }
        s.mech.push_back(std::move(mech));
        if (jv.contains("lipschitz")) any_lipschitz = true;
      }
      if (any_lipschitz)
        for (int v = 0; v < m.graph.n; ++v)
          s.lipschitz.push_back(
              detail::member(vertices[(std::size_t)v], "lipschitz", "scm '" + name + "'")
                  .get<double>());
      validate_scm(s);
      m.scms.emplace(name, std::move(s));
    }
  }
  return m;
}

template <class S>
Model<S> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, "'" + path + "': " + e.what());
  }
  try {
    return parse_model<S>(j);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, "'" + path + "': " + e.what());
  }
}

template <class S>
Json model_json(const Model<S>& m) {
  Json j = Json::object();
  j["spaces"] = Json::array();
  for (const CoordinateSpace& sp : m.space) {
    Json js{{"name", sp.name}, {"atoms", sp.atoms}};
    if (sp.has_embedding()) {
      Json emb = Json::array();
      for (const Eigen::VectorXd& v : sp.embedding) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < v.size(); ++k) row.push_back(v(k));
        emb.push_back(std::move(row));
      }
      js["embedding"] = std::move(emb);
    }
    j["spaces"].push_back(std::move(js));
  }
  if (m.has_graph) {
    Json edges = Json::array();
    for (const auto& [a, b] : m.graph.edges) edges.push_back(Json::array({a + 1, b + 1}));
    j["graph"] = Json{{"n", m.graph.n}, {"edges", std::move(edges)}};
  }
  if (!m.measures.empty()) {
    Json jm = Json::object();
    for (const auto& [name, meas] : m.measures) {
      Json supp = Json::array();
      for (int k = 0; k < meas.size(); ++k) {
        Json labels = Json::array();
        for (std::size_t c = 0; c < meas.space.size(); ++c)
          labels.push_back(meas.space[c].atoms[(std::size_t)meas.support[(std::size_t)k][c]]);
        supp.push_back(Json{{"atoms", std::move(labels)},
                            {"weight", ScalarOps<S>::repr(meas.weight[(std::size_t)k])}});
      }
      jm[name] = Json{{"support", std::move(supp)}};
    }
    j["measures"] = std::move(jm);
  }
  if (!m.scms.empty()) {
    Json js = Json::object();
    for (const auto& [name, s] : m.scms) {
      Json vertices = Json::array();
      for (int v = 0; v < s.dag.n; ++v) {
        Json weights = Json::array();
        for (const S& w : s.noise[(std::size_t)v].weight)
          weights.push_back(ScalarOps<S>::repr(w));
        Json jv{{"noise", Json{{"values", s.noise[(std::size_t)v].atoms},
                               {"weights", std::move(weights)}}}};
        if (!s.lipschitz.empty()) jv["lipschitz"] = s.lipschitz[(std::size_t)v];
        Json table = Json::array();
        const ProductSpace ps = s.parent_space(v);
        for (const auto& [key, out] : s.mech[(std::size_t)v].rows) {
          Json parents = Json::array();
          for (std::size_t c = 0; c < key.first.size(); ++c)
            parents.push_back(ps[c].atoms[(std::size_t)key.first[c]]);
          table.push_back(Json{{"parents", std::move(parents)},
                               {"noise", key.second + 1},
                               {"out", s.space[(std::size_t)v].atoms[(std::size_t)out]}});
        }
        jv["table"] = std::move(table);
        vertices.push_back(std::move(jv));
      }
      js[name] = Json{{"vertices", std::move(vertices)}};
    }
    j["scms"] = std::move(js);
  }
  return j;
}

template <class S>
void save_model(const Model<S>& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << model_json(m).dump(2) << "\n";
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Constraint-program export: the linear part in LP text for external LP
// solvers (coefficients rendered as decimals), the bilinear equations in an
// exact JSON sidecar. Variables are the coupling entries x_<row>_<col>.

namespace detail {

inline std::string lp_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class S>
void lp_terms(std::ostream& out, const LinearForm<S>& f, int ny) {
  bool first = true;
  for (const auto& [idx, c] : f.terms) {
    double cd = ScalarOps<S>::to_dbl(c);
    if (first) {
      out << (cd < 0 ? "- " : "");
      first = false;
    } else {
      out << (cd < 0 ? " - " : " + ");
    }
    out << lp_number(std::abs(cd)) << " x_" << idx / ny << "_" << idx % ny;
  }
  if (first) out << "0 x_0_0";
}

template <class S>
Json form_json(const LinearForm<S>& f) {
  Json terms = Json::array();
  for (const auto& [idx, c] : f.terms)
    terms.push_back(Json::array({idx, ScalarOps<S>::repr(c)}));
  return Json{{"terms", std::move(terms)}, {"constant", ScalarOps<S>::repr(f.constant)}};
}

}  // namespace detail

// The objective and every linear family as one LP-format text. Bilinear
// families are not expressible here; export_bilinear_json carries them.
template <class S>
std::string lp_format(const ConstraintProgram<S>& prog, const MatrixS<S>& cost) {
  if ((int)cost.rows() != prog.nx || (int)cost.cols() != prog.ny)
    fail(ErrorCode::ShapeMismatch, "cost matrix does not match the program's variable grid");
  std::ostringstream out;
  out << "\\ coupling variables x_<row>_<col>, row-major over " << prog.nx << "x" << prog.ny
      << " support pairs\n";
  out << "Minimize\n obj: ";
  LinearForm<S> obj;
  for (int a = 0; a < prog.nx; ++a)
    for (int b = 0; b < prog.ny; ++b)
      if (!ScalarOps<S>::is_zero(cost(a, b), 0.0)) obj.terms.emplace_back(prog.var(a, b), cost(a, b));
  detail::lp_terms(out, obj, prog.ny);
  out << "\nSubject To\n";
  int row = 0;
  for (const auto& fam : prog.linear) {
    out << "\\ family: " << fam.label << "\n";
    for (const auto& eq : fam.equations) {
      out << " c" << ++row << ": ";
      detail::lp_terms(out, eq.lhs, prog.ny);
      out << " = " << detail::lp_number(ScalarOps<S>::to_dbl(eq.rhs - eq.lhs.constant)) << "\n";
    }
  }
  out << "End\n";
  return out.str();
}

// Exact bilinear sidecar: every equation a*b == c*d with rational-capable
// coefficient strings, for cross-checks against external bilinear solvers.
template <class S>
Json export_bilinear_json(const ConstraintProgram<S>& prog) {
  Json fams = Json::array();
  for (const auto& fam : prog.bilinear) {
    Json eqs = Json::array();
    for (const auto& eq : fam.equations)
      eqs.push_back(Json{{"tag", eq.tag},
                         {"a", detail::form_json(eq.a)},
                         {"b", detail::form_json(eq.b)},
                         {"c", detail::form_json(eq.c)},
                         {"d", detail::form_json(eq.d)}});
    fams.push_back(Json{{"label", fam.label}, {"vertex", fam.vertex + 1}, {"equations", std::move(eqs)}});
  }
  return Json{{"variables", prog.nx * prog.ny},
              {"shape", Json::array({prog.nx, prog.ny})},
              {"identity", "a*b == c*d"},
              {"families", std::move(fams)}};
}

}  // namespace causalot
