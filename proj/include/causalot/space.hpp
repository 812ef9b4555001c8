// space.hpp -- finite coordinate spaces, product spaces, and atom tuples.
//
// Atoms are identified by index into a coordinate space; the optional
// embedding attaches one real vector per atom (a common dimension per
// coordinate) and is required only by geometric operations.
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "causalot/error.hpp"

namespace causalot {

struct CoordinateSpace {
  std::string name;
  std::vector<std::string> atoms;
  std::vector<Eigen::VectorXd> embedding;  // empty, or one vector per atom

  int size() const { return (int)atoms.size(); }
  bool has_embedding() const { return !embedding.empty(); }

  int index_of(const std::string& label) const {
    for (int i = 0; i < (int)atoms.size(); ++i)
      if (atoms[i] == label) return i;
    return -1;
  }

  // Convenience factory for 1-d real atoms labeled by their value.
  static CoordinateSpace reals(std::string name, const std::vector<double>& values) {
    CoordinateSpace s;
    s.name = std::move(name);
    for (double v : values) {
      std::string lab = std::to_string(v);
      lab.erase(lab.find_last_not_of('0') + 1);
      if (!lab.empty() && lab.back() == '.') lab.pop_back();
      s.atoms.push_back(lab);
      s.embedding.push_back(Eigen::VectorXd::Constant(1, v));
    }
    return s;
  }

  static CoordinateSpace labeled(std::string name, std::vector<std::string> labels) {
    CoordinateSpace s;
    s.name = std::move(name);
    s.atoms = std::move(labels);
    return s;
  }
};

using ProductSpace = std::vector<CoordinateSpace>;
using AtomTuple = std::vector<int>;

inline void validate_space(const CoordinateSpace& s) {
  if (s.atoms.empty()) fail(ErrorCode::EmptySpace, "coordinate '" + s.name + "' has no atoms");
  for (std::size_t i = 0; i < s.atoms.size(); ++i)
    for (std::size_t j = i + 1; j < s.atoms.size(); ++j)
      if (s.atoms[i] == s.atoms[j])
        fail(ErrorCode::DuplicateAtom, "coordinate '" + s.name + "' repeats atom '" + s.atoms[i] + "'");
  if (!s.embedding.empty()) {
    if (s.embedding.size() != s.atoms.size())
      fail(ErrorCode::CoordinateMismatch,
           "coordinate '" + s.name + "' embeds " + std::to_string(s.embedding.size()) +
               " of " + std::to_string(s.atoms.size()) + " atoms");
    for (auto& v : s.embedding)
      if (v.size() != s.embedding.front().size())
        fail(ErrorCode::DimensionMismatch,
             "coordinate '" + s.name + "' mixes embedding dimensions");
  }
}

inline void validate_product(const ProductSpace& sp) {
  if (sp.empty()) fail(ErrorCode::EmptySpace, "product space has no coordinates");
  for (auto& s : sp) validate_space(s);
}

// Renders a tuple as "(a,b,c)" using atom labels.
inline std::string tuple_label(const ProductSpace& sp, const AtomTuple& t) {
  std::string out = "(";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += ",";
    out += sp[i].atoms[t[i]];
  }
  return out + ")";
}

// Projection of a full tuple onto a coordinate subset (given order).
inline AtomTuple sub_tuple(const AtomTuple& t, const std::vector<int>& coords) {
  AtomTuple s;
  s.reserve(coords.size());
  for (int c : coords) s.push_back(t[(std::size_t)c]);
  return s;
}

// All tuples of a product space in lexicographic order; caller must keep the
// total count reasonable.
inline std::vector<AtomTuple> enumerate_tuples(const ProductSpace& sp) {
  std::vector<AtomTuple> out;
  AtomTuple cur(sp.size(), 0);
  for (;;) {
    out.push_back(cur);
    int i = (int)sp.size() - 1;
    while (i >= 0 && ++cur[(std::size_t)i] == sp[(std::size_t)i].size()) cur[(std::size_t)i--] = 0;
    if (i < 0) break;
  }
  return out;
}

// Concatenated embedding vector of a full tuple.
inline Eigen::VectorXd embed_tuple(const ProductSpace& sp, const AtomTuple& t) {
  Eigen::Index dim = 0;
  for (auto& s : sp) {
    if (!s.has_embedding())
      fail(ErrorCode::MissingEmbedding, "coordinate '" + s.name + "' has no embedding");
    dim += s.embedding.front().size();
  }
  Eigen::VectorXd v(dim);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const Eigen::VectorXd& e = sp[i].embedding[(std::size_t)t[i]];
    v.segment(at, e.size()) = e;
    at += e.size();
  }
  return v;
}

}  // namespace causalot
