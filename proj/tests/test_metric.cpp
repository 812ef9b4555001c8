#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "causalot/io.hpp"
#include "causalot/metric.hpp"

using namespace causalot;

namespace {

const std::string kMatrixPath = std::string(CAUSALOT_DATA_DIR) + "/appendix_b_matrix.csv";

ProductSpace cube3() {
  ProductSpace sp;
  for (int i = 0; i < 3; ++i)
    sp.push_back(CoordinateSpace::reals("x" + std::to_string(i + 1), {0, 1}));
  return sp;
}

}  // namespace

TEST_CASE("additive and power-sum costs agree on a one-coordinate move") {
  ProductSpace sp = cube3();
  std::vector<CoordinateMetric<double>> cm(3, CoordinateMetric<double>::absdiff());
  auto add2 = GroundCost<double>::additive(cm, 2);
  auto pow2 = GroundCost<double>::power_sum(cm, 2);
  AtomTuple o{0, 0, 0}, e2{0, 1, 0};
  CHECK(add2.evaluate(sp, o, sp, e2) == doctest::Approx(1.0));
  CHECK(pow2.evaluate(sp, o, sp, e2) == doctest::Approx(1.0));
  CHECK(add2.evaluate(sp, o, sp, o) == doctest::Approx(0.0));
  // two-coordinate move separates the kinds: (1+1)^2 vs 1^2+1^2
  AtomTuple e12{1, 1, 0};
  CHECK(add2.evaluate(sp, o, sp, e12) == doctest::Approx(4.0));
  CHECK(pow2.evaluate(sp, o, sp, e12) == doctest::Approx(2.0));
}

TEST_CASE("power-sum with p=2 is the squared euclidean distance") {
  ProductSpace sp;
  sp.push_back(CoordinateSpace::reals("a", {0, 3}));
  sp.push_back(CoordinateSpace::reals("b", {0, 4}));
  auto pow2 = GroundCost<double>::power_sum(
      {CoordinateMetric<double>::absdiff(), CoordinateMetric<double>::absdiff()}, 2);
  CHECK(pow2.evaluate(sp, {0, 0}, sp, {1, 1}) == doctest::Approx(25.0));
}

TEST_CASE("scale multiplies the ground distance before powering") {
  ProductSpace sp = cube3();
  std::vector<CoordinateMetric<double>> cm(3, CoordinateMetric<double>::absdiff());
  auto c = GroundCost<double>::additive(cm, 2, 3.0);
  CHECK(c.evaluate(sp, {0, 0, 0}, sp, {0, 1, 0}) == doctest::Approx(9.0));
}

TEST_CASE("explicit coordinate metric resolves by label across spaces") {
  MatrixS<double> d(2, 2);
  d << 0, 7, 7, 0;
  auto m = CoordinateMetric<double>::explicit_matrix({"u", "v"}, d);
  auto A = CoordinateSpace::labeled("a", {"u", "v"});
  auto B = CoordinateSpace::labeled("b", {"v"});
  CHECK(m.evaluate(A, 0, B, 0) == doctest::Approx(7.0));
  auto C = CoordinateSpace::labeled("c", {"w"});
  try {
    m.evaluate(A, 0, C, 0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingPair);
  }
}

TEST_CASE("joint matrix cost looks up canonical tuples") {
  ProductSpace sp;
  sp.push_back(CoordinateSpace::labeled("c1", {"p", "q"}));
  std::vector<AtomTuple> tuples{{0}, {1}};
  MatrixS<double> m(2, 2);
  m << 0, 1.5, 1.5, 0;
  auto c = GroundCost<double>::joint_matrix(sp, tuples, m, 2, 2.0);
  CHECK(c.evaluate(sp, {0}, sp, {1}) == doctest::Approx(9.0));  // (2*1.5)^2
  // a space with a label outside the canonical universe
  ProductSpace other;
  other.push_back(CoordinateSpace::labeled("c1", {"r"}));
  try {
    c.evaluate(other, {0}, sp, {1});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingPair);
  }
}

TEST_CASE("min-plus repair closes a stretched triangle") {
  MatrixS<double> M(3, 3);
  M << 0, 1, 5, 1, 0, 1, 5, 1, 0;
  auto R = metric_repair(M);
  CHECK(R(0, 2) == doctest::Approx(2.0));
  CHECK(R(0, 1) == doctest::Approx(1.0));
  // entrywise below the input, idempotent, still symmetric
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(R(i, j) <= M(i, j));
      CHECK(R(i, j) == R(j, i));
    }
  auto RR = metric_repair(R);
  CHECK((RR - R).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(validate_metric(R).ok);
}

TEST_CASE("repair needs several sweeps on a long path") {
  // only direct hops are cheap; shortcuts must propagate across sweeps
  int n = 6;
  MatrixS<double> M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = i == j ? 0.0 : 100.0;
  for (int i = 0; i + 1 < n; ++i) M(i, i + 1) = M(i + 1, i) = 1.0;
  auto R = metric_repair(M);
  CHECK(R(0, n - 1) == doctest::Approx(n - 1.0));
  CHECK(validate_metric(R).ok);
}

TEST_CASE("repair validates its input") {
  MatrixS<double> bad(2, 2);
  bad << 0, 1, 2, 0;
  try {
    metric_repair(bad);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AsymmetricInput);
  }
  MatrixS<double> neg(2, 2);
  neg << 0, -1, -1, 0;
  try {
    metric_repair(neg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NegativeEntry);
  }
  MatrixS<double> diag(2, 2);
  diag << 1, 2, 2, 0;
  try {
    metric_repair(diag);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonzeroDiagonal);
  }
}

TEST_CASE("validator reports violations and accepts pseudometrics") {
  MatrixS<double> M(3, 3);
  M << 0, 1, 5, 1, 0, 1, 5, 1, 0;
  auto rep = validate_metric(M);
  CHECK(!rep.ok);
  bool found = false;
  for (auto& v : rep.triangle_violations)
    if (v[0] == 0 && v[1] == 2 && v[2] == 1) found = true;
  CHECK(found);

  MatrixS<double> Z = MatrixS<double>::Zero(3, 3);
  auto zr = validate_metric(Z);
  CHECK(zr.ok);
  CHECK(zr.pseudometric);
}

TEST_CASE("the bundled 12x12 matrix is already a metric fixpoint") {
  auto M = read_matrix_csv<Rational>(kMatrixPath);
  REQUIRE(M.rows() == 12);
  REQUIRE(M.cols() == 12);
  CHECK(M(0, 1) == Rational(53, 100));
  CHECK(M(3, 9) == Rational(125, 100));
  auto R = metric_repair(M);
  bool unchanged = true;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j)
      if (R(i, j) != M(i, j)) unchanged = false;
  CHECK(unchanged);
  CHECK(validate_metric(M).ok);
}

TEST_CASE("cost matrices are symmetric on a shared support") {
  auto M = read_matrix_csv<double>(kMatrixPath);
  ProductSpace sp;
  sp.push_back(CoordinateSpace::labeled("w", {"a", "b", "c"}));
  std::vector<AtomTuple> tuples{{0}, {1}, {2}};
  MatrixS<double> d(3, 3);
  d << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  auto cost = GroundCost<double>::joint_matrix(sp, tuples, d);
  auto C = cost_matrix(cost, sp, tuples, sp, tuples);
  CHECK(C.rows() == 3);
  CHECK((C - C.transpose()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(C(0, 2) == doctest::Approx(2.0));
  (void)M;
}

TEST_CASE("exact euclidean distance needs one-dimensional embeddings") {
  CoordinateSpace flat;
  flat.name = "f";
  flat.atoms = {"p", "q"};
  flat.embedding = {Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4)};
  auto eu = CoordinateMetric<double>::euclidean();
  CHECK(eu.evaluate(flat, 0, flat, 1) == doctest::Approx(5.0));
  auto ex = CoordinateMetric<Rational>::euclidean();
  try {
    ex.evaluate(flat, 0, flat, 1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadArgument);
  }
}
