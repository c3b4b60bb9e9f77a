#include <doctest.h>

#include <cmath>
#include <numeric>

#include "catgeo/error.hpp"
#include "catgeo/estimation.hpp"
#include "catgeo/synthetic.hpp"
#include "test_util.hpp"

using namespace catgeo;
using doctest::Approx;

namespace {

IndexSet iota_ids(std::int64_t n) {
  IndexSet ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

TransformedUnembedding wrap(const Matrix& g) {
  TransformedUnembedding t;
  t.g = g;
  t.mean = Vector::Zero(g.cols());
  return t;
}

}  // namespace

TEST_CASE("LDA matches a pseudo-inverse reference on a fixed data set") {
  // Reference: numpy pinv of scikit-learn's Ledoit-Wolf covariance times the mean.
  Matrix x(12, 3);
  x << -2, -2, -1, 0, 1, -0.5, 2, 4, 1, -1, -1, 0, 1, 2, 0, -2, 0, 1, 0, 0, -0.5, 2, 3, -1, -1, 1, -0.5, 1, 1,
      1, -2, -1, 0, 0, 2, 0;
  const ConceptVector v = estimate_lda(x, iota_ids(12), "w");
  CHECK(v.vector(0) == Approx(-0.4818114174727537).epsilon(1e-10));
  CHECK(v.vector(1) == Approx(0.5196814562283576).epsilon(1e-10));
  CHECK(v.vector(2) == Approx(-0.12850298052078765).epsilon(1e-10));
  CHECK(v.magnitude == Approx(0.7202250161980327).epsilon(1e-10));
  CHECK_FALSE(v.negative_magnitude);
}

TEST_CASE("LDA low-rank route matches the reference when samples are fewer than dimensions") {
  Matrix y(4, 6);
  y << 1, 0, 2, -1, 0, 3, 0, 1, 1, 2, -1, 0, 2, 2, 0, 1, 1, 1, 1, -1, 3, 0, 2, 2;
  const ConceptVector v = estimate_lda(y, iota_ids(4));
  const double expected[] = {0.772789541566699,  0.8576718806550572,   1.26655582423959,
                             1.0629441026337119, -0.05694500626929543, 1.061283602260935};
  for (int j = 0; j < 6; ++j) CHECK(v.vector(j) == Approx(expected[j]).epsilon(1e-10));
}

TEST_CASE("dense and low-rank LDA solves agree") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Matrix x = testutil::gaussian(10 + static_cast<Eigen::Index>(seed), 30, seed);
    x.col(0).array() += 2.0;
    const Vector dense = detail::lda_solve_dense(x);
    const Vector low = detail::lda_solve_lowrank(x);
    CHECK((dense - low).norm() <= 1e-8 * dense.norm());
  }
}

TEST_CASE("LDA magnitude is the norm and the vector is its signed multiple") {
  const Matrix x = testutil::gaussian(100, 8, 4).array() + 0.5;
  const ConceptVector v = estimate_lda(x, iota_ids(100));
  CHECK(std::abs(v.magnitude) == Approx(v.vector.norm()));
  CHECK(v.estimator == Estimator::lda);
}

TEST_CASE("identical rows reduce LDA to the mean direction") {
  Matrix x(6, 4);
  x.rowwise() = Eigen::RowVector4d(1.0, -2.0, 0.0, 3.0);
  const ConceptVector v = estimate_lda(x, iota_ids(6));
  CHECK((v.vector - x.row(0).transpose()).norm() < 1e-9);
  CHECK(v.magnitude == Approx(x.row(0).norm()));
}

TEST_CASE("LDA preconditions") {
  const Matrix x = testutil::gaussian(10, 3, 8);
  CHECK_THROWS_AS(estimate_lda(x, IndexSet{1}), Error);
  try {
    estimate_lda(x, IndexSet{0, 1, 2, 42});
    FAIL("expected TokenOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TokenOutOfRange);
  }
  Matrix sym(2, 3);
  sym << 1, 2, 3, -1, -2, -3;
  try {
    estimate_lda(sym, iota_ids(2));
    FAIL("expected DegenerateDirection");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateDirection);
  }
}

TEST_CASE("mean estimator") {
  Matrix x(3, 2);
  x << 1, 2, -1, -2, 4, 6;
  const ConceptVector one = estimate_mean(x, IndexSet{2});
  CHECK(one.vector == Vector(x.row(2).transpose()));
  CHECK(one.magnitude == Approx(std::sqrt(52.0)));
  const ConceptVector zero = estimate_mean(x, IndexSet{0, 1});
  CHECK(zero.zero_vector);
  CHECK(zero.magnitude == 0.0);
  CHECK_THROWS_AS(estimate_mean(x, IndexSet{}), Error);
}

TEST_CASE("estimate_all covers every node, records failures, and ignores thread count") {
  const PlantedData data = generate_planted(default_planted_spec(0.01, 3));
  const TransformedUnembedding t = wrap(data.matrix.data);
  const ConceptVectorSet one = estimate_all(data.hierarchy, t, {Estimator::lda, TokenScope::all, 1});
  const ConceptVectorSet four = estimate_all(data.hierarchy, t, {Estimator::lda, TokenScope::all, 4});
  CHECK(one.vectors.size() == 13);
  CHECK(one.errors.empty());
  for (const auto& [id, v] : one.vectors) CHECK(v.vector == four.at(id).vector);

  CHECK_THROWS_AS(estimate_all(data.hierarchy, t, {Estimator::lda, TokenScope::train, 1}), Error);

  ConceptHierarchy h = data.hierarchy;
  h.nodes.at("n.0.0").token_ids = {5};
  const ConceptVectorSet partial = estimate_all(h, t, {Estimator::lda, TokenScope::all, 1});
  CHECK(partial.vectors.size() == 12);
  CHECK(partial.errors.count("n.0.0") == 1);
}

TEST_CASE("contrast vectors") {
  const PlantedData data = generate_planted(default_planted_spec(0.0, 1));
  const ConceptVectorSet truth = truth_vector_set(data.truth);
  CHECK(contrast_vector(truth, "n.0", "n.0").norm() == 0.0);
  CHECK(contrast_vector(truth, "n.0", "n.1").norm() == Approx(contrast_vector(truth, "n.1", "n.0").norm()));
  // Parent-to-child contrast is orthogonal to the parent.
  CHECK(std::abs(contrast_vector(truth, "n.0", "n.0.1").dot(truth.at("n.0").vector)) < 1e-12);
}

TEST_CASE("LDA on planted data in causal coordinates recovers the mapped planted direction") {
  const PlantedData data = generate_planted(default_planted_spec(0.01, 7));
  const TransformedUnembedding t = causal_transform(data.matrix, TransformMode::causal);
  const ConceptVectorSet est = estimate_all(data.hierarchy, t, {Estimator::lda, TokenScope::all, 1});
  for (const auto& [id, v] : est.vectors) {
    const Vector mapped = t.map_context_vector(data.truth.vectors.at(id));
    CHECK(std::abs(v.vector.normalized().dot(mapped.normalized())) > 0.99);
  }
}
