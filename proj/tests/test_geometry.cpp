#include <doctest.h>

#include <cmath>
#include <limits>

#include "catgeo/error.hpp"
#include "catgeo/geometry.hpp"
#include "catgeo/matrix_io.hpp"
#include "catgeo/reductions.hpp"
#include "catgeo/synthetic.hpp"
#include "test_util.hpp"

using namespace catgeo;
using doctest::Approx;

namespace {

TransformedUnembedding wrap(const Matrix& g) {
  TransformedUnembedding t;
  t.g = g;
  t.mean = Vector::Zero(g.cols());
  return t;
}

ConceptVectorSet set_of(std::initializer_list<std::pair<std::string, Vector>> items) {
  ConceptVectorSet s;
  for (const auto& [id, v] : items) {
    ConceptVector cv;
    cv.concept_id = id;
    cv.vector = v;
    cv.magnitude = v.norm();
    s.vectors.emplace(id, cv);
    s.dim = v.size();
  }
  return s;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("noise-free planted projections are exactly 1 for members and 0 outside") {
  const PlantedData data = generate_planted(default_planted_spec(0.0, 2));
  ConceptVectorSet truth = truth_vector_set(data.truth);
  for (auto& [_, v] : truth.vectors) v.token_scope = TokenScope::train;
  const ConceptHierarchy h = split_tokens(data.hierarchy, 0.7, 2);
  const ProjectionReport rep = projection_report(truth, h, data.matrix.data, 1000, 2);
  REQUIRE(rep.group(ProjectionGroup::test).size() == 13);
  for (const auto& r : rep.group(ProjectionGroup::test)) CHECK(std::abs(r.mean - 1.0) < 1e-12);
  for (const auto& r : rep.group(ProjectionGroup::random)) CHECK(std::abs(r.mean) < 1e-12);
}

TEST_CASE("LDA on noisy planted data: held-out projections near 1, random near 0") {
  const PlantedData data = generate_planted(default_planted_spec(0.01, 0));
  const ConceptHierarchy h = split_tokens(data.hierarchy, 0.7, 0);
  const ConceptVectorSet est =
      estimate_all(h, wrap(data.matrix.data), {Estimator::lda, TokenScope::train, 1});
  const ProjectionReport rep = projection_report(est, h, data.matrix.data, 1000, 0);
  for (const auto& r : rep.group(ProjectionGroup::test)) {
    CHECK(r.mean >= 0.95);
    CHECK(r.mean <= 1.05);
  }
  for (const auto& r : rep.group(ProjectionGroup::random)) CHECK(std::abs(r.mean) <= 0.05);
  for (const auto& r : rep.group(ProjectionGroup::train)) CHECK(r.mean == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("vectors estimated after shuffling rows fail the projection pattern") {
  const PlantedData data = generate_planted(default_planted_spec(0.01, 0));
  const auto shuffled = shuffle_rows(data.matrix, 0).first;
  const TransformedUnembedding t = causal_transform(shuffled, TransformMode::causal);
  const ConceptHierarchy h = split_tokens(data.hierarchy, 0.7, 0);
  const ConceptVectorSet est = estimate_all(h, t, {Estimator::lda, TokenScope::train, 1});
  CHECK(est.vectors.size() == 13);
  const ProjectionReport rep = projection_report(est, h, t.g, 1000, 0);
  for (const auto& r : rep.group(ProjectionGroup::test)) CHECK((r.mean < 0.9 || r.mean > 1.1));
}

TEST_CASE("projection report skips zero vectors and random tokens avoid the concept") {
  Matrix g = testutil::gaussian(20, 3, 1);
  ConceptHierarchy h = parse_hierarchy(R"({"concepts": [{"id": "a", "token_ids": [0, 1, 2]},
                                                          {"id": "z", "token_ids": [3, 4]}]})",
                                       20);
  ConceptVectorSet s = set_of({{"a", vec({1, 0, 0})}, {"z", vec({0, 0, 0})}});
  const ProjectionReport rep = projection_report(s, h, g, 100, 3);
  CHECK(rep.skipped == std::vector<std::string>{"z"});
  const auto random = rep.group(ProjectionGroup::random);
  REQUIRE(random.size() == 1);
  CHECK(random.front().count == 17);
}

TEST_CASE("cosines") {
  CHECK(cosine(vec({1, 2}), vec({1, 2})) == Approx(1.0));
  CHECK(cosine(vec({1, 0}), vec({0, 3})) == 0.0);
  CHECK(std::isnan(cosine(vec({0, 0}), vec({1, 0}))));
  const CosineMatrix m = cosine_matrix(set_of({{"a", vec({1, 0})}, {"b", vec({1, 1})}, {"c", vec({0, 0})}}));
  CHECK(m.values(0, 0) == 1.0);
  CHECK(m.values(0, 1) == Approx(std::sqrt(0.5)));
  CHECK(std::isnan(m.values(2, 0)));
  CHECK(m.zero_ids == std::vector<std::string>{"c"});

  const PlantedData data = generate_planted(default_planted_spec(0.0, 4));
  const ConceptVectorSet truth = truth_vector_set(data.truth);
  const double b = data.truth.magnitudes.at("n");
  const double b0 = data.truth.magnitudes.at("n.0");
  const double b1 = data.truth.magnitudes.at("n.1");
  CHECK(cosine(truth.at("n.0").vector, truth.at("n.1").vector) == Approx(b / std::sqrt(b0 * b1)).epsilon(1e-12));
}

TEST_CASE("orthogonality statements vanish on planted vectors; random parents do not") {
  const PlantedData data = generate_planted(default_planted_spec(0.0, 5));
  const ConceptVectorSet truth = truth_vector_set(data.truth);
  for (auto s : {OrthoStatement::a, OrthoStatement::b, OrthoStatement::c, OrthoStatement::d}) {
    const OrthoReport rep = ortho_stats(truth, data.hierarchy, s, OrthoControl::none, 5);
    CHECK(!rep.rows.empty());
    for (const auto& r : rep.rows) CHECK(std::abs(r.cosine) < 1e-12);
  }
  const OrthoReport a = ortho_stats(truth, data.hierarchy, OrthoStatement::a, OrthoControl::none, 5);
  CHECK(a.rows.size() == 12);
  CHECK(ortho_stats(truth, data.hierarchy, OrthoStatement::d, OrthoControl::none, 5).rows.size() == 9);

  const OrthoReport rp = ortho_stats(truth, data.hierarchy, OrthoStatement::a, OrthoControl::random_parent, 5);
  CHECK(rp.summary().mean_abs_cosine >= 0.2);
  const OrthoReport rp2 = ortho_stats(truth, data.hierarchy, OrthoStatement::a, OrthoControl::random_parent, 5);
  for (std::size_t i = 0; i < rp.rows.size(); ++i) CHECK(rp.rows[i].tuple == rp2.rows[i].tuple);

  CHECK(parse_statement("c") == OrthoStatement::c);
  CHECK(parse_control("random-parent") == OrthoControl::random_parent);
  CHECK_THROWS_AS(parse_statement("e"), Error);
}

TEST_CASE("orthogonality with no eligible tuples is an error") {
  const ConceptHierarchy h = parse_hierarchy(R"({"concepts": [{"id": "a", "token_ids": [0]}]})", 4);
  try {
    ortho_stats(set_of({{"a", vec({1, 0})}}), h, OrthoStatement::a, OrthoControl::none, 0);
    FAIL("expected NoEligibleTuples");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoEligibleTuples);
  }
}

TEST_CASE("ortho summary ignores NaN cosines") {
  OrthoReport r;
  r.rows.push_back({"x", "", OrthoStatement::a, 0.5, OrthoControl::none});
  r.rows.push_back({"y", "", OrthoStatement::a, -0.25, OrthoControl::none});
  r.rows.push_back({"z", "", OrthoStatement::a, std::numeric_limits<double>::quiet_NaN(), OrthoControl::none});
  const auto s = r.summary();
  CHECK(s.count == 2);
  CHECK(s.nan_count == 1);
  CHECK(s.mean_cosine == Approx(0.125));
  CHECK(s.mean_abs_cosine == Approx(0.375));
}

TEST_CASE("noise-free sibling polytope: tight groups and a zero outside centroid") {
  const PlantedData data = generate_planted(default_planted_spec(0.0, 6));
  const ConceptVectorSet truth = truth_vector_set(data.truth);
  const std::vector<std::string> members{"n.1.0", "n.1.1", "n.1.2"};
  const PolytopeReport rep =
      polytope_projection(truth, members, data.matrix.data, polytope_groups(data.hierarchy, members));
  CHECK(rep.rank == 2);
  CHECK_FALSE(rep.rank_deficient);
  REQUIRE(rep.groups.size() == 4);
  for (const auto& g : rep.groups) CHECK(g.dispersion < 1e-12);
  CHECK(rep.groups.back().label == "outside");
  CHECK(rep.groups.back().centroid_norm < 1e-12);
  CHECK(rep.min_centroid_distance() > 1.0);
}

TEST_CASE("two-member polytope is the contrast line") {
  const PlantedData data = generate_planted(default_planted_spec(0.0, 6));
  const ConceptVectorSet truth = truth_vector_set(data.truth);
  const std::vector<std::string> members{"n.0", "n.1"};
  const PolytopeReport rep =
      polytope_projection(truth, members, data.matrix.data, polytope_groups(data.hierarchy, members));
  CHECK(rep.rank == 1);
  // Member tokens sit at b_w1 and -b_w0 along the contrast, in units of its length.
  const Vector c = truth.at("n.1").vector - truth.at("n.0").vector;
  const double expected = (data.truth.magnitudes.at("n.0") + data.truth.magnitudes.at("n.1")) / c.norm();
  CHECK((rep.groups[1].centroid - rep.groups[0].centroid).norm() == Approx(expected).epsilon(1e-12));
  // The outside group sits at the origin, halfway between the two members.
  CHECK(rep.groups[2].centroid_norm < 1e-12);
  CHECK(rep.min_centroid_distance() == Approx(expected / 2.0).epsilon(1e-12));
}

TEST_CASE("noisy planted polytope groups stay tight relative to their separation") {
  const PlantedData data = generate_planted(default_planted_spec(0.01, 8));
  const ConceptVectorSet est =
      estimate_all(data.hierarchy, wrap(data.matrix.data), {Estimator::lda, TokenScope::all, 1});
  const std::vector<std::string> members{"n.0", "n.1", "n.2"};
  const PolytopeReport rep =
      polytope_projection(est, members, data.matrix.data, polytope_groups(data.hierarchy, members));
  for (const auto& g : rep.groups)
    if (g.label != "outside") CHECK(g.dispersion < 0.05 * rep.min_centroid_distance());
}

TEST_CASE("simplex check") {
  CHECK_FALSE(simplex_check(set_of({{"a", vec({0, 0})}, {"b", vec({1, 1})}, {"c", vec({2, 2})}}), {"a", "b", "c"})
                  .is_simplex);
  CHECK(simplex_check(set_of({{"a", vec({0, 0})}, {"b", vec({1, 1})}, {"c", vec({2, 2})}}), {"a", "b", "c"})
            .achieved_rank == 1);
  CHECK(simplex_check(set_of({{"a", vec({0, 1})}, {"b", vec({1, 1})}}), {"a", "b"}).is_simplex);

  PlantedSpec spec = default_planted_spec(0.0, 9);
  spec.tree = balanced_tree(2, 4);
  spec.alphas.clear();
  for (const auto& id : spec.tree.ids()) spec.alphas[id] = 1.0;
  const PlantedData data = generate_planted(spec);
  const ConceptVectorSet truth = truth_vector_set(data.truth);
  const SimplexResult r = simplex_check(truth, {"n.0", "n.1", "n.2", "n.3"});
  CHECK(r.is_simplex);
  CHECK(r.achieved_rank == 3);
}

TEST_CASE("intervention: full-product formula equals brute force") {
  const Matrix g = testutil::gaussian(30, 4, 10);
  const Vector c = testutil::gaussian(4, 1, 11).col(0);
  const IndexSet y0{0, 1, 2, 3, 4, 5, 6}, y1{10, 11, 12, 13, 14};
  const InterventionRow row = intervention_logit_change(c, y0, y1, g, kDefaultMaxPairs, 0);
  std::vector<double> changes;
  for (auto a : y0)
    for (auto b : y1) changes.push_back(c.dot(g.row(b) - g.row(a)));
  const auto [m, s] = reductions::mean_std(changes);
  CHECK(row.n_pairs == 35);
  CHECK(row.mean_change == Approx(m).epsilon(1e-12));
  CHECK(row.std_change == Approx(s).epsilon(1e-12));

  const InterventionRow sampled = intervention_logit_change(c, y0, y1, g, 20, 3);
  CHECK(sampled.n_pairs == 20);
  CHECK(sampled.mean_change == intervention_logit_change(c, y0, y1, g, 20, 3).mean_change);

  const InterventionRow zero = intervention_logit_change(Vector::Zero(4), y0, y1, g, kDefaultMaxPairs, 0);
  CHECK(zero.mean_change == 0.0);
  CHECK(zero.std_change == 0.0);
  CHECK_THROWS_AS(intervention_logit_change(c, IndexSet{}, y1, g, 10, 0), Error);
}

TEST_CASE("intervention on noise-free planted data") {
  const PlantedData data = generate_planted(default_planted_spec(0.0, 12));
  const ConceptVectorSet truth = truth_vector_set(data.truth);
  const auto& h = data.hierarchy;
  const Vector c = contrast_vector(truth, "n.0", "n.1");
  const auto parent = intervention_logit_change(c, h.node("n.0").token_ids, h.node("n.1").token_ids,
                                                data.matrix.data, kDefaultMaxPairs, 0);
  CHECK(parent.mean_change ==
        Approx(data.truth.magnitudes.at("n.0") + data.truth.magnitudes.at("n.1")).epsilon(1e-12));
  const auto child = intervention_logit_change(c, h.node("n.1.0").token_ids, h.node("n.1.2").token_ids,
                                               data.matrix.data, kDefaultMaxPairs, 0, PairRole::child);
  CHECK(std::abs(child.mean_change) < 1e-12);
}

TEST_CASE("subspace coordinates") {
  Matrix g(2, 3);
  g << 1, 0, 0, 2, 3, 0;
  const TokenGroups groups{{"x", {0}}, {"y", {1}}};
  const CoordTable t = subspace_coords({vec({1, 0, 0}), vec({0, 1, 0})}, g, groups);
  CHECK(t.coords(0, 0) == 1.0);
  CHECK(t.coords(0, 1) == 0.0);
  CHECK(t.labels == std::vector<std::string>{"x", "y"});

  const CoordTable scaled = subspace_coords({vec({5, 0, 0}), vec({3, 0.5, 0})}, g, groups);
  CHECK((scaled.coords - t.coords).norm() < 1e-12);

  CHECK_THROWS_AS(subspace_coords({vec({1, 0, 0}), vec({2, 0, 0})}, g, groups), Error);
  CHECK_THROWS_AS(subspace_coords({vec({1, 0, 0})}, g, groups), Error);
}

TEST_CASE("planted parent/child basis puts members at fixed coordinates and outsiders at the origin") {
  const PlantedData data = generate_planted(default_planted_spec(0.0, 13));
  const auto& tv = data.truth.vectors;
  const Vector parent = tv.at("n.0");
  const Vector child = tv.at("n.0.1");
  TokenGroups groups{{"n.0.1", data.hierarchy.node("n.0.1").token_ids}};
  IndexSet randoms;
  for (std::size_t i = 0; i < data.truth.token_assignment.size(); ++i)
    if (data.truth.token_assignment[i] == "random") randoms.push_back(static_cast<std::int64_t>(i));
  groups.emplace_back("random", randoms);
  const CoordTable t = subspace_coords({parent, child - parent}, data.matrix.data, groups);
  const double b_parent = data.truth.magnitudes.at("n.0");
  const double b_child = data.truth.magnitudes.at("n.0.1");
  for (std::size_t i = 0; i < t.labels.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (t.labels[i] == "random") {
      CHECK(t.coords.row(r).norm() < 1e-12);
    } else {
      CHECK(t.coords(r, 0) == Approx(std::sqrt(b_parent)).epsilon(1e-12));
      CHECK(t.coords(r, 1) == Approx((b_child - b_parent) / (child - parent).norm()).epsilon(1e-12));
    }
  }
}
