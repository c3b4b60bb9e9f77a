#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "catgeo/estimation.hpp"
#include "catgeo/hierarchy.hpp"
#include "catgeo/types.hpp"

namespace catgeo {

/// Label and token indices; the order of groups is preserved in every report.
using TokenGroups = std::vector<std::pair<std::string, IndexSet>>;

// ---------------------------------------------------------------- projections

enum class ProjectionGroup { train, test, random };
std::string_view to_string(ProjectionGroup g) noexcept;

struct ProjectionRow {
  std::string concept_id;
  ProjectionGroup group = ProjectionGroup::train;
  double mean = 0.0;
  double std = 0.0;
  std::int64_t count = 0;
};

struct ProjectionReport {
  std::vector<ProjectionRow> rows;
  /// Concepts without a usable (nonzero) vector.
  std::vector<std::string> skipped;

  /// Rows for one group, in concept order.
  std::vector<ProjectionRow> group(ProjectionGroup g) const;
};

/// Normalized projections g(y)^T l / ||l||^2 per concept. Vectors fitted on the
/// train scope get train/test/random rows; all-scope vectors get train (= Y(w))
/// and random rows. Random tokens are drawn without replacement from outside Y(w).
ProjectionReport projection_report(const ConceptVectorSet& set, const ConceptHierarchy& h,
                                   const Matrix& g, std::int64_t random_count, std::uint64_t seed);

// -------------------------------------------------------------------- cosines

struct CosineMatrix {
  std::vector<std::string> ids;
  /// NaN on rows/columns of zero vectors.
  Matrix values;
  std::vector<std::string> zero_ids;
};

CosineMatrix cosine_matrix(const ConceptVectorSet& set);

/// NaN when either vector is zero.
double cosine(const Vector& a, const Vector& b);

// ------------------------------------------------------ hierarchical orthogonality

enum class OrthoStatement { a, b, c, d };
enum class OrthoControl { none, random_parent, shuffled };
std::string_view to_string(OrthoStatement s) noexcept;
std::string_view to_string(OrthoControl c) noexcept;
OrthoStatement parse_statement(std::string_view text);
OrthoControl parse_control(std::string_view text);

struct OrthoRow {
  /// Node the tuple is indexed by (the child z, or the deepest node for (d)).
  std::string concept_id;
  /// All ids involved, '|' separated, in the order the vectors are formed.
  std::string tuple;
  OrthoStatement statement = OrthoStatement::a;
  double cosine = 0.0;
  OrthoControl control = OrthoControl::none;
};

struct OrthoSummary {
  double mean_cosine = 0.0;
  double mean_abs_cosine = 0.0;
  std::int64_t count = 0;
  std::int64_t nan_count = 0;
};

struct OrthoReport {
  std::vector<OrthoRow> rows;
  OrthoSummary summary() const;
};

/// Tuples per statement (unique parent = lexicographically smallest):
///   (a) cos(l_w, l_z - l_w) for each z with parent w
///   (b) cos(l_w, l_z1 - l_z0) for each pair of children z0 < z1 of w
///   (c) cos(l_w1 - l_w0, l_z1 - l_z0) with w1 = w, w0 its smallest sibling, z's children of w
///   (d) cos(l_w1 - l_w0, l_w2 - l_w1) for each chain w2 -> w1 -> w0
/// random_parent swaps the parent-side node(s) for uniformly drawn other nodes.
/// shuffled computes the plain statement; pass a set estimated on shuffled rows.
OrthoReport ortho_stats(const ConceptVectorSet& set, const ConceptHierarchy& h,
                        OrthoStatement statement, OrthoControl control, std::uint64_t seed);

// ------------------------------------------------------------------- polytopes

struct PolytopeGroup {
  std::string label;
  std::int64_t count = 0;
  /// Centroid of the projected tokens in an orthonormal basis of the column space.
  Vector centroid;
  double centroid_norm = 0.0;
  /// Mean Euclidean distance of projected tokens to the centroid.
  double dispersion = 0.0;
};

struct PolytopeReport {
  std::vector<std::string> member_ids;
  std::int64_t rank = 0;
  bool rank_deficient = false;
  Vector singular_values;
  std::vector<PolytopeGroup> groups;

  double min_centroid_distance() const;
};

inline constexpr double kRankTolerance = 1e-10;

/// Projects tokens onto the span of [l_w1 - l_w0, ..., l_w(k-1) - l_w0].
PolytopeReport polytope_projection(const ConceptVectorSet& set, const std::vector<std::string>& member_ids,
                                   const Matrix& g, const TokenGroups& token_groups);

/// One group per member (its Y(w)) plus "outside" for tokens in none of them.
TokenGroups polytope_groups(const ConceptHierarchy& h, const std::vector<std::string>& member_ids);

struct SimplexResult {
  bool is_simplex = false;
  std::int64_t achieved_rank = 0;
};

SimplexResult simplex_check(const ConceptVectorSet& set, const std::vector<std::string>& member_ids,
                            double tol = kRankTolerance);

// ---------------------------------------------------------------- interventions

enum class PairRole { parent, child };
std::string_view to_string(PairRole r) noexcept;

struct InterventionRow {
  PairRole pair_role = PairRole::parent;
  double mean_change = 0.0;
  double std_change = 0.0;
  std::int64_t n_pairs = 0;
};

inline constexpr std::int64_t kDefaultMaxPairs = 1'000'000;

/// contrast^T (g(y1) - g(y0)) over Y0 x Y1: every pair when the product fits in
/// max_pairs, otherwise max_pairs pairs drawn uniformly with replacement.
/// The std is the population standard deviation over pairs.
InterventionRow intervention_logit_change(const Vector& contrast, std::span<const std::int64_t> y0_ids,
                                          std::span<const std::int64_t> y1_ids, const Matrix& g,
                                          std::int64_t max_pairs, std::uint64_t seed,
                                          PairRole role = PairRole::parent);

// ------------------------------------------------------------ subspace coordinates

struct CoordTable {
  std::vector<std::string> labels;
  IndexSet token_ids;
  Matrix coords;  // one row per emitted token, one column per basis vector
};

/// Gram-Schmidt in the given order, then per-token coordinates.
CoordTable subspace_coords(const std::vector<Vector>& basis, const Matrix& g, const TokenGroups& token_groups);

}  // namespace catgeo
