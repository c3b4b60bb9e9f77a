#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>

#include "catgeo/causal_transform.hpp"
#include "catgeo/hierarchy.hpp"
#include "catgeo/types.hpp"

namespace catgeo {

enum class Estimator { lda, mean };
enum class TokenScope { all, train };

std::string_view to_string(Estimator e) noexcept;
std::string_view to_string(TokenScope s) noexcept;
Estimator parse_estimator(std::string_view text);
TokenScope parse_scope(std::string_view text);

/// Estimated vector representation of one attribute.
struct ConceptVector {
  std::string concept_id;
  Vector vector;
  /// Signed: for LDA this is g~^T E(g_w), which can come out negative when the
  /// mean anti-aligns with the whitened direction. |magnitude| == ||vector||.
  double magnitude = 0.0;
  Estimator estimator = Estimator::lda;
  TokenScope token_scope = TokenScope::all;
  bool negative_magnitude = false;
  bool zero_vector = false;
};

struct ConceptVectorSet {
  std::map<std::string, ConceptVector> vectors;
  TransformMode transform_mode = TransformMode::identity;
  std::int64_t dim = 0;
  /// Per-node failures from estimate_all; those ids have no vector.
  std::map<std::string, std::string> errors;

  const ConceptVector& at(std::string_view id) const;
  bool contains(std::string_view id) const { return vectors.count(std::string(id)) > 0; }
};

inline constexpr double kPinvRelativeTolerance = 1e-10;

ConceptVector estimate_lda(const Matrix& g, std::span<const std::int64_t> token_ids,
                           std::string concept_id = {});
ConceptVector estimate_mean(const Matrix& g, std::span<const std::int64_t> token_ids,
                            std::string concept_id = {});

struct EstimateOptions {
  Estimator method = Estimator::lda;
  TokenScope scope = TokenScope::all;
  unsigned threads = 1;
};

ConceptVectorSet estimate_all(const ConceptHierarchy& h, const TransformedUnembedding& g,
                              const EstimateOptions& options);

/// l_{w1} - l_{w0}.
Vector contrast_vector(const ConceptVectorSet& set, std::string_view w0, std::string_view w1);

namespace detail {
// Cov(X)^+ E(X) with Ledoit-Wolf Cov, by two routes. The dense route forms the
// d x d covariance; the low-rank route works with the n x n Gram matrix and is
// used when n < d.
Vector lda_solve_dense(const Matrix& samples);
Vector lda_solve_lowrank(const Matrix& samples);
}  // namespace detail

}  // namespace catgeo
