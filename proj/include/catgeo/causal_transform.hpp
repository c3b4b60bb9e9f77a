#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "catgeo/matrix_io.hpp"
#include "catgeo/types.hpp"

namespace catgeo {

/// Shrinkage covariance estimate. `matrix` is symmetric positive definite.
struct CovarianceEstimate {
  Matrix matrix;
  double shrinkage_intensity = 0.0;
  std::int64_t sample_count = 0;
};

enum class TransformMode { causal, center_only, identity };

std::string_view to_string(TransformMode mode) noexcept;
/// Accepts "causal", "center-only"/"center_only", "identity".
TransformMode parse_transform_mode(std::string_view text);

inline constexpr double kDefaultFloorRatio = 1e-8;

/// Unembeddings mapped into the space where the Euclidean inner product stands
/// in for the causal inner product: g(y) = W (gamma(y) - mean).
struct TransformedUnembedding {
  Matrix g;
  Vector mean;
  /// Symmetric whitener W; empty when the mode does not whiten.
  std::optional<Matrix> whitener;
  TransformMode mode = TransformMode::identity;
  double shrinkage_intensity = 0.0;
  double floor_ratio = kDefaultFloorRatio;

  std::int64_t rows() const { return g.rows(); }
  std::int64_t dim() const { return g.cols(); }

  /// Maps a context-side vector lambda into transformed coordinates so that
  /// lambda^T (gamma1 - gamma0) == result^T (g1 - g0).
  Vector map_context_vector(const Vector& lambda) const;
};

/// Ledoit-Wolf shrinkage toward a scaled identity. Samples are centered
/// internally. A zero-variance sample set yields a tiny floored identity.
CovarianceEstimate ledoit_wolf_covariance(const Matrix& samples);

/// Q diag(max(l, floor_ratio * l_max))^{-1/2} Q^T.
Matrix inverse_sqrt(const CovarianceEstimate& c, double floor_ratio = kDefaultFloorRatio);

TransformedUnembedding causal_transform(const UnembeddingMatrix& m, TransformMode mode,
                                        double floor_ratio = kDefaultFloorRatio);

}  // namespace catgeo
