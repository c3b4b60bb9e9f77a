#include "catgeo/causal_transform.hpp"

#include <algorithm>
#include <cmath>

#include "catgeo/error.hpp"
#include "catgeo/reductions.hpp"

namespace catgeo {

namespace {

// Floor for the all-identical sample case, where mu is exactly zero.
constexpr double kDegenerateVariance = 1e-12;

}  // namespace

std::string_view to_string(TransformMode mode) noexcept {
  switch (mode) {
    case TransformMode::causal: return "causal";
    case TransformMode::center_only: return "center-only";
    case TransformMode::identity: return "identity";
  }
  return "unknown";
}

TransformMode parse_transform_mode(std::string_view text) {
  if (text == "causal") return TransformMode::causal;
  if (text == "center-only" || text == "center_only") return TransformMode::center_only;
  if (text == "identity") return TransformMode::identity;
  throw Error(Errc::InvalidArgument, "unknown transform mode '" + std::string(text) + "'");
}

CovarianceEstimate ledoit_wolf_covariance(const Matrix& samples) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < 2) throw Error(Errc::Precondition, "Ledoit-Wolf needs at least 2 samples");
  if (d < 1) throw Error(Errc::Precondition, "Ledoit-Wolf needs at least 1 dimension");
  if (!samples.allFinite()) throw Error(Errc::NonFiniteEntry, "samples contain NaN or Inf");

  const Vector mean = reductions::column_mean(samples);
  const Matrix centered = samples.rowwise() - mean.transpose();
  const double nd = static_cast<double>(n);
  const double dd = static_cast<double>(d);

  Matrix s = reductions::gram(centered) / nd;
  const double mu = s.trace() / dd;
  Matrix target_gap = s;
  target_gap.diagonal().array() -= mu;
  const double delta2 = target_gap.squaredNorm() / dd;

  CovarianceEstimate out;
  out.sample_count = n;
  if (delta2 <= 0.0) {
    // S already equals mu I; shrinkage is a no-op.
    out.shrinkage_intensity = 1.0;
    out.matrix = Matrix::Identity(d, d) * (mu > 0.0 ? mu : kDegenerateVariance);
    return out;
  }

  // sum_k ||x_k x_k^T - S||_F^2 = sum_k ||x_k||^4 - n ||S||_F^2
  const double spread = reductions::sum_fourth_power_norms(centered) - nd * s.squaredNorm();
  const double beta2 = std::min(std::max(spread, 0.0) / (nd * nd * dd), delta2);
  const double rho = beta2 / delta2;

  Matrix shrunk = (1.0 - rho) * s;
  shrunk.diagonal().array() += rho * mu;
  out.matrix = 0.5 * (shrunk + shrunk.transpose());
  out.shrinkage_intensity = rho;
  return out;
}

Matrix inverse_sqrt(const CovarianceEstimate& c, double floor_ratio) {
  if (!(floor_ratio > 0.0 && floor_ratio < 1.0))
    throw Error(Errc::InvalidArgument, "floor_ratio must lie in (0, 1)");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(c.matrix));
  if (eig.info() != Eigen::Success) throw Error(Errc::NonPositiveSpectrum, "eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  const double lambda_max = lambda.maxCoeff();
  if (!(lambda_max > 0.0)) throw Error(Errc::NonPositiveSpectrum, "largest eigenvalue is not positive");

  const Vector scale = lambda.cwiseMax(floor_ratio * lambda_max).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd& q = eig.eigenvectors();
  Matrix w = q * scale.asDiagonal() * q.transpose();
  return 0.5 * (w + w.transpose());
}

TransformedUnembedding causal_transform(const UnembeddingMatrix& m, TransformMode mode,
                                        double floor_ratio) {
  m.validate();
  TransformedUnembedding out;
  out.mode = mode;
  out.floor_ratio = floor_ratio;

  switch (mode) {
    case TransformMode::identity:
      out.g = m.data;
      out.mean = Vector::Zero(m.cols());
      return out;
    case TransformMode::center_only:
      out.mean = reductions::column_mean(m.data);
      out.g = m.data.rowwise() - out.mean.transpose();
      return out;
    case TransformMode::causal: {
      if (m.rows() < 2) throw Error(Errc::Precondition, "causal transform needs at least 2 rows");
      out.mean = reductions::column_mean(m.data);
      const CovarianceEstimate cov = ledoit_wolf_covariance(m.data);
      out.shrinkage_intensity = cov.shrinkage_intensity;
      Matrix w = inverse_sqrt(cov, floor_ratio);
      // W is symmetric, so (x - mean) W == (W (x - mean))^T row by row.
      out.g = (m.data.rowwise() - out.mean.transpose()) * w;
      out.whitener = std::move(w);
      return out;
    }
  }
  throw Error(Errc::InvalidArgument, "unknown transform mode");
}

Vector TransformedUnembedding::map_context_vector(const Vector& lambda) const {
  if (!whitener) return lambda;
  // l = W^{-T} lambda; W is symmetric positive definite.
  return whitener->ldlt().solve(lambda);
}

}  // namespace catgeo
