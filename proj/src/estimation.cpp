#include "catgeo/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <thread>
#include <vector>

#include "catgeo/error.hpp"
#include "catgeo/reductions.hpp"

namespace catgeo {

std::string_view to_string(Estimator e) noexcept { return e == Estimator::lda ? "lda" : "mean"; }
std::string_view to_string(TokenScope s) noexcept { return s == TokenScope::all ? "all" : "train"; }

Estimator parse_estimator(std::string_view text) {
  if (text == "lda") return Estimator::lda;
  if (text == "mean") return Estimator::mean;
  throw Error(Errc::InvalidArgument, "unknown estimator '" + std::string(text) + "'");
}

TokenScope parse_scope(std::string_view text) {
  if (text == "all") return TokenScope::all;
  if (text == "train") return TokenScope::train;
  throw Error(Errc::InvalidArgument, "unknown token scope '" + std::string(text) + "'");
}

const ConceptVector& ConceptVectorSet::at(std::string_view id) const {
  auto it = vectors.find(std::string(id));
  if (it == vectors.end()) throw Error(Errc::UnknownId, "no vector for '" + std::string(id) + "'");
  return it->second;
}

namespace {

Matrix gather_rows(const Matrix& g, std::span<const std::int64_t> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), g.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto r = ids[i];
    if (r < 0 || r >= g.rows())
      throw Error(Errc::TokenOutOfRange, "token " + std::to_string(r) + " outside the matrix");
    out.row(static_cast<Eigen::Index>(i)) = g.row(r);
  }
  return out;
}

// Zero-variance sample sets fall back to this isotropic level (matches the
// covariance floor in ledoit_wolf_covariance).
constexpr double kDegenerateVariance = 1e-12;

}  // namespace

namespace detail {

Vector lda_solve_dense(const Matrix& samples) {
  const Vector mean = reductions::column_mean(samples);
  const CovarianceEstimate cov = ledoit_wolf_covariance(samples);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(cov.matrix));
  const Vector& lambda = eig.eigenvalues();
  const double cutoff = kPinvRelativeTolerance * lambda.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) > cutoff) inv(i) = 1.0 / lambda(i);
  const Eigen::MatrixXd& q = eig.eigenvectors();
  return q * inv.asDiagonal() * (q.transpose() * mean);
}

Vector lda_solve_lowrank(const Matrix& samples) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < 2) throw Error(Errc::Precondition, "Ledoit-Wolf needs at least 2 samples");
  const double nd = static_cast<double>(n);
  const double dd = static_cast<double>(d);

  const Vector mean = reductions::column_mean(samples);
  const Matrix centered = samples.rowwise() - mean.transpose();
  // K shares its nonzero spectrum with S = X^T X / n.
  const Eigen::MatrixXd k = (centered * centered.transpose()) / nd;
  const double trace = k.trace();
  const double mu = trace / dd;
  const double s_norm2 = k.squaredNorm();
  const double delta2 = (s_norm2 - 2.0 * mu * trace + mu * mu * dd) / dd;

  if (!(delta2 > 0.0)) return mean / (mu > 0.0 ? mu : kDegenerateVariance);

  double fourth = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) fourth += (nd * k(i, i)) * (nd * k(i, i));
  const double beta2 = std::min(std::max(fourth - nd * s_norm2, 0.0) / (nd * nd * dd), delta2);
  const double rho = beta2 / delta2;
  const double floor = rho * mu;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  const Vector& lambda = eig.eigenvalues();
  const double lambda_top = std::max(lambda.maxCoeff(), 0.0);
  const double shrunk_max = floor + (1.0 - rho) * lambda_top;
  const double cutoff = kPinvRelativeTolerance * shrunk_max;

  // Eigenvectors of S inside the sample span: X^T v / sqrt(n lambda).
  Vector result = Vector::Zero(d);
  Vector in_span = Vector::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lambda(i) > 1e-13 * lambda_top)) continue;
    Vector e = centered.transpose() * eig.eigenvectors().col(i);
    e /= std::sqrt(nd * lambda(i));
    const double coef = e.dot(mean);
    in_span += coef * e;
    const double shrunk = floor + (1.0 - rho) * lambda(i);
    if (shrunk > cutoff) result += (coef / shrunk) * e;
  }
  if (floor > cutoff) result += (mean - in_span) / floor;
  return result;
}

}  // namespace detail

ConceptVector estimate_lda(const Matrix& g, std::span<const std::int64_t> token_ids,
                           std::string concept_id) {
  if (token_ids.size() < 2)
    throw Error(Errc::TooFewTokens, concept_id + ": LDA needs at least 2 tokens, got " +
                                        std::to_string(token_ids.size()));
  const Matrix samples = gather_rows(g, token_ids);
  if (!samples.allFinite()) throw Error(Errc::NonFiniteEntry, concept_id + ": rows contain NaN or Inf");

  const Vector mean = reductions::column_mean(samples);
  const Vector raw = samples.rows() < samples.cols() ? detail::lda_solve_lowrank(samples)
                                                     : detail::lda_solve_dense(samples);
  const double raw_norm = raw.norm();
  if (!(raw_norm >= 1e-12))
    throw Error(Errc::DegenerateDirection, concept_id + ": Cov^+ E(g_w) vanishes");

  const Vector direction = raw / raw_norm;
  ConceptVector out;
  out.concept_id = std::move(concept_id);
  out.magnitude = direction.dot(mean);
  out.vector = out.magnitude * direction;
  out.estimator = Estimator::lda;
  out.negative_magnitude = out.magnitude < 0.0;
  out.zero_vector = out.magnitude == 0.0;
  return out;
}

ConceptVector estimate_mean(const Matrix& g, std::span<const std::int64_t> token_ids,
                            std::string concept_id) {
  if (token_ids.empty()) throw Error(Errc::TooFewTokens, concept_id + ": no tokens");
  ConceptVector out;
  out.concept_id = std::move(concept_id);
  out.vector = reductions::column_mean(gather_rows(g, token_ids));
  out.magnitude = out.vector.norm();
  out.estimator = Estimator::mean;
  out.zero_vector = out.magnitude == 0.0;
  return out;
}

ConceptVectorSet estimate_all(const ConceptHierarchy& h, const TransformedUnembedding& g,
                              const EstimateOptions& options) {
  if (options.scope == TokenScope::train && !h.has_split())
    throw Error(Errc::Precondition, "train scope requires a split hierarchy");

  const std::vector<std::string> ids = h.ids();
  std::vector<std::optional<ConceptVector>> results(ids.size());
  std::vector<std::string> failures(ids.size());

  auto work = [&](std::size_t i) {
    const ConceptNode& node = h.nodes.at(ids[i]);
    const IndexSet& tokens = options.scope == TokenScope::all ? node.token_ids : *node.train_ids;
    try {
      ConceptVector v = options.method == Estimator::lda ? estimate_lda(g.g, tokens, ids[i])
                                                         : estimate_mean(g.g, tokens, ids[i]);
      v.token_scope = options.scope;
      results[i] = std::move(v);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(ids.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < ids.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < ids.size(); i = next++) work(i);
      });
  }

  ConceptVectorSet out;
  out.transform_mode = g.mode;
  out.dim = g.dim();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (results[i]) out.vectors.emplace(ids[i], std::move(*results[i]));
    else out.errors.emplace(ids[i], failures[i]);
  }
  return out;
}

Vector contrast_vector(const ConceptVectorSet& set, std::string_view w0, std::string_view w1) {
  return set.at(w1).vector - set.at(w0).vector;
}

}  // namespace catgeo
