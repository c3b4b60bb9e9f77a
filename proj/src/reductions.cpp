#include "catgeo/reductions.hpp"

#include <cmath>

namespace catgeo::reductions {

namespace {

constexpr Eigen::Index kLeafRows = 256;

Vector column_sum(const Matrix& rows, Eigen::Index begin, Eigen::Index end) {
  if (end - begin <= kLeafRows) {
    Vector acc = Vector::Zero(rows.cols());
    for (Eigen::Index i = begin; i < end; ++i) acc += rows.row(i).transpose();
    return acc;
  }
  const Eigen::Index mid = begin + (end - begin) / 2;
  return column_sum(rows, begin, mid) + column_sum(rows, mid, end);
}

Matrix gram_sum(const Matrix& rows, Eigen::Index begin, Eigen::Index end) {
  if (end - begin <= 4 * kLeafRows) {
    const auto block = rows.middleRows(begin, end - begin);
    Matrix g = Matrix::Zero(rows.cols(), rows.cols());
    g.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
    return g.selfadjointView<Eigen::Lower>();
  }
  const Eigen::Index mid = begin + (end - begin) / 2;
  return gram_sum(rows, begin, mid) + gram_sum(rows, mid, end);
}

double fourth_sum(const Matrix& rows, Eigen::Index begin, Eigen::Index end) {
  if (end - begin <= kLeafRows) {
    double acc = 0.0;
    for (Eigen::Index i = begin; i < end; ++i) {
      const double sq = rows.row(i).squaredNorm();
      acc += sq * sq;
    }
    return acc;
  }
  const Eigen::Index mid = begin + (end - begin) / 2;
  return fourth_sum(rows, begin, mid) + fourth_sum(rows, mid, end);
}

double scalar_sum(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  if (end - begin <= static_cast<std::size_t>(kLeafRows)) {
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += v[i];
    return acc;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  return scalar_sum(v, begin, mid) + scalar_sum(v, mid, end);
}

}  // namespace

Vector column_mean(const Matrix& rows) {
  if (rows.rows() == 0) return Vector::Zero(rows.cols());
  return column_sum(rows, 0, rows.rows()) / static_cast<double>(rows.rows());
}

Matrix gram(const Matrix& rows) {
  if (rows.rows() == 0) return Matrix::Zero(rows.cols(), rows.cols());
  return gram_sum(rows, 0, rows.rows());
}

double sum_fourth_power_norms(const Matrix& rows) {
  if (rows.rows() == 0) return 0.0;
  return fourth_sum(rows, 0, rows.rows());
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = scalar_sum(values, 0, values.size()) / n;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
  return {mean, std::sqrt(scalar_sum(sq, 0, sq.size()) / n)};
}

}  // namespace catgeo::reductions
