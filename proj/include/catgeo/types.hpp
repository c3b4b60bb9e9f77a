#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace catgeo {

// Rows are tokens; row-major keeps a token's coordinates contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using IndexSet = std::vector<std::int64_t>;

}  // namespace catgeo
