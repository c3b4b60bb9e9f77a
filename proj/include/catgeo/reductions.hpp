#pragma once

#include <utility>
#include <vector>

#include "catgeo/types.hpp"

// Row reductions use pairwise summation over row blocks so the result is
// accurate over hundreds of thousands of rows and independent of threading.
namespace catgeo::reductions {

Vector column_mean(const Matrix& rows);

/// Sum over rows of x x^T for the given (already centered) rows.
Matrix gram(const Matrix& rows);

/// Sum over rows of ||x||^4.
double sum_fourth_power_norms(const Matrix& rows);

/// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

}  // namespace catgeo::reductions
