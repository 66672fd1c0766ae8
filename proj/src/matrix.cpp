#include "cot/matrix.hpp"

#include <numeric>

namespace cot {

std::vector<double> Matrix::row_sums() const {
  std::vector<double> out(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto r = row(i);
    out[i] = std::accumulate(r.begin(), r.end(), 0.0);
  }
  return out;
}

std::vector<double> Matrix::col_sums() const {
  std::vector<double> out(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out[j] += (*this)(i, j);
  return out;
}

double Matrix::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

}  // namespace cot
