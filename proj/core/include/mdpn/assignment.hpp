#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mdpn {

// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Assignment {
  static constexpr int kUnassigned = -1;

  // Column assigned to each row, or kUnassigned.
  std::vector<int> row_to_col;

  std::size_t matched() const noexcept;
  double total_cost(const CostMatrix& cost) const;
};

// Minimum-cost matching of size min(rows, cols) (Kuhn-Munkres with
// potentials, O(n^2 m)). Candidate columns are scanned in increasing index
// so equal-cost alternatives resolve deterministically. Throws mdpn::Error on
// non-finite costs.
Assignment solve_hungarian(const CostMatrix& cost);

// Repeatedly takes the globally cheapest remaining cell, ties by (row, col).
Assignment solve_greedy(const CostMatrix& cost);

}  // namespace mdpn
