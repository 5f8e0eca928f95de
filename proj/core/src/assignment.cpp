#include "mdpn/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "mdpn/error.hpp"

namespace mdpn {
namespace {

void check_finite(const CostMatrix& cost) {
  for (double v : cost.data()) {
    if (!std::isfinite(v)) throw Error("assignment costs must be finite");
  }
}

// rows <= cols. Returns column per row.
std::vector<int> hungarian_wide(std::size_t n, std::size_t m,
                                const auto& at /* (row, col) -> double */) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] = row matched to column j, 0 = none.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, Assignment::kUnassigned);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  }
  return row_to_col;
}

}  // namespace

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw Error("cost matrix data size mismatch");
}

std::size_t Assignment::matched() const noexcept {
  return static_cast<std::size_t>(std::count_if(row_to_col.begin(), row_to_col.end(),
                                                [](int c) { return c != kUnassigned; }));
}

double Assignment::total_cost(const CostMatrix& cost) const {
  double total = 0.0;
  for (std::size_t r = 0; r < row_to_col.size(); ++r) {
    if (row_to_col[r] != kUnassigned) total += cost(r, static_cast<std::size_t>(row_to_col[r]));
  }
  return total;
}

Assignment solve_hungarian(const CostMatrix& cost) {
  check_finite(cost);
  Assignment out;
  const std::size_t R = cost.rows();
  const std::size_t C = cost.cols();
  out.row_to_col.assign(R, Assignment::kUnassigned);
  if (R == 0 || C == 0) return out;
  if (R <= C) {
    out.row_to_col = hungarian_wide(R, C, [&](std::size_t r, std::size_t c) { return cost(r, c); });
  } else {
    const auto col_to_row =
        hungarian_wide(C, R, [&](std::size_t c, std::size_t r) { return cost(r, c); });
    for (std::size_t c = 0; c < C; ++c) {
      out.row_to_col[static_cast<std::size_t>(col_to_row[c])] = static_cast<int>(c);
    }
  }
  return out;
}

Assignment solve_greedy(const CostMatrix& cost) {
  check_finite(cost);
  const std::size_t R = cost.rows();
  const std::size_t C = cost.cols();
  std::vector<std::size_t> cells(R * C);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  std::sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) {
    return std::tuple(cost.data()[a], a) < std::tuple(cost.data()[b], b);
  });
  Assignment out;
  out.row_to_col.assign(R, Assignment::kUnassigned);
  std::vector<char> col_used(C, 0);
  std::size_t remaining = std::min(R, C);
  for (std::size_t cell : cells) {
    if (remaining == 0) break;
    const std::size_t r = cell / C;
    const std::size_t c = cell % C;
    if (out.row_to_col[r] != Assignment::kUnassigned || col_used[c]) continue;
    out.row_to_col[r] = static_cast<int>(c);
    col_used[c] = 1;
    --remaining;
  }
  return out;
}

}  // namespace mdpn
