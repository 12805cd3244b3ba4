#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "mglab/errors.hpp"

namespace mglab {

// Dense row-major matrix, just enough for payoff tables.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Mat m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int i = 0;
    for (const auto& r : rows) {
      int j = 0;
      for (double v : r) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Mat transposed() const {
    Mat t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Mat negated() const {
    Mat n(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) n(i, j) = -(*this)(i, j);
    return n;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Mixed-strategy saddle point of a zero-sum matrix game. The row player
// maximizes, the column player minimizes.
struct MatrixGameSolution {
  std::vector<double> row_policy;
  std::vector<double> col_policy;
  double value = 0.0;
  long iterations = 0;
};

inline double expected_payoff(const Mat& m, const std::vector<double>& row,
                              const std::vector<double>& col) {
  double v = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    if (row[i] == 0.0) continue;
    double inner = 0.0;
    for (int j = 0; j < m.cols(); ++j) inner += m(i, j) * col[j];
    v += row[i] * inner;
  }
  return v;
}

// Best pure row against a fixed column distribution; ties to lowest index.
inline std::pair<int, double> best_response_row(const Mat& m, const std::vector<double>& col_dist) {
  if (static_cast<int>(col_dist.size()) != m.cols())
    throw InputError("best_response_row: column distribution has size " +
                     std::to_string(col_dist.size()) + ", matrix has " +
                     std::to_string(m.cols()) + " columns");
  int best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m.rows(); ++i) {
    double v = 0.0;
    for (int j = 0; j < m.cols(); ++j) v += m(i, j) * col_dist[j];
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  return {best, best_v};
}

// Best pure column (minimizing) against a fixed row distribution.
inline std::pair<int, double> best_response_col(const Mat& m, const std::vector<double>& row_dist) {
  if (static_cast<int>(row_dist.size()) != m.rows())
    throw InputError("best_response_col: row distribution has size " +
                     std::to_string(row_dist.size()) + ", matrix has " +
                     std::to_string(m.rows()) + " rows");
  int best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (int j = 0; j < m.cols(); ++j) {
    double v = 0.0;
    for (int i = 0; i < m.rows(); ++i) v += m(i, j) * row_dist[i];
    if (v < best_v) {
      best_v = v;
      best = j;
    }
  }
  return {best, best_v};
}

// How much each side gains by deviating to its best pure response.
inline std::pair<double, double> exploitability(const Mat& m, const MatrixGameSolution& s) {
  const double row_gain = best_response_row(m, s.col_policy).second - s.value;
  const double col_gain = s.value - best_response_col(m, s.row_policy).second;
  return {row_gain, col_gain};
}

namespace detail {

// Primal simplex for: max 1'z  s.t.  A z <= 1, z >= 0, with A > 0.
// The all-slack basis is feasible, Bland's rule keeps it cycle-free and
// deterministic. On return `z` holds the primal solution and `duals` the
// constraint multipliers read off the objective row.
inline long simplex_column_lp(const Mat& a, std::vector<double>& z, std::vector<double>& duals) {
  const int m = a.rows();
  const int n = a.cols();
  const int width = n + m + 1;  // structural vars, slacks, rhs
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(width, 0.0));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) t[i][j] = a(i, j);
    t[i][n + i] = 1.0;
    t[i][width - 1] = 1.0;
  }
  for (int j = 0; j < n; ++j) t[m][j] = -1.0;  // maximize sum z

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  const double eps = 1e-11;
  const long cap = 200 + 20L * static_cast<long>(m + n) * (m + n);
  long iter = 0;
  while (true) {
    int enter = -1;
    for (int j = 0; j < n + m; ++j) {
      if (t[m][j] < -eps) {  // Bland: first improving column
        enter = j;
        break;
      }
    }
    if (enter < 0) break;

    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      if (t[i][enter] > eps) {
        const double ratio = t[i][width - 1] / t[i][enter];
        if (leave < 0 || ratio < best_ratio - eps ||
            (ratio < best_ratio + eps && basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0)
      throw SolverError("matrix-game LP is unbounded (payoff shift failed)", iter);
    if (++iter > cap)
      throw SolverError("matrix-game LP exceeded iteration cap " + std::to_string(cap), iter);

    const double pivot = t[leave][enter];
    for (int j = 0; j < width; ++j) t[leave][j] /= pivot;
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = t[i][enter];
      if (f == 0.0) continue;
      for (int j = 0; j < width; ++j) t[i][j] -= f * t[leave][j];
    }
    basis[leave] = enter;
  }

  z.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) z[basis[i]] = t[i][width - 1];
  duals.assign(m, 0.0);
  for (int i = 0; i < m; ++i) duals[i] = t[m][n + i];
  return iter;
}

}  // namespace detail

// Saddle point by the standard LP formulation. Payoffs are shifted to be
// strictly positive first (the shift moves the value, not the policies),
// then one simplex solve yields the column strategy as the primal solution
// and the row strategy as the duals.
inline MatrixGameSolution solve_matrix_game(const Mat& m, double tol = 1e-9) {
  if (m.rows() < 1 || m.cols() < 1) throw InputError("solve_matrix_game: empty matrix");
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j)))
        throw InputError("solve_matrix_game: non-finite entry at (" + std::to_string(i) + "," +
                         std::to_string(j) + ")");
      lo = std::min(lo, m(i, j));
    }
  const double shift = 1.0 - lo;
  Mat shifted(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) shifted(i, j) = m(i, j) + shift;

  std::vector<double> z, duals;
  MatrixGameSolution sol;
  sol.iterations = detail::simplex_column_lp(shifted, z, duals);

  double zsum = 0.0, dsum = 0.0;
  for (double v : z) zsum += v;
  for (double v : duals) dsum += v;
  if (zsum <= 0.0 || dsum <= 0.0)
    throw SolverError("matrix-game LP returned a degenerate optimum", sol.iterations);

  sol.col_policy.assign(z.begin(), z.end());
  for (double& v : sol.col_policy) v = std::max(0.0, v / zsum);
  sol.row_policy.assign(duals.begin(), duals.end());
  for (double& v : sol.row_policy) v = std::max(0.0, v / dsum);
  sol.value = 1.0 / zsum - shift;

  const auto [row_gain, col_gain] = exploitability(m, sol);
  if (row_gain > tol || col_gain > tol)
    throw SolverError("matrix-game LP exceeded exploitability tolerance: row " +
                          std::to_string(row_gain) + ", col " + std::to_string(col_gain),
                      sol.iterations);
  return sol;
}

}  // namespace mglab
