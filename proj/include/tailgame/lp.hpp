#pragma once

#include <vector>

#include "tailgame/game_core.hpp"

namespace tailgame {

/// Dense row-major matrix, rows x cols.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

/// Simplex solver for max c'x subject to Ax <= b, x >= 0 (two-phase, dense).
/// Returns the objective value; -inf if infeasible, +inf if unbounded.
double simplex_solve(const std::vector<std::vector<double>>& A,
                     const std::vector<double>& b, const std::vector<double>& c,
                     std::vector<double>& x);

struct MatrixGameSolution {
  double value = 0.0;
  MixedAction row;  // maximizer's optimal mixed action
  MixedAction col;  // minimizer's optimal mixed action
};

/// Exact value and optimal strategies of the zero-sum matrix game where the
/// row player maximizes M[r][c]. Solves both sides' LPs and cross-checks the
/// values to 1e-9.
MatrixGameSolution solve_matrix_game(const Mat& m);

}  // namespace tailgame
