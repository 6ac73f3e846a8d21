#include "tailgame/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace tailgame {

namespace {

constexpr double kEps = 1e-10;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Two-phase dense simplex in the KACTL arrangement: Bland-style lexicographic
// tie-breaking on (coefficient, index) keeps it cycle-free in practice.
class Simplex {
public:
  Simplex(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
          const std::vector<double>& c)
      : m_(static_cast<int>(b.size())),
        n_(static_cast<int>(c.size())),
        basis_n_(n_ + 1),
        basis_b_(m_),
        d_(static_cast<std::size_t>(m_) + 2,
           std::vector<double>(static_cast<std::size_t>(n_) + 2)) {
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j) d_[i][j] = A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (int i = 0; i < m_; ++i) {
      basis_b_[i] = n_ + i;
      d_[i][n_] = -1;
      d_[i][n_ + 1] = b[static_cast<std::size_t>(i)];
    }
    for (int j = 0; j < n_; ++j) {
      basis_n_[j] = j;
      d_[m_][j] = -c[static_cast<std::size_t>(j)];
    }
    basis_n_[n_] = -1;
    d_[m_ + 1][n_] = 1;
  }

  double solve(std::vector<double>& x) {
    int r = 0;
    for (int i = 1; i < m_; ++i)
      if (d_[i][n_ + 1] < d_[r][n_ + 1]) r = i;
    if (d_[r][n_ + 1] < -kEps) {
      pivot(r, n_);
      if (!run(2) || d_[m_ + 1][n_ + 1] < -kEps) return -kInf;
      for (int i = 0; i < m_; ++i)
        if (basis_b_[i] == -1) {
          int s = 0;
          for (int j = 1; j <= n_; ++j)
            if (better(i, j, s)) s = j;
          pivot(i, s);
        }
    }
    bool ok = run(1);
    x.assign(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < m_; ++i)
      if (basis_b_[i] < n_) x[static_cast<std::size_t>(basis_b_[i])] = d_[i][n_ + 1];
    return ok ? d_[m_][n_ + 1] : kInf;
  }

private:
  bool better(int row, int j, int s) const {
    return std::make_pair(d_[row][j], basis_n_[j]) <
           std::make_pair(d_[row][s], basis_n_[s]);
  }

  void pivot(int r, int s) {
    double* a = d_[static_cast<std::size_t>(r)].data();
    double inv = 1.0 / a[s];
    for (int i = 0; i < m_ + 2; ++i) {
      if (i == r || std::fabs(d_[i][s]) <= kEps) continue;
      double* b = d_[static_cast<std::size_t>(i)].data();
      double inv2 = b[s] * inv;
      for (int j = 0; j < n_ + 2; ++j) b[j] -= a[j] * inv2;
      b[s] = a[s] * inv2;
    }
    for (int j = 0; j < n_ + 2; ++j)
      if (j != s) d_[r][j] *= inv;
    for (int i = 0; i < m_ + 2; ++i)
      if (i != r) d_[i][s] *= -inv;
    d_[r][s] = inv;
    std::swap(basis_b_[r], basis_n_[s]);
  }

  bool run(int phase) {
    int x = m_ + phase - 1;
    for (;;) {
      int s = -1;
      for (int j = 0; j <= n_; ++j) {
        if (basis_n_[j] == -phase) continue;
        if (s == -1 || better(x, j, s)) s = j;
      }
      if (d_[x][s] >= -kEps) return true;
      int r = -1;
      for (int i = 0; i < m_; ++i) {
        if (d_[i][s] <= kEps) continue;
        if (r == -1 ||
            std::make_pair(d_[i][n_ + 1] / d_[i][s], basis_b_[i]) <
                std::make_pair(d_[r][n_ + 1] / d_[r][s], basis_b_[r]))
          r = i;
      }
      if (r == -1) return false;
      pivot(r, s);
    }
  }

  int m_, n_;
  std::vector<int> basis_n_, basis_b_;
  std::vector<std::vector<double>> d_;
};

MixedAction normalized(std::vector<double> w) {
  double s = 0.0;
  for (double& v : w) {
    if (v < 0.0) v = 0.0;  // clear simplex noise
    s += v;
  }
  if (s <= 0.0) throw std::logic_error("degenerate matrix game strategy");
  for (double& v : w) v /= s;
  // nudge the largest entry so the total is exactly 1 after rounding
  double total = 0.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    total += w[i];
    if (w[i] > w[arg]) arg = i;
  }
  w[arg] += 1.0 - total;
  return MixedAction(std::move(w));
}

}  // namespace

double simplex_solve(const std::vector<std::vector<double>>& A,
                     const std::vector<double>& b, const std::vector<double>& c,
                     std::vector<double>& x) {
  return Simplex(A, b, c).solve(x);
}

MatrixGameSolution solve_matrix_game(const Mat& m) {
  if (m.rows < 1 || m.cols < 1) throw ValidationError("matrix game needs entries");

  // Shift all entries to >= 1 so the value is positive.
  double lo = m.data[0];
  for (double v : m.data) lo = std::min(lo, v);
  const double shift = 1.0 - lo;

  // Column player: max sum(w), M_s w <= 1, w >= 0; value = 1 / sum(w).
  std::vector<std::vector<double>> a_col(
      static_cast<std::size_t>(m.rows),
      std::vector<double>(static_cast<std::size_t>(m.cols)));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) a_col[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = m.at(r, c) + shift;
  std::vector<double> w;
  double col_obj = simplex_solve(
      a_col, std::vector<double>(static_cast<std::size_t>(m.rows), 1.0),
      std::vector<double>(static_cast<std::size_t>(m.cols), 1.0), w);

  // Row player: min sum(u), M_s' u >= 1  ==  max -sum(u), -M_s' u <= -1.
  std::vector<std::vector<double>> a_row(
      static_cast<std::size_t>(m.cols),
      std::vector<double>(static_cast<std::size_t>(m.rows)));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) a_row[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] = -(m.at(r, c) + shift);
  std::vector<double> u;
  double row_obj = simplex_solve(
      a_row, std::vector<double>(static_cast<std::size_t>(m.cols), -1.0),
      std::vector<double>(static_cast<std::size_t>(m.rows), -1.0), u);

  if (!std::isfinite(col_obj) || !std::isfinite(row_obj))
    throw std::logic_error("matrix game LP did not solve");
  const double v_col = 1.0 / col_obj;
  const double v_row = 1.0 / (-row_obj);
  if (std::fabs(v_col - v_row) > 1e-9)
    throw std::logic_error("matrix game duality gap " + to_dec12(v_col - v_row));

  MatrixGameSolution sol;
  sol.value = 0.5 * (v_col + v_row) - shift;
  sol.row = normalized(std::move(u));
  sol.col = normalized(std::move(w));
  return sol;
}

}  // namespace tailgame
