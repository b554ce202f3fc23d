#include "codekg/assignment.hpp"

#include <algorithm>
#include <limits>

namespace codekg {

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights) {
  const int rows = static_cast<int>(weights.size());
  int cols = 0;
  for (const auto& r : weights) cols = std::max(cols, static_cast<int>(r.size()));
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);

  double wmax = 0;
  for (const auto& r : weights) {
    for (double w : r) wmax = std::max(wmax, w);
  }
  // Square cost matrix, 1-indexed, minimising (wmax - w).
  const int n = std::max(rows, cols);
  auto cost = [&](int i, int j) {
    double w = 0;
    if (i < rows && j < static_cast<int>(weights[i].size())) w = weights[i][j];
    return wmax - w;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
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
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> out(rows, -1);
  for (int j = 1; j <= n; ++j) {
    int i = p[j] - 1;
    if (i >= 0 && i < rows && j - 1 < static_cast<int>(weights[i].size())) out[i] = j - 1;
  }
  return out;
}

double assignment_weight(const std::vector<std::vector<double>>& weights,
                         const std::vector<int>& assignment) {
  double total = 0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= 0) total += weights[i][assignment[i]];
  }
  return total;
}

namespace {

// Vector of per-level counts, compared lexicographically (level 0 most
// significant). Used as the weight group of the Hungarian method below.
struct LexVec {
  std::vector<long long> c;

  LexVec& operator+=(const LexVec& o) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
    return *this;
  }
  LexVec& operator-=(const LexVec& o) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= o.c[i];
    return *this;
  }
  bool operator<(const LexVec& o) const { return c < o.c; }
};

// Maximum-weight assignment where pair (i, j) weighs one unit at level
// level[i][j] (-1 for no edge). Maximizes the per-level counts
// lexicographically. rows <= cols.
std::vector<int> lex_max_assignment(const std::vector<std::vector<int>>& level, std::size_t levels,
                                    std::size_t cols) {
  const std::size_t n = level.size(), m = cols;
  const LexVec zero{std::vector<long long>(levels, 0)};
  std::vector<std::vector<LexVec>> cost(n + 1, std::vector<LexVec>(m + 1, zero));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (level[i][j] >= 0) cost[i + 1][j + 1].c[static_cast<std::size_t>(level[i][j])] = -1;
    }
  }
  std::vector<LexVec> u(n + 1, zero), v(m + 1, zero);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<LexVec> minv(m + 1, zero);
    std::vector<bool> finite(m + 1, false), used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      LexVec delta = zero;
      bool have_delta = false;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        LexVec cur = cost[i0][j];
        cur -= u[i0];
        cur -= v[j];
        if (!finite[j] || cur < minv[j]) {
          minv[j] = cur;
          finite[j] = true;
          way[j] = j0;
        }
        if (!have_delta || minv[j] < delta) {
          delta = minv[j];
          have_delta = true;
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
  std::vector<int> out(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0 && level[p[j] - 1][j - 1] >= 0) out[p[j] - 1] = static_cast<int>(j - 1);
  }
  return out;
}

constexpr double kTieTolerance = 1e-12;

}  // namespace

std::vector<ScoredPair> greedy_match(std::vector<ScoredPair> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });
  bool ties = false;
  for (std::size_t k = 1; k < candidates.size() && !ties; ++k) {
    ties = candidates[k - 1].score - candidates[k].score <= kTieTolerance;
  }
  std::vector<ScoredPair> out;
  if (!ties) {
    std::vector<std::size_t> rows, cols;
    for (const auto& c : candidates) {
      if (std::find(rows.begin(), rows.end(), c.row) != rows.end()) continue;
      if (std::find(cols.begin(), cols.end(), c.col) != cols.end()) continue;
      rows.push_back(c.row);
      cols.push_back(c.col);
      out.push_back(c);
    }
    return out;
  }

  // Tied scores: taking the first tied pair can block a better completion, so
  // solve for the lexicographically largest sorted score vector exactly.
  std::vector<int> level_of(candidates.size());
  int levels = 0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (k > 0 && candidates[k - 1].score - candidates[k].score > kTieTolerance) ++levels;
    level_of[k] = levels;
  }
  std::vector<std::size_t> row_ids, col_ids;
  for (const auto& c : candidates) {
    row_ids.push_back(c.row);
    col_ids.push_back(c.col);
  }
  std::sort(row_ids.begin(), row_ids.end());
  row_ids.erase(std::unique(row_ids.begin(), row_ids.end()), row_ids.end());
  std::sort(col_ids.begin(), col_ids.end());
  col_ids.erase(std::unique(col_ids.begin(), col_ids.end()), col_ids.end());
  auto index_in = [](const std::vector<std::size_t>& ids, std::size_t x) {
    return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), x) - ids.begin());
  };
  const bool transpose = row_ids.size() > col_ids.size();
  const std::size_t n = transpose ? col_ids.size() : row_ids.size();
  const std::size_t m = transpose ? row_ids.size() : col_ids.size();
  std::vector<std::vector<int>> level(n, std::vector<int>(m, -1));
  std::vector<std::vector<std::size_t>> which(n, std::vector<std::size_t>(m, 0));
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    std::size_t r = index_in(row_ids, candidates[k].row), c = index_in(col_ids, candidates[k].col);
    if (transpose) std::swap(r, c);
    if (level[r][c] < 0) {
      level[r][c] = level_of[k];
      which[r][c] = k;
    }
  }
  auto assignment = lex_max_assignment(level, static_cast<std::size_t>(levels + 1), m);
  for (std::size_t r = 0; r < n; ++r) {
    if (assignment[r] >= 0) out.push_back(candidates[which[r][static_cast<std::size_t>(assignment[r])]]);
  }
  std::sort(out.begin(), out.end(), [](const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });
  return out;
}

}  // namespace codekg
