#include "pg/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pg {

namespace {
constexpr double kEps = 1e-9;
}

void LpProblem::add_le(std::vector<double> row, double b) {
  rows.push_back(std::move(row));
  rhs.push_back(b);
  kind.push_back(LpConstraint::LessEqual);
}

void LpProblem::add_eq(std::vector<double> row, double b) {
  rows.push_back(std::move(row));
  rhs.push_back(b);
  kind.push_back(LpConstraint::Equal);
}

LpResult solve_lp(const LpProblem& problem) {
  const int n = problem.n_vars;
  const int m = static_cast<int>(problem.rows.size());
  for (const auto& row : problem.rows)
    if (static_cast<int>(row.size()) != n) throw std::invalid_argument("solve_lp: row width mismatch");

  // Normalize to rhs >= 0; "<=" rows with negative rhs flip into ">=" rows,
  // which (like equalities) need an artificial variable.
  struct Row {
    std::vector<double> a;
    double b;
    bool needs_artificial;
    bool has_slack;
    double slack_sign;
  };
  std::vector<Row> rows(m);
  for (int i = 0; i < m; ++i) {
    Row& r = rows[i];
    r.a = problem.rows[i];
    r.b = problem.rhs[i];
    bool ge = false;
    if (r.b < 0) {
      for (double& v : r.a) v = -v;
      r.b = -r.b;
      if (problem.kind[i] == LpConstraint::LessEqual) ge = true;
    }
    if (problem.kind[i] == LpConstraint::Equal) {
      r.has_slack = false;
      r.slack_sign = 0;
      r.needs_artificial = true;
    } else if (ge) {
      r.has_slack = true;
      r.slack_sign = -1.0;  // surplus
      r.needs_artificial = true;
    } else {
      r.has_slack = true;
      r.slack_sign = 1.0;
      r.needs_artificial = false;
    }
  }

  int n_slack = 0, n_art = 0;
  for (const Row& r : rows) {
    if (r.has_slack) ++n_slack;
    if (r.needs_artificial) ++n_art;
  }
  const int total = n + n_slack + n_art;

  // tableau: m rows + objective row; columns: vars, slacks, artificials, rhs
  std::vector<std::vector<double>> T(m + 1, std::vector<double>(total + 1, 0.0));
  std::vector<int> basis(m, -1);
  int slack_at = n, art_at = n + n_slack;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) T[i][j] = rows[i].a[j];
    T[i][total] = rows[i].b;
    if (rows[i].has_slack) {
      T[i][slack_at] = rows[i].slack_sign;
      if (!rows[i].needs_artificial) basis[i] = slack_at;
      ++slack_at;
    }
    if (rows[i].needs_artificial) {
      T[i][art_at] = 1.0;
      basis[i] = art_at;
      ++art_at;
    }
  }

  auto pivot = [&](int prow, int pcol) {
    const double pv = T[prow][pcol];
    for (int j = 0; j <= total; ++j) T[prow][j] /= pv;
    for (int i = 0; i <= m; ++i) {
      if (i == prow) continue;
      const double f = T[i][pcol];
      if (f == 0.0) continue;
      for (int j = 0; j <= total; ++j) T[i][j] -= f * T[prow][j];
    }
    basis[prow] = pcol;
  };

  // Bland's rule: entering = lowest-index column with negative reduced cost;
  // leaving = min ratio, ties by lowest basic variable index.
  auto iterate = [&](int active_cols) -> bool {
    for (;;) {
      int pcol = -1;
      for (int j = 0; j < active_cols; ++j) {
        if (T[m][j] < -kEps) {
          pcol = j;
          break;
        }
      }
      if (pcol < 0) return true;  // optimal
      int prow = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (T[i][pcol] > kEps) {
          const double ratio = T[i][total] / T[i][pcol];
          if (ratio < best - kEps || (ratio < best + kEps && (prow < 0 || basis[i] < basis[prow]))) {
            best = ratio;
            prow = i;
          }
        }
      }
      if (prow < 0) return false;  // unbounded
      pivot(prow, pcol);
    }
  };

  LpResult result;

  if (n_art > 0) {
    // phase 1: minimize the artificial sum
    for (int j = 0; j <= total; ++j) {
      double s = 0.0;
      for (int i = 0; i < m; ++i)
        if (basis[i] >= n + n_slack) s += T[i][j];
      T[m][j] = -s;
    }
    for (int i = 0; i < m; ++i)
      if (basis[i] >= n + n_slack) T[m][basis[i]] = 0.0;
    if (!iterate(n + n_slack)) return result;  // phase 1 cannot be unbounded; defensive
    if (T[m][total] < -1e-7) {
      result.status = LpStatus::Infeasible;
      return result;
    }
    // drive leftover artificials out of the basis
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n + n_slack) continue;
      int pcol = -1;
      for (int j = 0; j < n + n_slack; ++j) {
        if (std::fabs(T[i][j]) > kEps) {
          pcol = j;
          break;
        }
      }
      if (pcol >= 0) pivot(i, pcol);
      // else the row is all zeros: redundant constraint, harmless
    }
  }

  // phase 2 objective: reduced costs of the real objective
  for (int j = 0; j <= total; ++j) T[m][j] = 0.0;
  for (int j = 0; j < n; ++j) T[m][j] = problem.cost[j];
  for (int i = 0; i < m; ++i) {
    if (basis[i] < 0 || basis[i] >= n + n_slack) continue;
    const double cb = basis[i] < n ? problem.cost[basis[i]] : 0.0;
    if (cb == 0.0) continue;
    for (int j = 0; j <= total; ++j) T[m][j] -= cb * T[i][j];
  }
  // artificials are fixed at zero; exclude their columns
  if (!iterate(n + n_slack)) {
    result.status = LpStatus::Unbounded;
    return result;
  }

  result.status = LpStatus::Optimal;
  result.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (basis[i] >= 0 && basis[i] < n) result.x[basis[i]] = T[i][total];
  double obj = 0.0;
  for (int j = 0; j < n; ++j) obj += problem.cost[j] * result.x[j];
  result.objective = obj;
  return result;
}

}  // namespace pg
