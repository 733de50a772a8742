#pragma once
// Small dense two-phase simplex for the MIP explainer's inner linear
// programs. Bland's rule throughout, so degenerate pivots cannot cycle.

#include <vector>

namespace pg {

enum class LpConstraint { LessEqual, Equal };

// minimize cost . x  subject to  rows[i] . x (<=|=) rhs[i],  x >= 0
struct LpProblem {
  int n_vars = 0;
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  std::vector<LpConstraint> kind;
  std::vector<double> cost;

  void add_le(std::vector<double> row, double b);
  void add_eq(std::vector<double> row, double b);
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

LpResult solve_lp(const LpProblem& problem);

}  // namespace pg
