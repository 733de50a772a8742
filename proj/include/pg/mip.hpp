#pragma once
// Exact solver for the grade-explanation program: pick per-grader weights
// close to desired ones and integer grades per component so that each grade
// is a rounded weighted average of the reports, maximizing posterior interval
// mass minus a weight-deviation penalty. Solved exactly by enumerating
// weight-support patterns and candidate grade vectors, with a dense-simplex
// LP minimizing the deviation for each candidate.

#include <span>
#include <string>
#include <vector>

#include "pg/core.hpp"
#include "pg/posterior.hpp"

namespace pg {

struct MipConstants {
  double max_shift = 0.09;    // S: max |w - d| per grader
  double min_weight = 0.1;    // T: smallest allowed nonzero weight
  double penalty = 0.01;      // P: objective cost per unit of total deviation
};

struct MipInstance {
  std::vector<std::string> grader_ids;      // optional labels, size n or empty
  std::vector<std::vector<int>> reports;    // [grader][component]
  std::vector<std::vector<double>> masses;  // [component][grade-domain index]
  std::vector<double> desired;              // per grader, sums to 1
  std::vector<int> grade_domain;
  MipConstants constants;
};

enum class MipStatus { Optimal, Infeasible };

struct MipSolution {
  MipStatus status = MipStatus::Infeasible;
  std::vector<double> weights;
  std::vector<int> grades;        // grade values per component
  std::vector<double> slacks;     // grade - weighted average, in [-0.5, 0.5]
  std::vector<double> dev_pos, dev_neg;
  double objective = 0.0;
  double total_deviation = 0.0;
};

// d_v proportional to reliability * effort, normalized. Throws when every
// product is zero.
std::vector<double> desired_weights(std::span<const double> reliability,
                                    std::span<const double> effort);

// Exhaustive optimum with deterministic tie-breaking: higher objective, then
// smaller total deviation, then lexicographically smaller grade vector.
// Throws for more than 8 graders.
MipSolution solve(const MipInstance& instance);

struct Explanation {
  std::string submission_id;
  std::vector<std::string> grader_ids;
  MipSolution solution;
  std::vector<int> map_grades;
};

struct ExplainReport {
  std::vector<Explanation> items;
  // fraction of components where the explained grade differs from MAP
  double map_disagreement = 0.0;
};

ExplainReport explain_all(const PosteriorSummary& summary, const IndexedDataset& data,
                          const MipConstants& constants);

}  // namespace pg
