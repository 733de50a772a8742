#pragma once
// Turns concatenated chain traces into the quantities downstream consumers
// need: per-variable means/quantiles, rubric-cell interval masses, MAP
// grades, and grader rankings.

#include <span>
#include <string>
#include <vector>

#include "pg/core.hpp"
#include "pg/gibbs.hpp"

namespace pg {

struct VarStats {
  double mean = 0.0, sd = 0.0;
  double q05 = 0.0, q10 = 0.0, q50 = 0.0, q90 = 0.0, q95 = 0.0;
};

struct PosteriorSummary {
  int components = 0;
  std::vector<int> grade_set;
  std::vector<std::string> submission_ids;
  std::vector<std::string> grader_ids;
  // per (submission, component), indexed u*components+c
  std::vector<VarStats> true_grade;
  std::vector<std::vector<double>> masses;  // over grade_set cells
  std::vector<int> map_grade;               // grade values
  // per grader
  std::vector<VarStats> reliability, bias, effort_prob;
};

// Quantile by interpolated order statistics, midpoint convention: the k-th of
// n sorted values sits at probability (k - 0.5) / n.
double quantile_sorted(std::span<const double> sorted, double p);

VarStats var_stats(std::vector<double> samples);  // takes a copy; sorts it

// Fraction of samples in each grade's censor interval; boundary cells absorb
// the tails, so the masses always sum to 1.
std::vector<double> interval_masses(std::span<const double> samples, const Hyperparameters& hp);

// Argmax over the grade set, ties broken toward the lower grade.
int map_grade(std::span<const double> masses, const std::vector<int>& grade_set);

PosteriorSummary summarize(const std::vector<SampleTrace>& traces, const IndexedDataset& data,
                           const Hyperparameters& hp);

enum class RankKey { ReliabilityMean, EffortMean, PessimisticReliability, OptimisticReliability };

// Grader ids in descending key order; ties broken by id for determinism.
std::vector<std::string> rank_graders(const PosteriorSummary& summary, RankKey key);

}  // namespace pg
