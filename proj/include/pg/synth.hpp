#pragma once
// Synthetic classroom generator: draws latent graders and submissions from
// the model's own generating process, builds a random regular review graph,
// and emits censored reports plus the ground truth needed to score recovery.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pg/core.hpp"
#include "pg/distributions.hpp"

namespace pg {

struct ClassSpec {
  int students = 120;
  int weeks = 10;
  int grades_per_submission = 4;       // student graders per submission
  int grades_per_grader_per_week = 4;  // submissions each student grades weekly
  int components = 4;
  int tas = 3;
  double ta_coverage = 0.25;           // fraction of submissions also TA-graded
  double ta_reliability_mean = 2.0;
  double student_reliability_mean = 1.0;
  int calibrations_per_week = 0;       // instructor-graded gold submissions
  Hyperparameters hp;
  std::uint64_t seed = 0;

  void validate() const;
  // weekly submission count implied by the degree constraints
  int submissions_per_week() const { return students * grades_per_grader_per_week / grades_per_submission; }
};

struct ReviewGraph {
  int n_submissions = 0;                           // regular submissions this week
  std::vector<int> author;                         // local submission -> student
  std::vector<std::pair<int, int>> student_pairs;  // (local submission, student)
  std::vector<std::pair<int, int>> ta_pairs;       // (local submission, ta)
};

// Random regular-degree bipartite assignment: every submission gets exactly
// grades_per_submission student graders, every student grades exactly
// grades_per_grader_per_week submissions, nobody grades their own work. TAs
// are layered on top: each submission is TA-graded independently with
// probability ta_coverage.
ReviewGraph assign_review_graph(const ClassSpec& spec, int week, Rng& rng);

struct GroundTruth {
  Dataset dataset;
  std::map<std::string, std::vector<double>> true_grade;  // submission -> per component
  std::map<std::string, double> reliability;
  std::map<std::string, double> bias;
  std::map<std::string, double> effort_prob;
  std::map<std::string, std::map<std::string, int>> effort;  // submission -> grader -> z
};

GroundTruth generate_class(const ClassSpec& spec);

enum class MisspecKnob {
  GradeMean,            // mu_s
  GradeSd,              // sigma_s
  BiasSd,               // sigma_b
  ReliabilityMean,      // alpha_tau/beta_tau, shape held fixed
  ReliabilityVariance,  // alpha_tau/beta_tau^2, mean held fixed
  EffortMean,           // alpha_e/(alpha_e+beta_e), variance held fixed
  LowEffortPrecision,   // tau_ell
};

struct MisspecScenario {
  Hyperparameters generator;
  Hyperparameters inference;
};

// Paired hyperparameter sets for a misspecification run. By default the
// generator keeps the base values and inference uses the altered knob;
// alter_inference=false flips the direction.
MisspecScenario misspec_scenario(const Hyperparameters& base, MisspecKnob knob, double value,
                                 bool alter_inference = true);

}  // namespace pg
