#pragma once
// Domain types shared by every stage: observed grade records, prior
// hyperparameters, model/sampling configuration, clamp sets, and the dense
// index built from a validated dataset.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace pg {

enum class Role { Student, TA, Instructor };

std::string role_name(Role role);
std::optional<Role> parse_role(const std::string& name);

// One discrete report: grader v gave submission u's component c the grade r.
struct GradeRecord {
  std::string submission_id;
  std::string grader_id;
  int component = 0;
  int reported_grade = 0;
};

struct Dataset {
  std::vector<std::string> submissions;
  std::vector<std::string> graders;
  std::vector<GradeRecord> records;
  // submission -> grader who authored it; optional, required for correlation
  std::map<std::string, std::string> authors;
  // grader -> role; graders absent from the map default to Student
  std::map<std::string, Role> roles;
};

// All prior constants. Precisions (tau) are stored, not standard deviations;
// loaders accept sigma keys and convert.
struct Hyperparameters {
  double mu_s = 4.0;          // prior true-grade mean
  double tau_s = 1.5625;      // prior true-grade precision (sigma_s = 0.8)
  double alpha_tau = 2.0;     // reliability Gamma shape
  double beta_tau = 2.0;      // reliability Gamma rate
  double tau_b = 1.0;         // bias precision (sigma_b = 1)
  double alpha_e = 8.0;       // effort Beta
  double beta_e = 2.0;
  double tau_ell = 1.0;       // low-effort normal precision
  double epsilon = 0.05;      // low-effort uniform mixture weight
  double beta_0 = 1.0;        // correlation strength (correlated variants only)
  double lambda = 1.0;        // reliability scale (correlated variants only)
  int max_grade = 5;
  int components = 4;
  std::vector<int> grade_set{0, 1, 2, 3, 4, 5};

  // throws std::invalid_argument on violated invariants
  void validate() const;
};

inline double tau_from_sigma(double sigma) { return 1.0 / (sigma * sigma); }
inline double sigma_from_tau(double tau) { return 1.0 / std::sqrt(tau); }

// Known presets: "paper-default" (alias "winter21"), "fall18-19", "fall21".
// They share the grade/reliability/effort priors and differ in the bias and
// low-effort precisions. Throws on unknown names.
Hyperparameters preset_hyperparameters(const std::string& name);
std::vector<std::string> preset_names();

struct UniformGrid {
  int count = 0;
  double lo = 0.0;
  double hi = 0.0;

  double at(int i) const { return count <= 1 ? lo : lo + (hi - lo) * i / (count - 1); }
  double step() const { return count <= 1 ? 0.0 : (hi - lo) / (count - 1); }
};

struct GridSpec {
  UniformGrid true_grade{101, 0.0, 6.0};
  UniformGrid reliability{100, 0.1, 10.0};
  UniformGrid bias{61, -3.0, 3.0};
};

struct SamplingPlan {
  int chains = 4;
  int samples = 1100;  // per chain, burn-in included
  int burn_in = 100;
};

struct ModelConfig {
  bool effort_enabled = true;
  bool censoring_enabled = true;
  bool correlation_enabled = false;
  GridSpec grids;
  SamplingPlan sampling;
  std::uint64_t seed = 0;

  void validate() const;
};

// Fixed values for latent variables the sampler must never touch.
struct ClampSet {
  std::map<std::string, double> effort;       // grader -> effort probability
  std::map<std::string, double> reliability;  // grader -> precision
  std::map<std::string, double> bias;         // grader -> offset
};

// Role-driven defaults: TAs and instructors get effort 1, instructors get
// reliability 16. Overridable per grader by merging on top.
ClampSet default_clamps(const Dataset& dataset);

// Returns human-readable invariant violations; empty means the dataset is
// consistent with itself and with hp.grade_set / hp.components.
std::vector<std::string> validate_dataset(const Dataset& dataset, const Hyperparameters& hp);

// Dense-index view used by the engine and downstream consumers. Reports are
// grouped per (submission, grader) pairing; validation guarantees each
// pairing carries all components.
struct Pairing {
  int submission = 0;
  int grader = 0;
  std::vector<int> reports;  // one per component
};

struct IndexedDataset {
  int n_submissions = 0;
  int n_graders = 0;
  int components = 0;
  std::vector<Pairing> pairings;
  std::vector<std::vector<int>> of_submission;  // pairing ids per submission
  std::vector<std::vector<int>> of_grader;      // pairing ids per grader
  std::vector<int> author;                      // grader index per submission, -1 if unknown
  std::vector<Role> role;                       // per grader
  std::vector<std::string> submission_ids;
  std::vector<std::string> grader_ids;
  std::unordered_map<std::string, int> submission_index;
  std::unordered_map<std::string, int> grader_index;

  int n_grade_vars() const { return n_submissions * components; }
  int grade_var(int u, int c) const { return u * components + c; }
};

// Validates and indexes; throws std::invalid_argument listing the violations.
IndexedDataset index_dataset(const Dataset& dataset, const Hyperparameters& hp);

}  // namespace pg
