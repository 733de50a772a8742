#pragma once
// Gibbs machinery: censor intervals, the censored-report likelihood, the
// conjugate (uncensored) conditionals, grid approximations for the
// non-conjugate ones, full sweeps honoring clamps and model flags, and
// multi-chain execution with derived seeds.

#include <cstdint>
#include <span>
#include <vector>

#include "pg/core.hpp"
#include "pg/distributions.hpp"

namespace pg {

// Real-valued peer grades in [lo, hi) are reported as the same discrete
// grade. Boundary cells stretch to +/-inf so the report probabilities over
// the grade set always sum to 1.
struct CensorInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Interval of real grades reported as r; r must be in hp.grade_set.
CensorInterval censor_interval(int r, const Hyperparameters& hp);

// n_G: nearest grade in hp.grade_set, half-points rounded up, tails absorbed
// into the boundary grades.
int nearest_grade(double g, const Hyperparameters& hp);

// Probability of the discrete report r given the latent state of one grade.
// effort=true integrates N(s+b, lambda_scale/tau) over the censor interval;
// effort=false integrates the low-effort mixture. lambda_scale is 1 except in
// correlated variants.
double report_likelihood(int r, double s, double tau, double b, bool effort,
                         const Hyperparameters& hp, double lambda_scale = 1.0);

// Density of a real-valued report under the uncensored model (reports taken
// at face value as the latent peer grades).
double report_density_uncensored(double r, double s, double tau, double b, bool effort,
                                 const Hyperparameters& hp, double lambda_scale = 1.0);

LowEffortSpec low_effort_spec(const Hyperparameters& hp);

// One joint sample of all latent variables, densely indexed to match an
// IndexedDataset.
struct LatentState {
  std::vector<double> true_grade;    // n_submissions * components
  std::vector<double> reliability;   // n_graders
  std::vector<double> bias;          // n_graders
  std::vector<double> effort_prob;   // n_graders
  std::vector<std::uint8_t> effort;  // one per pairing
};

struct DenseClamps {
  std::vector<std::uint8_t> effort_mask, reliability_mask, bias_mask;
  std::vector<double> effort_value, reliability_value, bias_value;
};

// Validates clamp values (effort in [0,1], reliability > 0) and resolves
// grader ids. Unknown grader ids are an error.
DenseClamps densify_clamps(const ClampSet& clamps, const IndexedDataset& data);

// Post-burn-in samples of one chain, flattened sample-major.
struct SampleTrace {
  int chain_id = 0;
  std::uint64_t seed = 0;
  int kept = 0;
  int n_grade_vars = 0;
  int n_graders = 0;
  int n_pairings = 0;
  std::vector<double> true_grade;
  std::vector<double> reliability;
  std::vector<double> bias;
  std::vector<double> effort_prob;
  std::vector<std::uint8_t> effort;

  std::span<const double> true_grade_row(int k) const { return {true_grade.data() + static_cast<std::size_t>(k) * n_grade_vars, static_cast<std::size_t>(n_grade_vars)}; }
};

class GibbsEngine {
 public:
  GibbsEngine(const IndexedDataset& data, const Hyperparameters& hp, const ModelConfig& config,
              const DenseClamps& clamps);

  LatentState initial_state(Rng& rng) const;

  // Resamples every unclamped variable exactly once, in fixed order:
  // true grades, reliabilities, biases, effort probabilities, efforts.
  void sweep(LatentState& state, Rng& rng) const;

  // Closed-form conditionals (preconditions per model flags are asserted).
  double sample_true_grade_conjugate(int u, int c, const LatentState& state, Rng& rng) const;
  double sample_reliability_conjugate(int v, const LatentState& state, Rng& rng) const;
  double sample_bias_conjugate(int v, const LatentState& state, Rng& rng) const;
  double sample_effort_probability(int v, const LatentState& state, Rng& rng) const;
  // Probability that pairing p's reports came from the effortful branch.
  double effort_on_probability(int pairing, const LatentState& state) const;

  // Full unnormalized log posteriors (prior + every incident report factor),
  // used by the grid updates and exposed for oracle tests.
  double unnorm_logpost_true_grade(int u, int c, double candidate, const LatentState& state) const;
  double unnorm_logpost_reliability(int v, double candidate, const LatentState& state) const;
  double unnorm_logpost_bias(int v, double candidate, const LatentState& state) const;

  // Grid-approximate draws for the non-conjugate conditionals.
  double grid_sample_true_grade(int u, int c, const LatentState& state, Rng& rng) const;
  double grid_sample_reliability(int v, const LatentState& state, Rng& rng) const;
  double grid_sample_bias(int v, const LatentState& state, Rng& rng) const;

  const ModelConfig& config() const { return config_; }
  const DenseClamps& clamps() const { return clamps_; }

  // Candidate-dependent part only: prior plus effortful-report factors.
  // Low-effort report factors do not depend on the variable being updated and
  // cancel in grid normalization; the sweep skips them.
  void fill_logpost_true_grade(int u, int c, const LatentState& state, std::vector<double>& lw) const;
  void fill_logpost_reliability(int v, const LatentState& state, std::vector<double>& lw) const;
  void fill_logpost_bias(int v, const LatentState& state, std::vector<double>& lw) const;

 private:
  double low_effort_log_const(int pairing) const;  // sum over components of log L(r|z=0)
  bool pair_effort(const LatentState& state, int pairing) const;
  double lambda_scale() const;

  const IndexedDataset& data_;
  const Hyperparameters& hp_;
  ModelConfig config_;
  DenseClamps clamps_;
  LowEffortSpec low_spec_;
  std::vector<CensorInterval> grade_intervals_;   // per grade-set index
  std::vector<CensorInterval> pair_intervals_;    // [pairing * C + c]
  std::vector<double> pair_log_low_;              // [pairing] sum_c log L(r | z=0)
  std::vector<double> prior_log_s_grid_;          // true-grade prior on grid (uncorrelated)
  std::vector<double> prior_log_tau_grid_;        // reliability prior on grid
  std::vector<double> prior_log_b_grid_;          // bias prior on grid
};

// Runs config.sampling.chains independent chains with per-chain seeds derived
// from config.seed, discarding burn-in. threads <= 0 means one thread per
// hardware core (capped at the chain count).
std::vector<SampleTrace> run_chains(const IndexedDataset& data, const Hyperparameters& hp,
                                    const ModelConfig& config, const ClampSet& clamps,
                                    int threads = 0);

}  // namespace pg
