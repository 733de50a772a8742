#pragma once
// Probability primitives for the grading model: normal pdf/cdf, the
// low-effort mixture, and a seeded generator with the handful of samplers
// the Gibbs updates need. Sampling transforms are hand-rolled on top of
// mt19937_64 so that identical seeds give identical streams on every
// platform (std::<random> distributions are implementation-defined).

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace pg {

// Distinct 64-bit values from a mutable state; used to derive per-chain and
// per-cell seeds from one master seed.
std::uint64_t splitmix64(std::uint64_t& state);

double normal_pdf(double x, double mean, double var);
double log_normal_pdf(double x, double mean, double var);

// abs error <= ~1e-15 via erfc; handles x = +/-inf
double normal_cdf(double x, double mean, double var);

// P(lo < X <= hi), computed from the nearer tail so that far-from-mean
// intervals keep relative accuracy. lo may be -inf, hi may be +inf.
double normal_interval_prob(double lo, double hi, double mean, double var);

// shape-rate convention: mean = shape/rate
double log_gamma_pdf(double x, double shape, double rate);
double log_beta_pdf(double x, double alpha, double beta);

// Mixture of N(mu_s, 1/tau_ell) with weight 1-epsilon and Uniform(0, max_grade)
// with weight epsilon; the distribution of reports from a grader not making
// an effort.
struct LowEffortSpec {
  double mu_s = 4.0;
  double tau_ell = 1.0;
  double epsilon = 0.05;
  double max_grade = 5.0;
};

double low_effort_pdf(double g, const LowEffortSpec& spec);
double low_effort_cdf(double g, const LowEffortSpec& spec);
double low_effort_interval_prob(double lo, double hi, const LowEffortSpec& spec);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // [0, 1)
  double uniform();
  // (0, 1]
  double uniform_pos();
  double uniform_range(double lo, double hi);

  // var == 0 is accepted and returns mean (clamped variables)
  double normal(double mean, double var);
  // shape-rate convention
  double gamma(double shape, double rate);
  double beta(double alpha, double beta);
  bool bernoulli(double p);
  double low_effort(const LowEffortSpec& spec);

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n);

  // next raw engine word; used to derive sub-seeds in tests
  std::uint64_t raw() { return engine_(); }

 private:
  double std_normal();
  std::mt19937_64 engine_;
};

// Samples index i with probability proportional to exp(log_weights[i]),
// max-subtracted for stability. Throws if every weight is -inf.
int sample_discrete_log(std::span<const double> log_weights, Rng& rng);

}  // namespace pg
