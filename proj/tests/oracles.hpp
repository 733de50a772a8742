#pragma once
// Test-only oracles, implemented independently of the library code paths they
// check: a series/continued-fraction erf, Simpson quadrature, an uncensored
// PG1 reference sampler, and a discretized brute-force search for the grade
// explanation program.

#include <functional>
#include <vector>

#include "pg/core.hpp"
#include "pg/distributions.hpp"
#include "pg/gibbs.hpp"
#include "pg/mip.hpp"

namespace oracles {

// erf via Taylor series for small |x| and a Lentz continued fraction for the
// tail; absolute error well below 1e-14.
double erf_series(double x);
double normal_cdf_oracle(double x, double mean, double var);

// composite Simpson on [lo, hi]
double simpson(const std::function<double(double)>& f, double lo, double hi, int intervals);

// Total variation between two nonnegative vectors after normalizing each.
double total_variation(const std::vector<double>& a, const std::vector<double>& b);

// One uncensored PG1 Gibbs sweep written from scratch (fixed update order:
// true grades, reliabilities, biases), for trace-equality checks against the
// engine with effort disabled.
struct Pg1State {
  std::vector<double> true_grade;  // u*C+c
  std::vector<double> reliability;
  std::vector<double> bias;
};
Pg1State pg1_init(const pg::IndexedDataset& data, const pg::Hyperparameters& hp, pg::Rng& rng);
void pg1_sweep(Pg1State& state, const pg::IndexedDataset& data, const pg::Hyperparameters& hp,
               pg::Rng& rng);

// Brute force over weight-support patterns with weights discretized at `step`
// (grid anchored at the lower box edge; the last in-support weight closes the
// simplex). Returns the best objective found, or -inf when infeasible.
double mip_brute_force(const pg::MipInstance& instance, double step);

// Checks every constraint of a returned solution at tolerance tol.
bool mip_solution_feasible(const pg::MipInstance& instance, const pg::MipSolution& solution,
                           double tol);

}  // namespace oracles
