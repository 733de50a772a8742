#include "pg/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pg {

namespace {
constexpr double kTwoPi = 6.283185307179586476925;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double normal_pdf(double x, double mean, double var) {
  if (!(var > 0)) throw std::invalid_argument("normal_pdf: var must be > 0");
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(kTwoPi * var);
}

double log_normal_pdf(double x, double mean, double var) {
  if (!(var > 0)) throw std::invalid_argument("log_normal_pdf: var must be > 0");
  const double d = x - mean;
  return -0.5 * d * d / var - 0.5 * std::log(kTwoPi * var);
}

double normal_cdf(double x, double mean, double var) {
  if (!(var > 0)) throw std::invalid_argument("normal_cdf: var must be > 0");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  const double z = (x - mean) / std::sqrt(var);
  return 0.5 * std::erfc(-z * kInvSqrt2);
}

double normal_interval_prob(double lo, double hi, double mean, double var) {
  if (!(var > 0)) throw std::invalid_argument("normal_interval_prob: var must be > 0");
  if (!(lo < hi)) return 0.0;
  const double sd = std::sqrt(var);
  if (lo == -kInf && hi == kInf) return 1.0;
  if (lo == -kInf) return 0.5 * std::erfc(-((hi - mean) / sd) * kInvSqrt2);
  if (hi == kInf) return 0.5 * std::erfc(((lo - mean) / sd) * kInvSqrt2);
  double a = (lo - mean) / sd;
  double b = (hi - mean) / sd;
  // Reflect so the interval sits at or right of the mean; then the upper-tail
  // erfc difference avoids cancellation between two values near 1.
  if (a + b < 0) {
    const double t = a;
    a = -b;
    b = -t;
  }
  const double p = 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
  return std::max(p, 0.0);
}

double log_gamma_pdf(double x, double shape, double rate) {
  if (!(shape > 0) || !(rate > 0)) throw std::invalid_argument("log_gamma_pdf: bad parameters");
  if (!(x > 0)) return -kInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_beta_pdf(double x, double alpha, double beta) {
  if (!(alpha > 0) || !(beta > 0)) throw std::invalid_argument("log_beta_pdf: bad parameters");
  if (!(x > 0.0) || !(x < 1.0)) {
    // endpoints: density may be 0 or +inf depending on parameters; the Gibbs
    // machinery only evaluates interior points, so map both to -inf
    if ((x == 0.0 && alpha >= 1) || (x == 1.0 && beta >= 1)) return -kInf;
    return -kInf;
  }
  return std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta) +
         (alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x);
}

double low_effort_pdf(double g, const LowEffortSpec& spec) {
  double p = (1.0 - spec.epsilon) * normal_pdf(g, spec.mu_s, 1.0 / spec.tau_ell);
  if (g >= 0.0 && g <= spec.max_grade) p += spec.epsilon / spec.max_grade;
  return p;
}

double low_effort_cdf(double g, const LowEffortSpec& spec) {
  const double uniform_part = std::clamp(g, 0.0, spec.max_grade) / spec.max_grade;
  return (1.0 - spec.epsilon) * normal_cdf(g, spec.mu_s, 1.0 / spec.tau_ell) +
         spec.epsilon * uniform_part;
}

double low_effort_interval_prob(double lo, double hi, const LowEffortSpec& spec) {
  if (!(lo < hi)) return 0.0;
  const double clo = std::isinf(lo) ? (lo < 0 ? 0.0 : spec.max_grade) : std::clamp(lo, 0.0, spec.max_grade);
  const double chi = std::isinf(hi) ? (hi > 0 ? spec.max_grade : 0.0) : std::clamp(hi, 0.0, spec.max_grade);
  return (1.0 - spec.epsilon) * normal_interval_prob(lo, hi, spec.mu_s, 1.0 / spec.tau_ell) +
         spec.epsilon * (chi - clo) / spec.max_grade;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform_pos() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

double Rng::uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be > 0");
  // rejection to avoid modulo bias
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::std_normal() {
  // Box-Muller, single value per pair of uniforms; no cached spare so the
  // stream position is a pure function of the call count
  const double u1 = uniform_pos();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double Rng::normal(double mean, double var) {
  if (var < 0) throw std::invalid_argument("Rng::normal: var must be >= 0");
  if (var == 0) return mean;
  return mean + std::sqrt(var) * std_normal();
}

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0) || !(rate > 0)) throw std::invalid_argument("Rng::gamma: bad parameters");
  if (shape < 1.0) {
    const double u = uniform_pos();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = std_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_pos();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v / rate;
  }
}

double Rng::beta(double alpha, double beta) {
  if (!(alpha > 0) || !(beta > 0)) throw std::invalid_argument("Rng::beta: bad parameters");
  const double x = gamma(alpha, 1.0);
  const double y = gamma(beta, 1.0);
  return x / (x + y);
}

bool Rng::bernoulli(double p) {
  if (!(p >= 0.0) || !(p <= 1.0)) throw std::invalid_argument("Rng::bernoulli: p outside [0,1]");
  if (p >= 1.0) return true;
  if (p <= 0.0) return false;
  return uniform() < p;
}

double Rng::low_effort(const LowEffortSpec& spec) {
  if (bernoulli(spec.epsilon)) return uniform_range(0.0, spec.max_grade);
  return normal(spec.mu_s, 1.0 / spec.tau_ell);
}

int sample_discrete_log(std::span<const double> log_weights, Rng& rng) {
  double max_lw = -kInf;
  for (double lw : log_weights) max_lw = std::max(max_lw, lw);
  if (!(max_lw > -kInf)) throw std::domain_error("sample_discrete_log: all weights are -inf");
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - max_lw);
  const double u = rng.uniform() * total;
  double acc = 0.0;
  const int n = static_cast<int>(log_weights.size());
  for (int i = 0; i < n; ++i) {
    acc += std::exp(log_weights[i] - max_lw);
    if (u < acc) return i;
  }
  // u == total after roundoff: return the last index with nonzero mass
  for (int i = n - 1; i >= 0; --i) {
    if (log_weights[i] > -kInf) return i;
  }
  return n - 1;
}

}  // namespace pg
