#include <cmath>
#include <stdexcept>
#include <limits>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "pg/distributions.hpp"

using namespace pg;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("normal pdf basics") {
  CHECK(std::fabs(normal_pdf(0.0, 0.0, 1.0) - 0.3989422804) < 1e-9);
  for (double mu : {-2.0, 0.0, 3.7}) {
    for (double var : {0.1, 1.0, 2.5}) {
      CHECK(normal_pdf(mu, mu, var) == doctest::Approx(1.0 / std::sqrt(2 * M_PI * var)).epsilon(1e-12));
      CHECK(std::exp(log_normal_pdf(mu + 0.3, mu, var)) ==
            doctest::Approx(normal_pdf(mu + 0.3, mu, var)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(normal_pdf(0, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(normal_cdf(0, 0, -1), std::invalid_argument);
}

TEST_CASE("normal pdf matches finite difference of the cdf") {
  const double x = 1.3, mu = 0.4, var = 2.5;
  const double h = 1e-5;
  const double fd = (normal_cdf(x + h, mu, var) - normal_cdf(x - h, mu, var)) / (2 * h);
  CHECK(std::fabs(fd - normal_pdf(x, mu, var)) < 1e-6);
}

TEST_CASE("normal cdf against the series oracle") {
  CHECK(normal_cdf(3.0, 3.0, 0.7) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(normal_cdf(kInf, 0, 1) == 1.0);
  CHECK(normal_cdf(-kInf, 0, 1) == 0.0);
  CHECK(std::fabs(normal_cdf(1, 0, 1) - 0.8413447461) < 1e-8);
  for (double x = -8.0; x <= 8.0; x += 0.37) {
    CHECK(std::fabs(normal_cdf(x, 0.0, 1.0) - oracles::normal_cdf_oracle(x, 0.0, 1.0)) < 1e-10);
    CHECK(std::fabs(normal_cdf(x, 1.2, 3.4) - oracles::normal_cdf_oracle(x, 1.2, 3.4)) < 1e-10);
  }
  double prev = -1.0;
  for (double x = -10.0; x <= 10.0; x += 0.25) {
    const double v = normal_cdf(x, 0.4, 0.8);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("normal interval prob is tail-stable and consistent") {
  CHECK(normal_interval_prob(-kInf, kInf, 0, 1) == 1.0);
  CHECK(normal_interval_prob(-0.5, 0.5, 0, 1) ==
        doctest::Approx(normal_cdf(0.5, 0, 1) - normal_cdf(-0.5, 0, 1)).epsilon(1e-12));
  const double lo = 12.0, hi = 13.0;
  const double expect = 0.5 * (std::erfc(lo / std::sqrt(2.0)) - std::erfc(hi / std::sqrt(2.0)));
  CHECK(normal_interval_prob(lo, hi, 0, 1) == doctest::Approx(expect).epsilon(1e-12));
  // the left tail mirrors the right tail
  CHECK(normal_interval_prob(-13.0, -12.0, 0, 1) ==
        doctest::Approx(normal_interval_prob(12.0, 13.0, 0, 1)).epsilon(1e-13));
}

TEST_CASE("low effort mixture pdf and cdf") {
  SUBCASE("epsilon 0 degenerates to the normal") {
    LowEffortSpec spec{4.0, 1.0, 0.0, 5.0};
    for (double g : {-1.0, 0.0, 2.5, 4.0, 6.0}) {
      CHECK(low_effort_pdf(g, spec) == doctest::Approx(normal_pdf(g, 4.0, 1.0)).epsilon(1e-15));
      CHECK(low_effort_cdf(g, spec) == doctest::Approx(normal_cdf(g, 4.0, 1.0)).epsilon(1e-15));
    }
  }
  SUBCASE("epsilon 1 is the pure uniform") {
    LowEffortSpec spec{4.0, 1.0, 1.0, 5.0};
    CHECK(low_effort_pdf(2.5, spec) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(low_effort_cdf(2.5, spec) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("mixture arithmetic at the paper defaults") {
    LowEffortSpec spec{4.0, 1.0, 0.05, 5.0};
    const double expect = 0.95 * normal_pdf(4.0, 4.0, 1.0) + 0.05 * 0.2;
    CHECK(std::fabs(low_effort_pdf(4.0, spec) - expect) < 1e-8);
    // split the quadrature at the uniform component's jump at 0, nudging the
    // panel edges off the discontinuity
    auto pdf = [&](double g) { return low_effort_pdf(g, spec); };
    const double nudge = 1e-9;
    const double integral = oracles::simpson(pdf, -6.0, -nudge, 10000) +
                            oracles::simpson(pdf, nudge, 4.0, 10000);
    CHECK(std::fabs(integral - low_effort_cdf(4.0, spec)) < 1e-6);
  }
  SUBCASE("pdf integrates to one") {
    LowEffortSpec spec{4.0, 1.0, 0.3, 5.0};
    auto pdf = [&](double g) { return low_effort_pdf(g, spec); };
    const double nudge = 1e-9;
    const double total = oracles::simpson(pdf, -10.0, -nudge, 10000) +
                         oracles::simpson(pdf, nudge, 5.0 - nudge, 10000) +
                         oracles::simpson(pdf, 5.0 + nudge, 18.0, 10000);
    CHECK(std::fabs(total - 1.0) < 1e-6);
  }
  SUBCASE("interval prob matches cdf differences") {
    LowEffortSpec spec{4.0, 2.0, 0.1, 5.0};
    CHECK(low_effort_interval_prob(1.5, 2.5, spec) ==
          doctest::Approx(low_effort_cdf(2.5, spec) - low_effort_cdf(1.5, spec)).epsilon(1e-12));
    CHECK(low_effort_interval_prob(-kInf, kInf, spec) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("cdf derivative matches pdf on a grid") {
  const double h = 1e-5;
  LowEffortSpec spec{4.0, 1.0, 0.05, 5.0};
  for (double x = -4.0; x <= 9.0; x += 0.5) {
    const double d = (normal_cdf(x + h, 2.0, 1.7) - normal_cdf(x - h, 2.0, 1.7)) / (2 * h);
    CHECK(std::fabs(d - normal_pdf(x, 2.0, 1.7)) < 1e-6);
    const double dl = (low_effort_cdf(x + h, spec) - low_effort_cdf(x - h, spec)) / (2 * h);
    if (std::fabs(x) > 2 * h && std::fabs(x - 5.0) > 2 * h)  // kinks at the uniform edges
      CHECK(std::fabs(dl - low_effort_pdf(x, spec)) < 1e-6);
  }
}

TEST_CASE("samplers reproduce analytic moments and seeds") {
  SUBCASE("degenerate cases") {
    Rng rng(7);
    CHECK(rng.normal(3.0, 0.0) == 3.0);
    for (int i = 0; i < 100; ++i) CHECK(rng.bernoulli(1.0));
    for (int i = 0; i < 100; ++i) CHECK(!rng.bernoulli(0.0));
  }
  SUBCASE("gamma(2,2) mean") {
    Rng rng(11);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += rng.gamma(2.0, 2.0);
    CHECK(std::fabs(sum / n - 1.0) < 0.05);
  }
  SUBCASE("gamma shape below one") {
    Rng rng(13);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += rng.gamma(0.5, 2.0);
    CHECK(std::fabs(sum / n - 0.25) < 0.01);
  }
  SUBCASE("beta moments") {
    Rng rng(17);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double x = rng.beta(8.0, 2.0);
      sum += x;
      sq += x * x;
    }
    const double mean = sum / n;
    CHECK(std::fabs(mean - 0.8) < 0.005);
    const double var = sq / n - mean * mean;
    CHECK(std::fabs(var - 8.0 * 2.0 / (100.0 * 11.0)) < 0.001);
  }
  SUBCASE("normal moments") {
    Rng rng(19);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double x = rng.normal(2.0, 4.0);
      sum += x;
      sq += x * x;
    }
    CHECK(std::fabs(sum / n - 2.0) < 0.03);
    CHECK(std::fabs(sq / n - sum / n * sum / n - 4.0) < 0.1);
  }
  SUBCASE("identical seeds give identical streams") {
    Rng a(123), b(123);
    for (int i = 0; i < 1000; ++i) {
      CHECK(a.uniform() == b.uniform());
      CHECK(a.gamma(1.3, 0.7) == b.gamma(1.3, 0.7));
      CHECK(a.normal(0, 2) == b.normal(0, 2));
      CHECK(a.beta(2, 5) == b.beta(2, 5));
    }
  }
  SUBCASE("invalid parameters throw") {
    Rng rng(1);
    CHECK_THROWS_AS(rng.gamma(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(rng.gamma(1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(rng.normal(0.0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(rng.bernoulli(1.5), std::invalid_argument);
  }
}

TEST_CASE("low effort sampler moments") {
  LowEffortSpec spec{4.0, 1.0, 0.5, 5.0};
  Rng rng(23);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += rng.low_effort(spec);
  CHECK(std::fabs(sum / n - 3.25) < 0.02);  // 0.5*4 + 0.5*2.5
}

TEST_CASE("discrete log sampler") {
  SUBCASE("point mass") {
    Rng rng(3);
    const std::vector<double> lw = {0.0, -kInf, -kInf};
    for (int i = 0; i < 200; ++i) CHECK(sample_discrete_log(lw, rng) == 0);
  }
  SUBCASE("uniform frequencies pass a chi-square check") {
    Rng rng(5);
    const std::vector<double> lw = {1.7, 1.7, 1.7, 1.7};
    std::vector<int> counts(4, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[sample_discrete_log(lw, rng)];
    double chi2 = 0.0;
    for (int c : counts) {
      CHECK(std::fabs(c / static_cast<double>(n) - 0.25) < 0.01);
      chi2 += (c - n / 4.0) * (c - n / 4.0) / (n / 4.0);
    }
    CHECK(chi2 < 16.27);  // chi2(3) at p=0.001
  }
  SUBCASE("adding a constant leaves draws identical under the same seed") {
    std::vector<double> lw = {-1.0, 0.3, 2.0, -4.0};
    std::vector<double> shifted = lw;
    for (double& x : shifted) x += 10.0;
    Rng a(9), b(9);
    for (int i = 0; i < 2000; ++i) CHECK(sample_discrete_log(lw, a) == sample_discrete_log(shifted, b));
  }
  SUBCASE("all minus infinity throws") {
    Rng rng(1);
    const std::vector<double> lw = {-kInf, -kInf};
    CHECK_THROWS_AS(sample_discrete_log(lw, rng), std::domain_error);
  }
}
