#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "pg/core.hpp"
#include "pg/gibbs.hpp"
#include "pg/synth.hpp"

using namespace pg;

namespace {

ClassSpec small_spec() {
  ClassSpec spec;
  spec.students = 10;
  spec.weeks = 1;
  spec.grades_per_submission = 4;
  spec.grades_per_grader_per_week = 4;
  spec.components = 4;
  spec.tas = 1;
  spec.ta_coverage = 0.25;
  spec.hp = preset_hyperparameters("paper-default");
  spec.seed = 7;
  return spec;
}

}  // namespace

TEST_CASE("review graph degrees") {
  ClassSpec spec = small_spec();
  Rng rng(1);
  const ReviewGraph g = assign_review_graph(spec, 0, rng);
  CHECK(g.n_submissions == 10);
  std::map<int, int> per_submission, per_grader;
  std::set<std::pair<int, int>> pairs;
  for (const auto& [u, v] : g.student_pairs) {
    ++per_submission[u];
    ++per_grader[v];
    CHECK(g.author[u] != v);
    CHECK(pairs.insert({u, v}).second);
  }
  for (int u = 0; u < g.n_submissions; ++u) CHECK(per_submission[u] == 4);
  for (int v = 0; v < spec.students; ++v) CHECK(per_grader[v] == 4);
}

TEST_CASE("five students grade all the others") {
  ClassSpec spec = small_spec();
  spec.students = 5;
  spec.tas = 0;
  Rng rng(2);
  const ReviewGraph g = assign_review_graph(spec, 0, rng);
  std::set<std::pair<int, int>> pairs(g.student_pairs.begin(), g.student_pairs.end());
  CHECK(pairs.size() == 20);
  for (int u = 0; u < 5; ++u)
    for (int v = 0; v < 5; ++v)
      if (v != g.author[u]) CHECK(pairs.count({u, v}) == 1);
}

TEST_CASE("review graph pairs are near uniform") {
  ClassSpec spec = small_spec();
  spec.tas = 0;
  std::map<std::pair<int, int>, int> counts;
  Rng rng(3);
  const int draws = 2000;
  for (int i = 0; i < draws; ++i) {
    const ReviewGraph g = assign_review_graph(spec, 0, rng);
    for (const auto& pair : g.student_pairs) ++counts[pair];
  }
  // each eligible ordered (submission, grader) pair should appear ~4/9
  for (int u = 0; u < 10; ++u)
    for (int v = 0; v < 10; ++v) {
      if (v == u) continue;  // author of u is student u
      const double freq = counts[{u, v}] / static_cast<double>(draws);
      CHECK(std::fabs(freq - 4.0 / 9.0) < 0.05);
    }
}

TEST_CASE("unsatisfiable degrees are rejected") {
  ClassSpec spec = small_spec();
  spec.grades_per_submission = 10;  // > students - 1
  spec.grades_per_grader_per_week = 10;
  Rng rng(4);
  CHECK_THROWS_AS(assign_review_graph(spec, 0, rng), std::invalid_argument);
  ClassSpec odd = small_spec();
  odd.grades_per_submission = 3;  // 10*4 not divisible by 3
  CHECK_THROWS_AS(odd.validate(), std::invalid_argument);
}

TEST_CASE("generated class matches the paper counts") {
  ClassSpec spec;
  spec.hp = preset_hyperparameters("paper-default");
  spec.seed = 11;
  const GroundTruth gt = generate_class(spec);
  CHECK(gt.dataset.submissions.size() == 1200);  // 120 students x 10 weeks
  long student_pairings = 0, ta_pairings = 0;
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& rec : gt.dataset.records) pairs.insert({rec.submission_id, rec.grader_id});
  for (const auto& [sub, grader] : pairs) {
    (void)sub;
    if (gt.dataset.roles.at(grader) == Role::TA)
      ++ta_pairings;
    else
      ++student_pairings;
  }
  CHECK(student_pairings == 4800);  // 4 per submission
  CHECK(ta_pairings > 150);         // roughly 25% of 1200
  CHECK(ta_pairings < 450);
  CHECK(gt.dataset.records.size() == pairs.size() * 4);

  SUBCASE("all reports are legal grades") {
    for (const auto& rec : gt.dataset.records) {
      CHECK(rec.reported_grade >= 0);
      CHECK(rec.reported_grade <= 5);
    }
  }
  SUBCASE("dataset validates against the generating hyperparameters") {
    CHECK(validate_dataset(gt.dataset, spec.hp).empty());
  }
}

TEST_CASE("noiseless generation reproduces rounded truth") {
  ClassSpec spec = small_spec();
  spec.tas = 0;
  spec.student_reliability_mean = 1e8;
  spec.hp.tau_b = 1e12;   // negligible bias
  spec.hp.alpha_e = 1e9;  // effort probability pinned to ~1
  spec.hp.beta_e = 1e-3;
  spec.seed = 13;
  const GroundTruth gt = generate_class(spec);
  for (const auto& rec : gt.dataset.records) {
    const double truth = gt.true_grade.at(rec.submission_id)[rec.component];
    CHECK(rec.reported_grade == nearest_grade(truth, spec.hp));
  }
}

TEST_CASE("zero effort with pure uniform mixing gives censored-uniform reports") {
  ClassSpec spec = small_spec();
  spec.students = 20;
  spec.weeks = 5;
  spec.tas = 0;
  spec.hp.alpha_e = 1e-4;  // effort probability ~0
  spec.hp.beta_e = 10.0;
  spec.hp.epsilon = 1.0;   // low-effort reports drawn uniformly on [0, M]
  spec.seed = 17;
  const GroundTruth gt = generate_class(spec);
  std::map<int, int> counts;
  for (const auto& rec : gt.dataset.records) ++counts[rec.reported_grade];
  const double n = static_cast<double>(gt.dataset.records.size());
  CHECK(n == doctest::Approx(20 * 4 * 5 * 4));
  // uniform on [0,5] censors to 0.1,0.2,0.2,0.2,0.2,0.1
  double chi2 = 0.0;
  const double expect[] = {0.1, 0.2, 0.2, 0.2, 0.2, 0.1};
  for (int gval = 0; gval <= 5; ++gval) {
    const double e = expect[gval] * n;
    chi2 += (counts[gval] - e) * (counts[gval] - e) / e;
  }
  CHECK(chi2 < 20.5);  // chi2(5) at p=0.001
}

TEST_CASE("determinism of generation") {
  const ClassSpec spec = small_spec();
  const GroundTruth a = generate_class(spec);
  const GroundTruth b = generate_class(spec);
  CHECK(a.dataset.records.size() == b.dataset.records.size());
  for (std::size_t i = 0; i < a.dataset.records.size(); ++i) {
    CHECK(a.dataset.records[i].submission_id == b.dataset.records[i].submission_id);
    CHECK(a.dataset.records[i].reported_grade == b.dataset.records[i].reported_grade);
  }
  CHECK(a.reliability == b.reliability);
  CHECK(a.bias == b.bias);
  CHECK(a.effort == b.effort);
}

TEST_CASE("student reliabilities center on the requested mean") {
  double sum = 0.0;
  long n = 0;
  for (int rep = 0; rep < 15; ++rep) {
    ClassSpec spec = small_spec();
    spec.students = 120;
    spec.seed = 100 + rep;
    const GroundTruth gt = generate_class(spec);
    for (const auto& [id, tau] : gt.reliability) {
      if (gt.dataset.roles.at(id) == Role::Student) {
        sum += tau;
        ++n;
      }
    }
  }
  // Gamma(2, 2): mean 1, sd 1/sqrt(2)
  const double se = (1.0 / std::sqrt(2.0)) / std::sqrt(static_cast<double>(n));
  CHECK(std::fabs(sum / n - 1.0) < 3.0 * se);
}

TEST_CASE("calibration submissions add an instructor grader") {
  ClassSpec spec = small_spec();
  spec.calibrations_per_week = 2;
  const GroundTruth gt = generate_class(spec);
  CHECK(gt.dataset.roles.at("instructor") == Role::Instructor);
  CHECK(gt.dataset.submissions.size() == 12);
  int instructor_records = 0;
  for (const auto& rec : gt.dataset.records) instructor_records += rec.grader_id == "instructor";
  CHECK(instructor_records == 2 * 4);  // components per calibration
  const ClampSet clamps = default_clamps(gt.dataset);
  CHECK(clamps.reliability.at("instructor") == 16.0);
  CHECK(clamps.effort.at("instructor") == 1.0);
}

TEST_CASE("misspecification scenarios") {
  const Hyperparameters base = preset_hyperparameters("paper-default");
  SUBCASE("identity when the knob equals the base") {
    const MisspecScenario sc = misspec_scenario(base, MisspecKnob::GradeMean, base.mu_s);
    CHECK(sc.generator.mu_s == sc.inference.mu_s);
    CHECK(sc.generator.tau_s == sc.inference.tau_s);
  }
  SUBCASE("effort mean holds the prior variance fixed") {
    const double n0 = base.alpha_e + base.beta_e;
    const double m0 = base.alpha_e / n0;
    const double v0 = m0 * (1 - m0) / (n0 + 1);
    const MisspecScenario sc = misspec_scenario(base, MisspecKnob::EffortMean, 0.6);
    const double n1 = sc.inference.alpha_e + sc.inference.beta_e;
    const double m1 = sc.inference.alpha_e / n1;
    const double v1 = m1 * (1 - m1) / (n1 + 1);
    CHECK(std::fabs(m1 - 0.6) < 1e-10);
    CHECK(std::fabs(v1 - v0) < 1e-10);
  }
  SUBCASE("low-effort precision changes only that field") {
    const MisspecScenario sc = misspec_scenario(base, MisspecKnob::LowEffortPrecision, 4.0);
    CHECK(sc.generator.tau_ell == 1.0);
    CHECK(sc.inference.tau_ell == 4.0);
    CHECK(sc.inference.mu_s == sc.generator.mu_s);
    CHECK(sc.inference.tau_b == sc.generator.tau_b);
    CHECK(sc.inference.alpha_e == sc.generator.alpha_e);
  }
  SUBCASE("direction flag swaps the pair") {
    const MisspecScenario sc = misspec_scenario(base, MisspecKnob::GradeMean, 3.0, false);
    CHECK(sc.generator.mu_s == 3.0);
    CHECK(sc.inference.mu_s == 4.0);
  }
  SUBCASE("reliability knobs") {
    const MisspecScenario mean2 = misspec_scenario(base, MisspecKnob::ReliabilityMean, 2.0);
    CHECK(mean2.inference.alpha_tau / mean2.inference.beta_tau == doctest::Approx(2.0));
    const MisspecScenario var2 = misspec_scenario(base, MisspecKnob::ReliabilityVariance, 2.0);
    const double m = var2.inference.alpha_tau / var2.inference.beta_tau;
    const double v = var2.inference.alpha_tau / (var2.inference.beta_tau * var2.inference.beta_tau);
    CHECK(m == doctest::Approx(1.0));
    CHECK(v == doctest::Approx(2.0));
  }
  SUBCASE("invalid values throw") {
    CHECK_THROWS_AS(misspec_scenario(base, MisspecKnob::GradeSd, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(misspec_scenario(base, MisspecKnob::EffortMean, 0.0001), std::invalid_argument);
  }
}
