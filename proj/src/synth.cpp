#include "pg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "pg/gibbs.hpp"

namespace pg {

namespace {

std::string padded(const char* prefix, int i, int width) {
  std::string digits = std::to_string(i);
  while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
  return std::string(prefix) + digits;
}

void shuffle_ints(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

void ClassSpec::validate() const {
  if (students < 2) throw std::invalid_argument("class spec: need at least 2 students");
  if (weeks < 1) throw std::invalid_argument("class spec: weeks must be >= 1");
  if (components < 1) throw std::invalid_argument("class spec: components must be >= 1");
  if (grades_per_submission < 1 || grades_per_grader_per_week < 1)
    throw std::invalid_argument("class spec: grading degrees must be >= 1");
  if (grades_per_submission > students - 1)
    throw std::invalid_argument("class spec: grades_per_submission must be <= students - 1");
  if ((students * grades_per_grader_per_week) % grades_per_submission != 0)
    throw std::invalid_argument(
        "class spec: students * grades_per_grader_per_week must be divisible by grades_per_submission");
  if (tas < 0 || ta_coverage < 0.0 || ta_coverage > 1.0)
    throw std::invalid_argument("class spec: bad TA settings");
  if (!(ta_reliability_mean > 0.0) || !(student_reliability_mean > 0.0))
    throw std::invalid_argument("class spec: reliability means must be > 0");
  if (calibrations_per_week < 0) throw std::invalid_argument("class spec: calibrations_per_week must be >= 0");
  if (components != hp.components)
    throw std::invalid_argument("class spec: components must match hyperparameters");
  hp.validate();
}

ReviewGraph assign_review_graph(const ClassSpec& spec, int week, Rng& rng) {
  (void)week;
  spec.validate();
  ReviewGraph graph;
  graph.n_submissions = spec.submissions_per_week();
  graph.author.resize(graph.n_submissions);
  for (int j = 0; j < graph.n_submissions; ++j) graph.author[j] = j % spec.students;

  const int slots = spec.students * spec.grades_per_grader_per_week;
  std::vector<int> slot_submission(slots);
  for (int j = 0; j < graph.n_submissions; ++j)
    for (int d = 0; d < spec.grades_per_submission; ++d)
      slot_submission[j * spec.grades_per_submission + d] = j;
  std::vector<int> slot_grader(slots);
  for (int v = 0; v < spec.students; ++v)
    for (int d = 0; d < spec.grades_per_grader_per_week; ++d)
      slot_grader[v * spec.grades_per_grader_per_week + d] = v;

  auto count_violations = [&](std::vector<int>* positions) {
    if (positions) positions->clear();
    int bad = 0;
    std::set<std::pair<int, int>> seen;
    for (int i = 0; i < slots; ++i) {
      bool ok = graph.author[slot_submission[i]] != slot_grader[i] &&
                seen.insert({slot_submission[i], slot_grader[i]}).second;
      if (!ok) {
        ++bad;
        if (positions) positions->push_back(i);
      }
    }
    return bad;
  };

  // configuration-model shuffle with randomized swap repair
  const int max_restarts = 200;
  std::vector<int> bad_positions;
  for (int attempt = 0; attempt < max_restarts; ++attempt) {
    shuffle_ints(slot_grader, rng);
    int violations = count_violations(&bad_positions);
    int stale = 0;
    while (violations > 0 && stale < 4000) {
      const int i = bad_positions[rng.below(bad_positions.size())];
      const int j = static_cast<int>(rng.below(slots));
      std::swap(slot_grader[i], slot_grader[j]);
      const int after = count_violations(&bad_positions);
      if (after > violations) {
        std::swap(slot_grader[i], slot_grader[j]);
        count_violations(&bad_positions);
        ++stale;
      } else {
        stale = after < violations ? 0 : stale + 1;
        violations = after;
      }
    }
    if (violations == 0) {
      graph.student_pairs.reserve(slots);
      for (int i = 0; i < slots; ++i)
        graph.student_pairs.emplace_back(slot_submission[i], slot_grader[i]);
      std::sort(graph.student_pairs.begin(), graph.student_pairs.end());
      for (int j = 0; j < graph.n_submissions; ++j) {
        if (spec.tas > 0 && rng.uniform() < spec.ta_coverage)
          graph.ta_pairs.emplace_back(j, static_cast<int>(rng.below(spec.tas)));
      }
      return graph;
    }
  }
  throw std::runtime_error("assign_review_graph: degree constraints unsatisfiable");
}

GroundTruth generate_class(const ClassSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  GroundTruth gt;

  const int id_width = spec.students >= 1000 ? 4 : 3;
  std::vector<std::string> student_ids(spec.students);
  for (int v = 0; v < spec.students; ++v) {
    student_ids[v] = padded("s", v + 1, id_width);
    gt.dataset.graders.push_back(student_ids[v]);
    gt.dataset.roles[student_ids[v]] = Role::Student;
  }
  std::vector<std::string> ta_ids(spec.tas);
  for (int t = 0; t < spec.tas; ++t) {
    ta_ids[t] = padded("ta", t + 1, 2);
    gt.dataset.graders.push_back(ta_ids[t]);
    gt.dataset.roles[ta_ids[t]] = Role::TA;
  }
  const std::string instructor_id = "instructor";
  if (spec.calibrations_per_week > 0) {
    gt.dataset.graders.push_back(instructor_id);
    gt.dataset.roles[instructor_id] = Role::Instructor;
  }

  // grader latents: students, then TAs; effort fixed to 1 for course staff
  for (int v = 0; v < spec.students; ++v) {
    const auto& id = student_ids[v];
    gt.reliability[id] = rng.gamma(spec.hp.alpha_tau, spec.hp.alpha_tau / spec.student_reliability_mean);
    gt.bias[id] = rng.normal(0.0, 1.0 / spec.hp.tau_b);
    gt.effort_prob[id] = rng.beta(spec.hp.alpha_e, spec.hp.beta_e);
  }
  for (int t = 0; t < spec.tas; ++t) {
    const auto& id = ta_ids[t];
    gt.reliability[id] = rng.gamma(spec.hp.alpha_tau, spec.hp.alpha_tau / spec.ta_reliability_mean);
    gt.bias[id] = rng.normal(0.0, 1.0 / spec.hp.tau_b);
    gt.effort_prob[id] = 1.0;
  }
  if (spec.calibrations_per_week > 0) {
    // gold-standard grades: high precision, no offset
    gt.reliability[instructor_id] = 16.0;
    gt.bias[instructor_id] = 0.0;
    gt.effort_prob[instructor_id] = 1.0;
  }

  const LowEffortSpec low = low_effort_spec(spec.hp);
  auto emit_reports = [&](const std::string& submission, const std::string& grader,
                          const std::vector<double>& truth, bool force_effort) {
    const int z = force_effort || rng.bernoulli(gt.effort_prob[grader]) ? 1 : 0;
    gt.effort[submission][grader] = z;
    for (int c = 0; c < spec.components; ++c) {
      const double g = z ? rng.normal(truth[c] + gt.bias[grader], 1.0 / gt.reliability[grader])
                         : rng.low_effort(low);
      GradeRecord rec;
      rec.submission_id = submission;
      rec.grader_id = grader;
      rec.component = c;
      rec.reported_grade = nearest_grade(g, spec.hp);
      gt.dataset.records.push_back(std::move(rec));
    }
  };

  for (int w = 0; w < spec.weeks; ++w) {
    const ReviewGraph graph = assign_review_graph(spec, w, rng);
    std::vector<std::string> local_ids(graph.n_submissions);
    for (int j = 0; j < graph.n_submissions; ++j) {
      const std::string id = padded("w", w + 1, 2) + "_" + padded("u", j, id_width);
      local_ids[j] = id;
      gt.dataset.submissions.push_back(id);
      gt.dataset.authors[id] = student_ids[graph.author[j]];
      auto& truth = gt.true_grade[id];
      truth.resize(spec.components);
      for (int c = 0; c < spec.components; ++c) truth[c] = rng.normal(spec.hp.mu_s, 1.0 / spec.hp.tau_s);
    }
    for (const auto& [j, v] : graph.student_pairs)
      emit_reports(local_ids[j], student_ids[v], gt.true_grade.at(local_ids[j]), false);
    for (const auto& [j, t] : graph.ta_pairs)
      emit_reports(local_ids[j], ta_ids[t], gt.true_grade.at(local_ids[j]), true);

    for (int cal = 0; cal < spec.calibrations_per_week; ++cal) {
      const std::string id = padded("w", w + 1, 2) + "_" + padded("cal", cal, 2);
      gt.dataset.submissions.push_back(id);
      gt.dataset.authors[id] = instructor_id;
      auto& truth = gt.true_grade[id];
      truth.resize(spec.components);
      for (int c = 0; c < spec.components; ++c) truth[c] = rng.normal(spec.hp.mu_s, 1.0 / spec.hp.tau_s);
      // graded by the instructor plus a random set of students
      emit_reports(id, instructor_id, truth, true);
      std::vector<int> order(spec.students);
      for (int v = 0; v < spec.students; ++v) order[v] = v;
      shuffle_ints(order, rng);
      for (int d = 0; d < spec.grades_per_submission; ++d)
        emit_reports(id, student_ids[order[d]], truth, false);
    }
  }
  return gt;
}

MisspecScenario misspec_scenario(const Hyperparameters& base, MisspecKnob knob, double value,
                                 bool alter_inference) {
  Hyperparameters altered = base;
  switch (knob) {
    case MisspecKnob::GradeMean:
      altered.mu_s = value;
      break;
    case MisspecKnob::GradeSd:
      if (!(value > 0)) throw std::invalid_argument("misspec: sigma_s must be > 0");
      altered.tau_s = tau_from_sigma(value);
      break;
    case MisspecKnob::BiasSd:
      if (!(value > 0)) throw std::invalid_argument("misspec: sigma_b must be > 0");
      altered.tau_b = tau_from_sigma(value);
      break;
    case MisspecKnob::ReliabilityMean:
      if (!(value > 0)) throw std::invalid_argument("misspec: reliability mean must be > 0");
      altered.beta_tau = altered.alpha_tau / value;
      break;
    case MisspecKnob::ReliabilityVariance: {
      if (!(value > 0)) throw std::invalid_argument("misspec: reliability variance must be > 0");
      const double mean = base.alpha_tau / base.beta_tau;
      altered.beta_tau = mean / value;
      altered.alpha_tau = mean * altered.beta_tau;
      break;
    }
    case MisspecKnob::EffortMean: {
      // hold the Beta variance fixed while moving the mean
      const double n0 = base.alpha_e + base.beta_e;
      const double m0 = base.alpha_e / n0;
      const double variance = m0 * (1.0 - m0) / (n0 + 1.0);
      if (!(value > 0.0 && value < 1.0)) throw std::invalid_argument("misspec: effort mean must be in (0,1)");
      const double n1 = value * (1.0 - value) / variance - 1.0;
      if (!(n1 > 0)) throw std::invalid_argument("misspec: effort mean incompatible with fixed variance");
      altered.alpha_e = value * n1;
      altered.beta_e = (1.0 - value) * n1;
      break;
    }
    case MisspecKnob::LowEffortPrecision:
      if (!(value > 0)) throw std::invalid_argument("misspec: tau_ell must be > 0");
      altered.tau_ell = value;
      break;
  }
  altered.validate();
  MisspecScenario scenario;
  scenario.generator = alter_inference ? base : altered;
  scenario.inference = alter_inference ? altered : base;
  return scenario;
}

}  // namespace pg
