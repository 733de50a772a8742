#include "pg/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pg {

std::string role_name(Role role) {
  switch (role) {
    case Role::Student: return "student";
    case Role::TA: return "ta";
    case Role::Instructor: return "instructor";
  }
  return "student";
}

std::optional<Role> parse_role(const std::string& name) {
  if (name == "student" || name == "Student") return Role::Student;
  if (name == "ta" || name == "TA" || name == "Ta") return Role::TA;
  if (name == "instructor" || name == "Instructor") return Role::Instructor;
  return std::nullopt;
}

void Hyperparameters::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0)) throw std::invalid_argument(std::string(what) + " must be > 0");
  };
  positive(tau_s, "tau_s");
  positive(alpha_tau, "alpha_tau");
  positive(beta_tau, "beta_tau");
  positive(tau_b, "tau_b");
  positive(alpha_e, "alpha_e");
  positive(beta_e, "beta_e");
  positive(tau_ell, "tau_ell");
  positive(beta_0, "beta_0");
  positive(lambda, "lambda");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0,1]");
  if (max_grade <= 0) throw std::invalid_argument("max_grade must be > 0");
  if (components <= 0) throw std::invalid_argument("components must be > 0");
  if (grade_set.empty()) throw std::invalid_argument("grade_set must be nonempty");
  if (!std::is_sorted(grade_set.begin(), grade_set.end()) ||
      std::adjacent_find(grade_set.begin(), grade_set.end()) != grade_set.end())
    throw std::invalid_argument("grade_set must be strictly increasing");
  if (grade_set.front() < 0) throw std::invalid_argument("grade_set minimum must be >= 0");
  if (grade_set.back() != max_grade) throw std::invalid_argument("grade_set maximum must equal max_grade");
}

void ModelConfig::validate() const {
  if (sampling.chains <= 0) throw std::invalid_argument("sampling.chains must be > 0");
  if (sampling.samples <= 0) throw std::invalid_argument("sampling.samples must be > 0");
  if (sampling.burn_in < 0 || sampling.burn_in >= sampling.samples)
    throw std::invalid_argument("sampling.burn_in must lie in [0, samples)");
  if (grids.true_grade.count < 2 || grids.reliability.count < 2 || grids.bias.count < 2)
    throw std::invalid_argument("grids need at least 2 points");
  if (!(grids.reliability.lo > 0)) throw std::invalid_argument("reliability grid must be positive");
}

Hyperparameters preset_hyperparameters(const std::string& name) {
  // Shared best-fit priors; the class-specific presets differ only in the
  // bias and low-effort precisions.
  Hyperparameters hp;
  hp.mu_s = 4.0;
  hp.tau_s = tau_from_sigma(0.8);
  hp.alpha_tau = 2.0;
  hp.beta_tau = 2.0;
  hp.alpha_e = 8.0;
  hp.beta_e = 2.0;
  hp.epsilon = 0.05;
  hp.max_grade = 5;
  hp.components = 4;
  hp.grade_set = {0, 1, 2, 3, 4, 5};
  if (name == "paper-default" || name == "winter21") {
    hp.tau_b = tau_from_sigma(1.0);
    hp.tau_ell = 1.0;
    return hp;
  }
  if (name == "fall18-19") {
    hp.tau_b = tau_from_sigma(0.1);
    hp.tau_ell = 1.0;
    return hp;
  }
  if (name == "fall21") {
    hp.tau_b = tau_from_sigma(1.0);
    hp.tau_ell = 4.0;
    return hp;
  }
  throw std::invalid_argument("unknown hyperparameter preset: " + name);
}

std::vector<std::string> preset_names() { return {"paper-default", "winter21", "fall18-19", "fall21"}; }

ClampSet default_clamps(const Dataset& dataset) {
  ClampSet clamps;
  for (const auto& [grader, role] : dataset.roles) {
    if (role == Role::TA || role == Role::Instructor) clamps.effort[grader] = 1.0;
    if (role == Role::Instructor) clamps.reliability[grader] = 16.0;
  }
  return clamps;
}

std::vector<std::string> validate_dataset(const Dataset& dataset, const Hyperparameters& hp) {
  std::vector<std::string> violations;
  std::set<std::string> submission_set(dataset.submissions.begin(), dataset.submissions.end());
  std::set<std::string> grader_set(dataset.graders.begin(), dataset.graders.end());
  if (submission_set.size() != dataset.submissions.size()) violations.push_back("duplicate submission id");
  if (grader_set.size() != dataset.graders.size()) violations.push_back("duplicate grader id");

  std::set<int> grades(hp.grade_set.begin(), hp.grade_set.end());
  std::set<std::tuple<std::string, std::string, int>> seen;
  std::map<std::pair<std::string, std::string>, std::set<int>> pair_components;
  for (const auto& rec : dataset.records) {
    if (!submission_set.count(rec.submission_id))
      violations.push_back("record references unknown submission " + rec.submission_id);
    if (!grader_set.count(rec.grader_id))
      violations.push_back("record references unknown grader " + rec.grader_id);
    if (rec.component < 0 || rec.component >= hp.components)
      violations.push_back("component " + std::to_string(rec.component) + " outside [0," +
                           std::to_string(hp.components) + ") for submission " + rec.submission_id);
    if (!grades.count(rec.reported_grade))
      violations.push_back("grade " + std::to_string(rec.reported_grade) + " out of range for (" +
                           rec.submission_id + "," + rec.grader_id + "," + std::to_string(rec.component) + ")");
    auto key = std::make_tuple(rec.submission_id, rec.grader_id, rec.component);
    if (!seen.insert(key).second)
      violations.push_back("duplicate record (" + rec.submission_id + "," + rec.grader_id + "," +
                           std::to_string(rec.component) + ")");
    pair_components[{rec.submission_id, rec.grader_id}].insert(rec.component);
  }
  for (const auto& [pair, comps] : pair_components) {
    if (static_cast<int>(comps.size()) != hp.components)
      violations.push_back("pairing (" + pair.first + "," + pair.second + ") is missing components: has " +
                           std::to_string(comps.size()) + " of " + std::to_string(hp.components));
    auto author = dataset.authors.find(pair.first);
    if (author != dataset.authors.end() && author->second == pair.second)
      violations.push_back("grader " + pair.second + " grades their own submission " + pair.first);
  }
  for (const auto& [submission, grader] : dataset.authors) {
    if (!submission_set.count(submission)) violations.push_back("authors map references unknown submission " + submission);
    if (!grader_set.count(grader)) violations.push_back("authors map references unknown grader " + grader);
  }
  for (const auto& [grader, role] : dataset.roles) {
    (void)role;
    if (!grader_set.count(grader)) violations.push_back("roles map references unknown grader " + grader);
  }
  return violations;
}

IndexedDataset index_dataset(const Dataset& dataset, const Hyperparameters& hp) {
  auto violations = validate_dataset(dataset, hp);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "invalid dataset (" << violations.size() << " violations):";
    for (const auto& v : violations) msg << "\n  - " << v;
    throw std::invalid_argument(msg.str());
  }

  IndexedDataset idx;
  idx.components = hp.components;
  idx.submission_ids = dataset.submissions;
  idx.grader_ids = dataset.graders;
  idx.n_submissions = static_cast<int>(dataset.submissions.size());
  idx.n_graders = static_cast<int>(dataset.graders.size());
  for (int i = 0; i < idx.n_submissions; ++i) idx.submission_index[idx.submission_ids[i]] = i;
  for (int i = 0; i < idx.n_graders; ++i) idx.grader_index[idx.grader_ids[i]] = i;

  idx.author.assign(idx.n_submissions, -1);
  for (const auto& [submission, grader] : dataset.authors)
    idx.author[idx.submission_index.at(submission)] = idx.grader_index.at(grader);
  idx.role.assign(idx.n_graders, Role::Student);
  for (const auto& [grader, role] : dataset.roles) idx.role[idx.grader_index.at(grader)] = role;

  std::map<std::pair<int, int>, int> pairing_of;
  for (const auto& rec : dataset.records) {
    const int u = idx.submission_index.at(rec.submission_id);
    const int v = idx.grader_index.at(rec.grader_id);
    auto [it, inserted] = pairing_of.try_emplace({u, v}, static_cast<int>(idx.pairings.size()));
    if (inserted) {
      Pairing p;
      p.submission = u;
      p.grader = v;
      p.reports.assign(hp.components, 0);
      idx.pairings.push_back(std::move(p));
    }
    idx.pairings[it->second].reports[rec.component] = rec.reported_grade;
  }
  idx.of_submission.assign(idx.n_submissions, {});
  idx.of_grader.assign(idx.n_graders, {});
  for (int p = 0; p < static_cast<int>(idx.pairings.size()); ++p) {
    idx.of_submission[idx.pairings[p].submission].push_back(p);
    idx.of_grader[idx.pairings[p].grader].push_back(p);
  }
  return idx;
}

}  // namespace pg
