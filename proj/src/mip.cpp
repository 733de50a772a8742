#include "pg/mip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pg/simplex.hpp"

namespace pg {

namespace {
constexpr double kTieEps = 1e-9;
constexpr double kFeasEps = 1e-9;
constexpr int kMaxGraders = 8;

void validate_instance(const MipInstance& inst) {
  const int n = static_cast<int>(inst.reports.size());
  if (n < 1) throw std::invalid_argument("mip: at least one grader required");
  if (n > kMaxGraders) throw std::invalid_argument("mip: more than 8 graders per submission is unsupported");
  const int C = static_cast<int>(inst.masses.size());
  if (C < 1) throw std::invalid_argument("mip: at least one component required");
  for (const auto& r : inst.reports)
    if (static_cast<int>(r.size()) != C) throw std::invalid_argument("mip: report row width mismatch");
  for (const auto& m : inst.masses)
    if (m.size() != inst.grade_domain.size()) throw std::invalid_argument("mip: mass row width mismatch");
  if (static_cast<int>(inst.desired.size()) != n) throw std::invalid_argument("mip: desired weight count mismatch");
  double sum = 0.0;
  for (double d : inst.desired) {
    if (d < -1e-12 || d > 1.0 + 1e-12) throw std::invalid_argument("mip: desired weight outside [0,1]");
    sum += d;
  }
  if (std::fabs(sum - 1.0) > 1e-6) throw std::invalid_argument("mip: desired weights must sum to 1");
  const auto& k = inst.constants;
  if (!(k.min_weight > 0.0 && k.min_weight <= 1.0)) throw std::invalid_argument("mip: T must be in (0,1]");
  if (k.max_shift < 0.0) throw std::invalid_argument("mip: S must be >= 0");
  if (k.penalty < 0.0) throw std::invalid_argument("mip: P must be >= 0");
  if (inst.grade_domain.empty() || !std::is_sorted(inst.grade_domain.begin(), inst.grade_domain.end()))
    throw std::invalid_argument("mip: grade domain must be sorted and nonempty");
}

// Extremes of sum(w*r) over the box intersected with the simplex, by greedy
// mass shifting.
std::pair<double, double> average_range(std::span<const double> lo, std::span<const double> hi,
                                        std::span<const double> reports) {
  const int k = static_cast<int>(lo.size());
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return reports[a] < reports[b]; });

  auto extreme = [&](bool maximize) {
    double slack = 1.0;
    std::vector<double> w(lo.begin(), lo.end());
    for (double x : w) slack -= x;
    // give remaining mass to the cheapest (or dearest) reports first
    for (int i = 0; i < k && slack > 1e-15; ++i) {
      const int v = maximize ? order[k - 1 - i] : order[i];
      const double add = std::min(slack, hi[v] - lo[v]);
      w[v] += add;
      slack -= add;
    }
    double avg = 0.0;
    for (int v = 0; v < k; ++v) avg += w[v] * reports[v];
    return avg;
  };
  return {extreme(false), extreme(true)};
}
}  // namespace

std::vector<double> desired_weights(std::span<const double> reliability,
                                    std::span<const double> effort) {
  if (reliability.size() != effort.size() || reliability.empty())
    throw std::invalid_argument("desired_weights: mismatched inputs");
  std::vector<double> w(reliability.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(reliability[i] > 0.0)) throw std::invalid_argument("desired_weights: reliability must be > 0");
    if (effort[i] < 0.0 || effort[i] > 1.0) throw std::invalid_argument("desired_weights: effort outside [0,1]");
    w[i] = reliability[i] * effort[i];
    total += w[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("desired_weights: all reliability*effort products are zero");
  for (double& x : w) x /= total;
  return w;
}

MipSolution solve(const MipInstance& inst) {
  validate_instance(inst);
  const int n = static_cast<int>(inst.reports.size());
  const int C = static_cast<int>(inst.masses.size());
  const double S = inst.constants.max_shift;
  const double T = inst.constants.min_weight;
  const double P = inst.constants.penalty;

  double best_mass_possible = 0.0;
  for (int c = 0; c < C; ++c)
    best_mass_possible += *std::max_element(inst.masses[c].begin(), inst.masses[c].end());

  MipSolution best;
  best.status = MipStatus::Infeasible;
  double best_obj = -std::numeric_limits<double>::infinity();
  double best_dev = std::numeric_limits<double>::infinity();

  std::vector<int> support;
  std::vector<double> lo, hi, rep_c;
  for (int mask = 1; mask < (1 << n); ++mask) {
    support.clear();
    double out_penalty = 0.0;
    bool feasible = true;
    for (int v = 0; v < n; ++v) {
      if (mask & (1 << v)) {
        support.push_back(v);
      } else {
        if (inst.desired[v] > S + kFeasEps) {
          feasible = false;
          break;
        }
        out_penalty += inst.desired[v];
      }
    }
    if (!feasible) continue;
    if (best_mass_possible - P * out_penalty < best_obj - kTieEps) continue;

    const int k = static_cast<int>(support.size());
    lo.resize(k);
    hi.resize(k);
    double sum_lo = 0.0, sum_hi = 0.0;
    for (int i = 0; i < k; ++i) {
      const double d = inst.desired[support[i]];
      lo[i] = std::max(T, d - S);
      hi[i] = std::min(1.0, d + S);
      if (lo[i] > hi[i] + kFeasEps) {
        feasible = false;
        break;
      }
      sum_lo += lo[i];
      sum_hi += hi[i];
    }
    if (!feasible || sum_lo > 1.0 + kFeasEps || sum_hi < 1.0 - kFeasEps) continue;

    // candidate grades per component from the reachable average interval
    std::vector<std::vector<int>> candidates(C);
    bool any_empty = false;
    for (int c = 0; c < C && !any_empty; ++c) {
      rep_c.resize(k);
      for (int i = 0; i < k; ++i) rep_c[i] = inst.reports[support[i]][c];
      auto [a, b] = average_range(lo, hi, rep_c);
      for (std::size_t gi = 0; gi < inst.grade_domain.size(); ++gi) {
        const double g = inst.grade_domain[gi];
        if (g + 0.5 >= a - kFeasEps && g - 0.5 <= b + kFeasEps)
          candidates[c].push_back(static_cast<int>(gi));
      }
      if (candidates[c].empty()) any_empty = true;
    }
    if (any_empty) continue;

    // odometer over candidate grade vectors
    std::vector<int> pos(C, 0);
    for (;;) {
      double mass_sum = 0.0;
      for (int c = 0; c < C; ++c) mass_sum += inst.masses[c][candidates[c][pos[c]]];
      if (mass_sum - P * out_penalty >= best_obj - kTieEps) {
        // inner LP: minimize total deviation of in-support weights
        // vars: w_0..w_{k-1}, p_0..p_{k-1}, n_0..n_{k-1}
        LpProblem lp;
        lp.n_vars = 3 * k;
        lp.cost.assign(3 * k, 0.0);
        for (int i = 0; i < k; ++i) lp.cost[k + i] = lp.cost[2 * k + i] = 1.0;
        {
          std::vector<double> row(3 * k, 0.0);
          for (int i = 0; i < k; ++i) row[i] = 1.0;
          lp.add_eq(row, 1.0);
        }
        for (int i = 0; i < k; ++i) {
          std::vector<double> row(3 * k, 0.0);
          row[i] = 1.0;
          row[k + i] = -1.0;
          row[2 * k + i] = 1.0;
          lp.add_eq(row, inst.desired[support[i]]);
        }
        for (int i = 0; i < k; ++i) {
          std::vector<double> up(3 * k, 0.0), down(3 * k, 0.0);
          up[i] = 1.0;
          lp.add_le(up, hi[i]);
          down[i] = -1.0;
          lp.add_le(down, -lo[i]);
          std::vector<double> pcap(3 * k, 0.0), ncap(3 * k, 0.0);
          pcap[k + i] = 1.0;
          lp.add_le(pcap, S);
          ncap[2 * k + i] = 1.0;
          lp.add_le(ncap, S);
        }
        for (int c = 0; c < C; ++c) {
          const double g = inst.grade_domain[candidates[c][pos[c]]];
          std::vector<double> up(3 * k, 0.0), down(3 * k, 0.0);
          for (int i = 0; i < k; ++i) up[i] = inst.reports[support[i]][c];
          lp.add_le(up, g + 0.5);
          for (int i = 0; i < k; ++i) down[i] = -inst.reports[support[i]][c];
          lp.add_le(down, -(g - 0.5));
        }
        const LpResult lpr = solve_lp(lp);
        if (lpr.status == LpStatus::Optimal) {
          const double dev = lpr.objective + out_penalty;
          const double obj = mass_sum - P * dev;
          std::vector<int> grades(C);
          for (int c = 0; c < C; ++c) grades[c] = inst.grade_domain[candidates[c][pos[c]]];
          bool take = false;
          if (obj > best_obj + kTieEps) {
            take = true;
          } else if (obj >= best_obj - kTieEps) {
            if (dev < best_dev - kTieEps)
              take = true;
            else if (dev <= best_dev + kTieEps && best.status == MipStatus::Optimal)
              take = grades < best.grades;
          }
          if (take) {
            best.status = MipStatus::Optimal;
            best_obj = obj;
            best_dev = dev;
            best.objective = obj;
            best.total_deviation = dev;
            best.grades = std::move(grades);
            best.weights.assign(n, 0.0);
            for (int i = 0; i < k; ++i) best.weights[support[i]] = lpr.x[i];
          }
        }
      }
      // advance odometer
      int c = 0;
      while (c < C) {
        if (++pos[c] < static_cast<int>(candidates[c].size())) break;
        pos[c] = 0;
        ++c;
      }
      if (c == C) break;
    }
  }

  if (best.status == MipStatus::Optimal) {
    best.slacks.assign(C, 0.0);
    for (int c = 0; c < C; ++c) {
      double avg = 0.0;
      for (int v = 0; v < n; ++v) avg += best.weights[v] * inst.reports[v][c];
      best.slacks[c] = std::clamp(best.grades[c] - avg, -0.5, 0.5);
    }
    best.dev_pos.assign(n, 0.0);
    best.dev_neg.assign(n, 0.0);
    for (int v = 0; v < n; ++v) {
      const double d = best.weights[v] - inst.desired[v];
      best.dev_pos[v] = std::max(d, 0.0);
      best.dev_neg[v] = std::max(-d, 0.0);
    }
  }
  return best;
}

ExplainReport explain_all(const PosteriorSummary& summary, const IndexedDataset& data,
                          const MipConstants& constants) {
  if (static_cast<int>(summary.true_grade.size()) != data.n_grade_vars() ||
      static_cast<int>(summary.reliability.size()) != data.n_graders)
    throw std::invalid_argument("explain_all: summary does not cover the dataset");

  ExplainReport report;
  long total_components = 0, disagreements = 0;
  for (int u = 0; u < data.n_submissions; ++u) {
    if (data.of_submission[u].empty()) continue;
    std::vector<int> pair_ids = data.of_submission[u];
    std::sort(pair_ids.begin(), pair_ids.end(),
              [&](int a, int b) { return data.pairings[a].grader < data.pairings[b].grader; });

    MipInstance inst;
    inst.constants = constants;
    inst.grade_domain = summary.grade_set;
    std::vector<double> rel, eff;
    for (int p : pair_ids) {
      const auto& pairing = data.pairings[p];
      inst.grader_ids.push_back(data.grader_ids[pairing.grader]);
      inst.reports.emplace_back(pairing.reports.begin(), pairing.reports.end());
      rel.push_back(summary.reliability[pairing.grader].mean);
      eff.push_back(summary.effort_prob[pairing.grader].mean);
    }
    inst.desired = desired_weights(rel, eff);
    inst.masses.resize(data.components);
    for (int c = 0; c < data.components; ++c) inst.masses[c] = summary.masses[data.grade_var(u, c)];

    Explanation item;
    item.submission_id = data.submission_ids[u];
    item.grader_ids = inst.grader_ids;
    item.solution = solve(inst);
    item.map_grades.resize(data.components);
    for (int c = 0; c < data.components; ++c) {
      item.map_grades[c] = summary.map_grade[data.grade_var(u, c)];
      if (item.solution.status == MipStatus::Optimal) {
        ++total_components;
        if (item.solution.grades[c] != item.map_grades[c]) ++disagreements;
      }
    }
    report.items.push_back(std::move(item));
  }
  report.map_disagreement =
      total_components > 0 ? static_cast<double>(disagreements) / total_components : 0.0;
  return report;
}

}  // namespace pg
