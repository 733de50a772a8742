#include "pg/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pg {

double quantile_sorted(std::span<const double> sorted, double p) {
  const int n = static_cast<int>(sorted.size());
  if (n == 0) throw std::invalid_argument("quantile of empty sample");
  if (n == 1) return sorted[0];
  const double h = n * p - 0.5;  // 0-based position
  if (h <= 0.0) return sorted.front();
  if (h >= n - 1) return sorted.back();
  const int i = static_cast<int>(h);
  const double f = h - i;
  return sorted[i] + f * (sorted[i + 1] - sorted[i]);
}

VarStats var_stats(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("var_stats of empty sample");
  VarStats st;
  const double n = static_cast<double>(samples.size());
  st.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - st.mean) * (x - st.mean);
  st.sd = samples.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::sort(samples.begin(), samples.end());
  st.q05 = quantile_sorted(samples, 0.05);
  st.q10 = quantile_sorted(samples, 0.10);
  st.q50 = quantile_sorted(samples, 0.50);
  st.q90 = quantile_sorted(samples, 0.90);
  st.q95 = quantile_sorted(samples, 0.95);
  return st;
}

std::vector<double> interval_masses(std::span<const double> samples, const Hyperparameters& hp) {
  if (samples.empty()) throw std::invalid_argument("interval_masses of empty sample");
  std::vector<double> mass(hp.grade_set.size(), 0.0);
  for (double x : samples) {
    const int g = nearest_grade(x, hp);
    const auto it = std::lower_bound(hp.grade_set.begin(), hp.grade_set.end(), g);
    mass[static_cast<std::size_t>(it - hp.grade_set.begin())] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  for (double& m : mass) m /= n;
  return mass;
}

int map_grade(std::span<const double> masses, const std::vector<int>& grade_set) {
  if (masses.size() != grade_set.size() || masses.empty())
    throw std::invalid_argument("map_grade: mass vector does not match grade set");
  std::size_t best = 0;
  for (std::size_t k = 1; k < masses.size(); ++k) {
    if (masses[k] > masses[best]) best = k;  // strict: ties keep the lower grade
  }
  return grade_set[best];
}

PosteriorSummary summarize(const std::vector<SampleTrace>& traces, const IndexedDataset& data,
                           const Hyperparameters& hp) {
  if (traces.empty()) throw std::invalid_argument("summarize: no traces");
  for (const auto& t : traces) {
    if (t.n_grade_vars != data.n_grade_vars() || t.n_graders != data.n_graders)
      throw std::invalid_argument("summarize: trace shape does not match dataset");
  }
  std::size_t total = 0;
  for (const auto& t : traces) total += static_cast<std::size_t>(t.kept);
  if (total == 0) throw std::invalid_argument("summarize: traces hold no samples");

  PosteriorSummary out;
  out.components = data.components;
  out.grade_set = hp.grade_set;
  out.submission_ids = data.submission_ids;
  out.grader_ids = data.grader_ids;

  std::vector<double> buf(total);
  auto gather = [&](auto member, int stride, int var) -> std::vector<double>& {
    std::size_t at = 0;
    for (const auto& t : traces) {
      const auto& arr = t.*member;
      for (int k = 0; k < t.kept; ++k) buf[at++] = arr[static_cast<std::size_t>(k) * stride + var];
    }
    return buf;
  };

  const int n_grade = data.n_grade_vars();
  out.true_grade.resize(n_grade);
  out.masses.resize(n_grade);
  out.map_grade.resize(n_grade);
  for (int g = 0; g < n_grade; ++g) {
    auto& samples = gather(&SampleTrace::true_grade, n_grade, g);
    out.masses[g] = interval_masses(samples, hp);
    out.map_grade[g] = map_grade(out.masses[g], hp.grade_set);
    out.true_grade[g] = var_stats(samples);
  }
  out.reliability.resize(data.n_graders);
  out.bias.resize(data.n_graders);
  out.effort_prob.resize(data.n_graders);
  for (int v = 0; v < data.n_graders; ++v) {
    out.reliability[v] = var_stats(gather(&SampleTrace::reliability, data.n_graders, v));
    out.bias[v] = var_stats(gather(&SampleTrace::bias, data.n_graders, v));
    out.effort_prob[v] = var_stats(gather(&SampleTrace::effort_prob, data.n_graders, v));
  }
  return out;
}

std::vector<std::string> rank_graders(const PosteriorSummary& summary, RankKey key) {
  const int n = static_cast<int>(summary.grader_ids.size());
  auto key_of = [&](int v) {
    switch (key) {
      case RankKey::ReliabilityMean: return summary.reliability[v].mean;
      case RankKey::EffortMean: return summary.effort_prob[v].mean;
      case RankKey::PessimisticReliability: return summary.reliability[v].q10;
      case RankKey::OptimisticReliability: return summary.reliability[v].q90;
    }
    return 0.0;
  };
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ka = key_of(a), kb = key_of(b);
    if (ka != kb) return ka > kb;
    return summary.grader_ids[a] < summary.grader_ids[b];
  });
  std::vector<std::string> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = summary.grader_ids[order[i]];
  return ids;
}

}  // namespace pg
