#include "pg/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "pg/posterior.hpp"

namespace pg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void parallel_for(int jobs, int threads, const std::function<void(int)>& fn) {
  if (jobs <= 0) return;
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, jobs);
  if (workers == 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= jobs) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

std::vector<double> average_ranks(std::span<const double> xs) {
  const int n = static_cast<int>(xs.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = 0.5 * (i + j) + 1.0;  // 1-based average rank
    for (int t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}
}  // namespace

GradeMetrics grade_metrics(std::span<const double> posterior_mean, std::span<const int> map_grades,
                           std::span<const double> truth, const Hyperparameters& hp) {
  if (posterior_mean.size() != truth.size() || map_grades.size() != truth.size() || truth.empty())
    throw std::invalid_argument("grade_metrics: misaligned inputs");
  GradeMetrics m;
  double se = 0.0;
  const double n = static_cast<double>(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double err = posterior_mean[i] - truth[i];
    m.mae += std::fabs(err);
    se += err * err;
    m.map_mae += std::fabs(map_grades[i] - truth[i]);
    if (map_grades[i] == nearest_grade(truth[i], hp)) m.accuracy += 1.0;
  }
  m.mae /= n;
  m.rmse = std::sqrt(se / n);
  m.map_mae /= n;
  m.accuracy /= n;
  return m;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("spearman: need >= 2 pairs");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (!(sxx > 0) || !(syy > 0)) throw std::invalid_argument("spearman: zero rank variance");
  return sxy / std::sqrt(sxx * syy);
}

FoldPlan stratified_folds(const IndexedDataset& data, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("stratified_folds: k must be >= 1");
  FoldPlan plan;
  plan.k = k;
  plan.fold_of_pairing.assign(data.pairings.size(), 0);

  std::vector<int> submissions(data.n_submissions);
  std::iota(submissions.begin(), submissions.end(), 0);
  for (std::size_t i = submissions.size(); i > 1; --i)
    std::swap(submissions[i - 1], submissions[rng.below(i)]);

  std::vector<long> load(k, 0);
  std::vector<int> fold_order(k);
  for (int u : submissions) {
    auto groups = data.of_submission[u];
    for (std::size_t i = groups.size(); i > 1; --i)
      std::swap(groups[i - 1], groups[rng.below(i)]);
    // least-loaded distinct folds first; random order among equal loads
    std::iota(fold_order.begin(), fold_order.end(), 0);
    for (std::size_t i = fold_order.size(); i > 1; --i)
      std::swap(fold_order[i - 1], fold_order[rng.below(i)]);
    std::stable_sort(fold_order.begin(), fold_order.end(),
                     [&](int a, int b) { return load[a] < load[b]; });
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      int fold;
      if (gi < static_cast<std::size_t>(k)) {
        fold = fold_order[gi];
      } else {
        fold = fold_order[gi % k];
        ++plan.collisions;
      }
      plan.fold_of_pairing[groups[gi]] = fold;
      ++load[fold];
    }
  }
  return plan;
}

double heldout_loglik(const std::vector<SampleTrace>& traces, const IndexedDataset& data,
                      std::span<const int> held_pairings, const Hyperparameters& hp,
                      const ModelConfig& config) {
  if (traces.empty()) throw std::invalid_argument("heldout_loglik: no traces");
  const double lambda_scale = config.correlation_enabled ? hp.lambda : 1.0;
  std::size_t total_samples = 0;
  for (const auto& t : traces) total_samples += static_cast<std::size_t>(t.kept);
  if (total_samples == 0) throw std::invalid_argument("heldout_loglik: empty traces");

  std::vector<double> log_terms(total_samples);
  double total = 0.0;
  for (int p : held_pairings) {
    const auto& pairing = data.pairings[p];
    const int u = pairing.submission;
    const int v = pairing.grader;
    for (int c = 0; c < data.components; ++c) {
      const int r = pairing.reports[c];
      std::size_t at = 0;
      for (const auto& t : traces) {
        for (int kk = 0; kk < t.kept; ++kk) {
          const double s = t.true_grade[static_cast<std::size_t>(kk) * t.n_grade_vars + data.grade_var(u, c)];
          const double tau = t.reliability[static_cast<std::size_t>(kk) * t.n_graders + v];
          const double b = t.bias[static_cast<std::size_t>(kk) * t.n_graders + v];
          const double e = config.effort_enabled
                               ? t.effort_prob[static_cast<std::size_t>(kk) * t.n_graders + v]
                               : 1.0;
          double term;
          if (config.censoring_enabled) {
            term = e * report_likelihood(r, s, tau, b, true, hp, lambda_scale);
            if (e < 1.0) term += (1.0 - e) * report_likelihood(r, s, tau, b, false, hp, lambda_scale);
          } else {
            term = e * report_density_uncensored(r, s, tau, b, true, hp, lambda_scale);
            if (e < 1.0) term += (1.0 - e) * report_density_uncensored(r, s, tau, b, false, hp, lambda_scale);
          }
          log_terms[at++] = std::log(term);
        }
      }
      double max_lt = -kInf;
      for (double lt : log_terms) max_lt = std::max(max_lt, lt);
      if (max_lt == -kInf) {
        total = -kInf;
        continue;
      }
      double acc = 0.0;
      for (double lt : log_terms) acc += std::exp(lt - max_lt);
      total += max_lt + std::log(acc / static_cast<double>(total_samples));
    }
  }
  return total;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // continued fraction (modified Lentz)
  auto betacf = [](double aa, double bb, double xx) {
    const int max_iter = 300;
    const double eps = 1e-14, fpmin = 1e-300;
    const double qab = aa + bb, qap = aa + 1.0, qam = aa - 1.0;
    double c = 1.0, d = 1.0 - qab * xx / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
      const int m2 = 2 * m;
      double num = m * (bb - m) * xx / ((qam + m2) * (aa + m2));
      d = 1.0 + num * d;
      if (std::fabs(d) < fpmin) d = fpmin;
      c = 1.0 + num / c;
      if (std::fabs(c) < fpmin) c = fpmin;
      d = 1.0 / d;
      h *= d * c;
      num = -(aa + m) * (qab + m) * xx / ((aa + m2) * (qap + m2));
      d = 1.0 + num * d;
      if (std::fabs(d) < fpmin) d = fpmin;
      c = 1.0 + num / c;
      if (std::fabs(c) < fpmin) c = fpmin;
      d = 1.0 / d;
      const double del = d * c;
      h *= del;
      if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
  };
  const double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                        b * std::log1p(-x);
  const double bt = std::exp(log_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0)) throw std::invalid_argument("student_t_cdf: dof must be > 0");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
  return t >= 0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("student_t_quantile: p in (0,1)");
  double lo = -1e6, hi = 1e6;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, dof) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: length mismatch");
  const int n = static_cast<int>(a.size());
  if (n < 2) throw std::invalid_argument("paired_t_test: need >= 2 pairs");
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1));
  TTestResult res;
  if (sd == 0.0) {
    if (mean == 0.0) {
      res.t = 0.0;
      res.p = 1.0;
    } else {
      res.t = mean > 0 ? kInf : -kInf;
      res.p = 0.0;
    }
    return res;
  }
  res.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  res.p = 2.0 * (1.0 - student_t_cdf(std::fabs(res.t), n - 1));
  return res;
}

TaBenchmark ta_benchmark_mae(double reliability, const Hyperparameters& hp, long trials, Rng& rng) {
  if (!(reliability > 0)) throw std::invalid_argument("ta_benchmark_mae: reliability must be > 0");
  if (trials < 1) throw std::invalid_argument("ta_benchmark_mae: trials must be >= 1");
  TaBenchmark out;
  for (long i = 0; i < trials; ++i) {
    const double s = rng.normal(hp.mu_s, 1.0 / hp.tau_s);
    const int report = nearest_grade(s + rng.normal(0.0, 1.0 / reliability), hp);
    out.mae += std::fabs(report - nearest_grade(s, hp));
    out.mae_vs_true += std::fabs(report - s);
  }
  out.mae /= static_cast<double>(trials);
  out.mae_vs_true /= static_cast<double>(trials);
  return out;
}

namespace {

struct CellTruth {
  std::vector<double> grade_truth;                 // aligned with grade vars
  std::vector<double> student_tau, student_e, student_b;
  std::vector<int> student_index;                  // grader indices of students
};

CellTruth align_truth(const GroundTruth& gt, const IndexedDataset& idx) {
  CellTruth t;
  t.grade_truth.resize(idx.n_grade_vars());
  for (int u = 0; u < idx.n_submissions; ++u) {
    const auto& truth = gt.true_grade.at(idx.submission_ids[u]);
    for (int c = 0; c < idx.components; ++c) t.grade_truth[idx.grade_var(u, c)] = truth[c];
  }
  for (int v = 0; v < idx.n_graders; ++v) {
    if (idx.role[v] != Role::Student) continue;
    const auto& id = idx.grader_ids[v];
    t.student_index.push_back(v);
    t.student_tau.push_back(gt.reliability.at(id));
    t.student_e.push_back(gt.effort_prob.at(id));
    t.student_b.push_back(gt.bias.at(id));
  }
  return t;
}

}  // namespace

MetricReport run_recovery_cell(const ClassSpec& base, const Hyperparameters& inference_hp,
                               const ModelConfig& config, std::uint64_t cell_seed,
                               bool with_mip, const MipConstants& mip, int threads) {
  ClassSpec spec = base;
  std::uint64_t state = cell_seed;
  spec.seed = splitmix64(state);
  ModelConfig cfg = config;
  cfg.seed = splitmix64(state);

  const GroundTruth gt = generate_class(spec);
  const IndexedDataset idx = index_dataset(gt.dataset, inference_hp);
  const ClampSet clamps = default_clamps(gt.dataset);
  const auto traces = run_chains(idx, inference_hp, cfg, clamps, threads);
  const PosteriorSummary summary = summarize(traces, idx, inference_hp);
  const CellTruth truth = align_truth(gt, idx);

  MetricReport report;
  std::vector<double> means(idx.n_grade_vars());
  for (int g = 0; g < idx.n_grade_vars(); ++g) means[g] = summary.true_grade[g].mean;
  const GradeMetrics gm = grade_metrics(means, summary.map_grade, truth.grade_truth, inference_hp);
  report.true_grade_mae = gm.mae;
  report.true_grade_rmse = gm.rmse;
  report.accuracy = gm.accuracy;
  report.map_mae = gm.map_mae;

  std::vector<double> est_tau, est_e;
  double bias_mae = 0.0;
  for (std::size_t i = 0; i < truth.student_index.size(); ++i) {
    const int v = truth.student_index[i];
    est_tau.push_back(summary.reliability[v].mean);
    est_e.push_back(summary.effort_prob[v].mean);
    bias_mae += std::fabs(summary.bias[v].mean - truth.student_b[i]);
  }
  if (truth.student_index.size() >= 2) {
    report.reliability_spearman = spearman(est_tau, truth.student_tau);
    report.effort_spearman = spearman(est_e, truth.student_e);
    report.bias_mae = bias_mae / static_cast<double>(truth.student_index.size());
  }

  if (with_mip) {
    const ExplainReport ex = explain_all(summary, idx, mip);
    report.mip_map_disagreement = ex.map_disagreement;
    double mip_mae = 0.0;
    long n_components = 0;
    double matches = 0.0;
    long singles = 0;
    for (const auto& item : ex.items) {
      const int u = idx.submission_index.at(item.submission_id);
      const bool single = item.grader_ids.size() == 1;
      for (int c = 0; c < idx.components; ++c) {
        mip_mae += std::fabs(item.solution.grades[c] - truth.grade_truth[idx.grade_var(u, c)]);
        ++n_components;
        if (single) {
          ++singles;
          // the lone grader's report per component
          const int p = idx.of_submission[u][0];
          if (item.solution.grades[c] == idx.pairings[p].reports[c]) matches += 1.0;
        }
      }
    }
    if (n_components > 0) report.mip_mae = mip_mae / static_cast<double>(n_components);
    if (singles > 0) report.mip_matches_report = matches / static_cast<double>(singles);
  }
  return report;
}

namespace {

std::vector<double> collect(const std::vector<MetricReport>& reports,
                            double MetricReport::* field) {
  std::vector<double> xs;
  for (const auto& r : reports) {
    const double v = r.*field;
    if (!std::isnan(v)) xs.push_back(v);
  }
  return xs;
}

void aggregate(const std::vector<MetricReport>& cells, ExperimentRow& row) {
  constexpr double MetricReport::* fields[] = {
      &MetricReport::true_grade_mae,  &MetricReport::true_grade_rmse,
      &MetricReport::accuracy,        &MetricReport::map_mae,
      &MetricReport::reliability_spearman, &MetricReport::effort_spearman,
      &MetricReport::bias_mae,        &MetricReport::heldout_loglik,
      &MetricReport::mip_mae,         &MetricReport::mip_map_disagreement,
      &MetricReport::mip_matches_report,   &MetricReport::p_vs_full,
  };
  for (auto field : fields) {
    const auto xs = collect(cells, field);
    if (xs.empty()) continue;
    double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    row.mean.*field = mean;
    if (xs.size() >= 2) {
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      const double sd = std::sqrt(ss / (xs.size() - 1.0));
      const double tq = student_t_quantile(0.975, static_cast<double>(xs.size() - 1));
      row.ci95.*field = tq * sd / std::sqrt(static_cast<double>(xs.size()));
    } else {
      row.ci95.*field = 0.0;
    }
  }
  row.replicates = static_cast<int>(cells.size());
}

std::vector<ExperimentRow> run_ablation(const ExperimentRequest& req) {
  struct Variant {
    std::string label;
    bool effort, censoring;
  };
  const std::vector<Variant> variants = {
      {"full", true, true}, {"no-censoring", true, false}, {"no-effort", false, true}};

  std::vector<ExperimentRow> rows(variants.size());
  std::vector<std::vector<MetricReport>> cells(variants.size());

  std::uint64_t state = req.seed;
  for (int rep = 0; rep < req.replicates; ++rep) {
    ClassSpec spec = req.base;
    spec.seed = splitmix64(state);
    const std::uint64_t fold_seed = splitmix64(state);
    std::vector<std::uint64_t> run_seeds(variants.size() * req.xval_k);
    for (auto& s : run_seeds) s = splitmix64(state);

    const GroundTruth gt = generate_class(spec);
    const IndexedDataset full_idx = index_dataset(gt.dataset, req.base.hp);
    const ClampSet clamps = default_clamps(gt.dataset);
    Rng fold_rng(fold_seed);
    const FoldPlan plan = stratified_folds(full_idx, req.xval_k, fold_rng);

    // per variant, per fold: train on the complement, score the fold
    std::vector<std::vector<double>> fold_loglik(variants.size(),
                                                 std::vector<double>(req.xval_k, 0.0));
    parallel_for(static_cast<int>(variants.size()) * req.xval_k, req.threads, [&](int job) {
      const int vi = job / req.xval_k;
      const int fold = job % req.xval_k;
      Dataset train = gt.dataset;
      train.records.clear();
      std::vector<int> held;
      for (std::size_t p = 0; p < full_idx.pairings.size(); ++p) {
        if (plan.fold_of_pairing[p] == fold) {
          held.push_back(static_cast<int>(p));
          continue;
        }
        const auto& pairing = full_idx.pairings[p];
        for (int c = 0; c < full_idx.components; ++c) {
          GradeRecord rec;
          rec.submission_id = full_idx.submission_ids[pairing.submission];
          rec.grader_id = full_idx.grader_ids[pairing.grader];
          rec.component = c;
          rec.reported_grade = pairing.reports[c];
          train.records.push_back(std::move(rec));
        }
      }
      const IndexedDataset train_idx = index_dataset(train, req.base.hp);
      ModelConfig cfg = req.config;
      cfg.effort_enabled = variants[vi].effort;
      cfg.censoring_enabled = variants[vi].censoring;
      cfg.seed = run_seeds[static_cast<std::size_t>(vi) * req.xval_k + fold];
      const auto traces = run_chains(train_idx, req.base.hp, cfg, clamps, 1);
      ModelConfig score_cfg = cfg;
      fold_loglik[vi][fold] = heldout_loglik(traces, full_idx, held, req.base.hp, score_cfg);
    });

    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      MetricReport r;
      r.heldout_loglik = std::accumulate(fold_loglik[vi].begin(), fold_loglik[vi].end(), 0.0);
      if (vi > 0) r.p_vs_full = paired_t_test(fold_loglik[0], fold_loglik[vi]).p;
      cells[vi].push_back(r);
    }
  }

  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    rows[vi].label = variants[vi].label;
    rows[vi].setting = static_cast<double>(vi);
    aggregate(cells[vi], rows[vi]);
  }
  return rows;
}

}  // namespace

std::vector<ExperimentRow> run_experiment(const ExperimentRequest& req) {
  req.base.validate();
  req.config.validate();
  if (req.replicates < 1) throw std::invalid_argument("run_experiment: replicates must be >= 1");
  if (req.kind == ExperimentKind::Ablation) return run_ablation(req);
  if (req.settings.empty()) throw std::invalid_argument("run_experiment: no settings");

  const int n_settings = static_cast<int>(req.settings.size());
  const int n_cells = n_settings * req.replicates;
  std::vector<std::uint64_t> seeds(n_cells);
  std::uint64_t state = req.seed;
  for (auto& s : seeds) s = splitmix64(state);

  std::vector<MetricReport> cells(n_cells);
  parallel_for(n_cells, req.threads, [&](int job) {
    const int si = job / req.replicates;
    const double setting = req.settings[si];
    ClassSpec spec = req.base;
    Hyperparameters inference_hp = req.base.hp;
    bool with_mip = false;
    switch (req.kind) {
      case ExperimentKind::VaryWeeks:
        spec.weeks = static_cast<int>(setting);
        break;
      case ExperimentKind::VaryGradersPerSubmission:
        spec.grades_per_submission = static_cast<int>(setting);
        break;
      case ExperimentKind::Misspec: {
        const MisspecScenario sc = misspec_scenario(req.base.hp, req.knob, setting, req.alter_inference);
        spec.hp = sc.generator;
        inference_hp = sc.inference;
        break;
      }
      case ExperimentKind::MipStability:
        spec.grades_per_submission = static_cast<int>(setting);
        with_mip = true;
        break;
      case ExperimentKind::Ablation:
        break;  // handled above
    }
    cells[job] = run_recovery_cell(spec, inference_hp, req.config, seeds[job], with_mip, req.mip, 1);
  });

  std::vector<ExperimentRow> rows(n_settings);
  for (int si = 0; si < n_settings; ++si) {
    rows[si].setting = req.settings[si];
    rows[si].label = std::to_string(req.settings[si]);
    std::vector<MetricReport> group(cells.begin() + static_cast<std::ptrdiff_t>(si) * req.replicates,
                                    cells.begin() + static_cast<std::ptrdiff_t>(si + 1) * req.replicates);
    aggregate(group, rows[si]);
  }
  return rows;
}

}  // namespace pg
