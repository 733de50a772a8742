#include "pg/gibbs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace pg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

int grade_index(int r, const Hyperparameters& hp) {
  auto it = std::lower_bound(hp.grade_set.begin(), hp.grade_set.end(), r);
  if (it == hp.grade_set.end() || *it != r)
    throw std::invalid_argument("grade " + std::to_string(r) + " not in grade set");
  return static_cast<int>(it - hp.grade_set.begin());
}

CensorInterval interval_at(int idx, const Hyperparameters& hp) {
  const auto& g = hp.grade_set;
  CensorInterval iv;
  iv.lo = idx == 0 ? -kInf : 0.5 * (g[idx - 1] + g[idx]);
  iv.hi = idx + 1 == static_cast<int>(g.size()) ? kInf : 0.5 * (g[idx] + g[idx + 1]);
  return iv;
}
}  // namespace

CensorInterval censor_interval(int r, const Hyperparameters& hp) {
  return interval_at(grade_index(r, hp), hp);
}

int nearest_grade(double g, const Hyperparameters& hp) {
  const auto& gs = hp.grade_set;
  // cell boundaries are the midpoints; a value exactly on a midpoint rounds up
  int idx = 0;
  while (idx + 1 < static_cast<int>(gs.size()) && g >= 0.5 * (gs[idx] + gs[idx + 1])) ++idx;
  return gs[idx];
}

LowEffortSpec low_effort_spec(const Hyperparameters& hp) {
  return LowEffortSpec{hp.mu_s, hp.tau_ell, hp.epsilon, static_cast<double>(hp.max_grade)};
}

double report_likelihood(int r, double s, double tau, double b, bool effort,
                         const Hyperparameters& hp, double lambda_scale) {
  const CensorInterval iv = censor_interval(r, hp);
  if (effort) return normal_interval_prob(iv.lo, iv.hi, s + b, lambda_scale / tau);
  return low_effort_interval_prob(iv.lo, iv.hi, low_effort_spec(hp));
}

double report_density_uncensored(double r, double s, double tau, double b, bool effort,
                                 const Hyperparameters& hp, double lambda_scale) {
  if (effort) return normal_pdf(r, s + b, lambda_scale / tau);
  return low_effort_pdf(r, low_effort_spec(hp));
}

DenseClamps densify_clamps(const ClampSet& clamps, const IndexedDataset& data) {
  DenseClamps dense;
  dense.effort_mask.assign(data.n_graders, 0);
  dense.reliability_mask.assign(data.n_graders, 0);
  dense.bias_mask.assign(data.n_graders, 0);
  dense.effort_value.assign(data.n_graders, 0.0);
  dense.reliability_value.assign(data.n_graders, 0.0);
  dense.bias_value.assign(data.n_graders, 0.0);
  auto resolve = [&](const std::string& grader) {
    auto it = data.grader_index.find(grader);
    if (it == data.grader_index.end()) throw std::invalid_argument("clamp references unknown grader " + grader);
    return it->second;
  };
  for (const auto& [grader, value] : clamps.effort) {
    if (!(value >= 0.0 && value <= 1.0)) throw std::invalid_argument("effort clamp outside [0,1] for " + grader);
    const int v = resolve(grader);
    dense.effort_mask[v] = 1;
    dense.effort_value[v] = value;
  }
  for (const auto& [grader, value] : clamps.reliability) {
    if (!(value > 0.0)) throw std::invalid_argument("reliability clamp must be > 0 for " + grader);
    const int v = resolve(grader);
    dense.reliability_mask[v] = 1;
    dense.reliability_value[v] = value;
  }
  for (const auto& [grader, value] : clamps.bias) {
    const int v = resolve(grader);
    dense.bias_mask[v] = 1;
    dense.bias_value[v] = value;
  }
  return dense;
}

GibbsEngine::GibbsEngine(const IndexedDataset& data, const Hyperparameters& hp,
                         const ModelConfig& config, const DenseClamps& clamps)
    : data_(data), hp_(hp), config_(config), clamps_(clamps), low_spec_(low_effort_spec(hp)) {
  hp_.validate();
  config_.validate();
  if (config_.correlation_enabled) {
    bool any_author = false;
    for (int a : data_.author) any_author |= (a >= 0);
    if (!any_author && data_.n_submissions > 0)
      throw std::invalid_argument("correlation requires submission authorship");
  }

  const int n_grades = static_cast<int>(hp_.grade_set.size());
  grade_intervals_.resize(n_grades);
  for (int i = 0; i < n_grades; ++i) grade_intervals_[i] = interval_at(i, hp_);

  const int C = data_.components;
  pair_intervals_.resize(data_.pairings.size() * C);
  pair_log_low_.resize(data_.pairings.size());
  for (std::size_t p = 0; p < data_.pairings.size(); ++p) {
    double log_low = 0.0;
    for (int c = 0; c < C; ++c) {
      const int r = data_.pairings[p].reports[c];
      const CensorInterval iv = grade_intervals_[grade_index(r, hp_)];
      pair_intervals_[p * C + c] = iv;
      if (config_.censoring_enabled) {
        log_low += std::log(low_effort_interval_prob(iv.lo, iv.hi, low_spec_));
      } else {
        log_low += std::log(low_effort_pdf(static_cast<double>(r), low_spec_));
      }
    }
    pair_log_low_[p] = log_low;
  }

  const auto& grids = config_.grids;
  prior_log_s_grid_.resize(grids.true_grade.count);
  for (int i = 0; i < grids.true_grade.count; ++i)
    prior_log_s_grid_[i] = log_normal_pdf(grids.true_grade.at(i), hp_.mu_s, 1.0 / hp_.tau_s);
  prior_log_tau_grid_.resize(grids.reliability.count);
  for (int i = 0; i < grids.reliability.count; ++i) {
    const double t = grids.reliability.at(i);
    prior_log_tau_grid_[i] = config_.correlation_enabled
                                 ? log_normal_pdf(t, hp_.mu_s, 1.0 / hp_.tau_s + 1.0 / hp_.beta_0)
                                 : log_gamma_pdf(t, hp_.alpha_tau, hp_.beta_tau);
  }
  prior_log_b_grid_.resize(grids.bias.count);
  for (int i = 0; i < grids.bias.count; ++i)
    prior_log_b_grid_[i] = log_normal_pdf(grids.bias.at(i), 0.0, 1.0 / hp_.tau_b);
}

double GibbsEngine::lambda_scale() const { return config_.correlation_enabled ? hp_.lambda : 1.0; }

bool GibbsEngine::pair_effort(const LatentState& state, int pairing) const {
  return !config_.effort_enabled || state.effort[pairing] != 0;
}

double GibbsEngine::low_effort_log_const(int pairing) const { return pair_log_low_[pairing]; }

LatentState GibbsEngine::initial_state(Rng& rng) const {
  LatentState st;
  st.reliability.resize(data_.n_graders);
  st.bias.resize(data_.n_graders);
  st.effort_prob.resize(data_.n_graders);
  st.true_grade.resize(data_.n_grade_vars());
  st.effort.resize(data_.pairings.size());

  const auto& rel_grid = config_.grids.reliability;
  for (int v = 0; v < data_.n_graders; ++v) {
    if (clamps_.reliability_mask[v]) {
      st.reliability[v] = clamps_.reliability_value[v];
    } else if (config_.correlation_enabled) {
      // normal prior on a precision: truncate to the positive grid range
      double t = 0.0;
      bool ok = false;
      for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
        t = rng.normal(hp_.mu_s, 1.0 / hp_.tau_s + 1.0 / hp_.beta_0);
        ok = t >= rel_grid.lo && t <= rel_grid.hi;
      }
      st.reliability[v] = ok ? t : std::clamp(t, rel_grid.lo, rel_grid.hi);
    } else {
      st.reliability[v] = rng.gamma(hp_.alpha_tau, hp_.beta_tau);
    }
  }
  for (int v = 0; v < data_.n_graders; ++v)
    st.bias[v] = clamps_.bias_mask[v] ? clamps_.bias_value[v] : rng.normal(0.0, 1.0 / hp_.tau_b);
  for (int v = 0; v < data_.n_graders; ++v) {
    if (!config_.effort_enabled)
      st.effort_prob[v] = 1.0;
    else
      st.effort_prob[v] = clamps_.effort_mask[v] ? clamps_.effort_value[v] : rng.beta(hp_.alpha_e, hp_.beta_e);
  }
  for (int u = 0; u < data_.n_submissions; ++u) {
    double mean = hp_.mu_s, var = 1.0 / hp_.tau_s;
    if (config_.correlation_enabled && data_.author[u] >= 0) {
      const double tau_author = st.reliability[data_.author[u]];
      mean = (hp_.tau_s * hp_.mu_s + hp_.beta_0 * tau_author) / (hp_.tau_s + hp_.beta_0);
      var = 1.0 / (hp_.tau_s + hp_.beta_0);
    }
    for (int c = 0; c < data_.components; ++c)
      st.true_grade[data_.grade_var(u, c)] = rng.normal(mean, var);
  }
  for (std::size_t p = 0; p < data_.pairings.size(); ++p) {
    st.effort[p] = !config_.effort_enabled ||
                   rng.bernoulli(st.effort_prob[data_.pairings[p].grader]);
  }
  return st;
}

double GibbsEngine::sample_true_grade_conjugate(int u, int c, const LatentState& state, Rng& rng) const {
  const double lam = lambda_scale();
  double prec = hp_.tau_s;
  double num = hp_.tau_s * hp_.mu_s;
  if (config_.correlation_enabled && data_.author[u] >= 0) {
    prec += hp_.beta_0;
    num += hp_.beta_0 * state.reliability[data_.author[u]];
  }
  for (int p : data_.of_submission[u]) {
    if (!pair_effort(state, p)) continue;
    const auto& pairing = data_.pairings[p];
    const double tau_eff = state.reliability[pairing.grader] / lam;
    prec += tau_eff;
    num += tau_eff * (pairing.reports[c] - state.bias[pairing.grader]);
  }
  return rng.normal(num / prec, 1.0 / prec);
}

double GibbsEngine::sample_reliability_conjugate(int v, const LatentState& state, Rng& rng) const {
  double shape = hp_.alpha_tau;
  double rate = hp_.beta_tau;
  for (int p : data_.of_grader[v]) {
    if (!pair_effort(state, p)) continue;
    const auto& pairing = data_.pairings[p];
    shape += 0.5 * data_.components;
    double ss = 0.0;
    for (int c = 0; c < data_.components; ++c) {
      const double resid = pairing.reports[c] - state.bias[v] - state.true_grade[data_.grade_var(pairing.submission, c)];
      ss += resid * resid;
    }
    rate += 0.5 * ss;
  }
  return rng.gamma(shape, rate);
}

double GibbsEngine::sample_bias_conjugate(int v, const LatentState& state, Rng& rng) const {
  const double tau_eff = state.reliability[v] / lambda_scale();
  double prec = hp_.tau_b;
  double num = 0.0;
  for (int p : data_.of_grader[v]) {
    if (!pair_effort(state, p)) continue;
    const auto& pairing = data_.pairings[p];
    for (int c = 0; c < data_.components; ++c) {
      prec += tau_eff;
      num += tau_eff * (pairing.reports[c] - state.true_grade[data_.grade_var(pairing.submission, c)]);
    }
  }
  return rng.normal(num / prec, 1.0 / prec);
}

double GibbsEngine::sample_effort_probability(int v, const LatentState& state, Rng& rng) const {
  double on = 0.0, off = 0.0;
  for (int p : data_.of_grader[v]) {
    if (state.effort[p])
      on += 1.0;
    else
      off += 1.0;
  }
  return rng.beta(hp_.alpha_e + on, hp_.beta_e + off);
}

double GibbsEngine::effort_on_probability(int pairing, const LatentState& state) const {
  const auto& pair = data_.pairings[pairing];
  const double e = state.effort_prob[pair.grader];
  if (e >= 1.0) return 1.0;
  if (e <= 0.0) return 0.0;
  const double lam = lambda_scale();
  const double tau = state.reliability[pair.grader];
  const double b = state.bias[pair.grader];
  double log_high = 0.0;
  if (config_.censoring_enabled) {
    for (int c = 0; c < data_.components; ++c) {
      const CensorInterval& iv = pair_intervals_[static_cast<std::size_t>(pairing) * data_.components + c];
      const double s = state.true_grade[data_.grade_var(pair.submission, c)];
      log_high += std::log(normal_interval_prob(iv.lo - b, iv.hi - b, s, lam / tau));
    }
  } else {
    for (int c = 0; c < data_.components; ++c) {
      const double s = state.true_grade[data_.grade_var(pair.submission, c)];
      log_high += log_normal_pdf(pair.reports[c], s + b, lam / tau);
    }
  }
  const double log_low = pair_log_low_[pairing];
  if (log_high == -kInf && log_low == -kInf) return e;
  if (log_high == -kInf) return 0.0;
  if (log_low == -kInf) return 1.0;
  // p = e*H / (e*H + (1-e)*L), in log space
  const double d = std::log1p(-e) - std::log(e) + log_low - log_high;
  return 1.0 / (1.0 + std::exp(d));
}

void GibbsEngine::fill_logpost_true_grade(int u, int c, const LatentState& state,
                                          std::vector<double>& lw) const {
  const auto& grid = config_.grids.true_grade;
  lw.resize(grid.count);
  if (config_.correlation_enabled && data_.author[u] >= 0) {
    const double tau_author = state.reliability[data_.author[u]];
    const double mean = (hp_.tau_s * hp_.mu_s + hp_.beta_0 * tau_author) / (hp_.tau_s + hp_.beta_0);
    const double var = 1.0 / (hp_.tau_s + hp_.beta_0);
    for (int i = 0; i < grid.count; ++i) lw[i] = log_normal_pdf(grid.at(i), mean, var);
  } else {
    std::copy(prior_log_s_grid_.begin(), prior_log_s_grid_.end(), lw.begin());
  }
  const double lam = lambda_scale();
  for (int p : data_.of_submission[u]) {
    if (!pair_effort(state, p)) continue;  // low-effort factors are constant in s
    const auto& pairing = data_.pairings[p];
    const double var = lam / state.reliability[pairing.grader];
    const CensorInterval& iv = pair_intervals_[static_cast<std::size_t>(p) * data_.components + c];
    const double lo = iv.lo - state.bias[pairing.grader];
    const double hi = iv.hi - state.bias[pairing.grader];
    for (int i = 0; i < grid.count; ++i)
      lw[i] += std::log(normal_interval_prob(lo, hi, grid.at(i), var));
  }
}

void GibbsEngine::fill_logpost_reliability(int v, const LatentState& state,
                                           std::vector<double>& lw) const {
  const auto& grid = config_.grids.reliability;
  lw.resize(grid.count);
  std::copy(prior_log_tau_grid_.begin(), prior_log_tau_grid_.end(), lw.begin());
  const double lam = lambda_scale();

  if (config_.correlation_enabled) {
    // authored-submission factors: Pr(s_hat | tau, mu_s, tau_s, beta_0)
    const double var = 1.0 / (hp_.tau_s + hp_.beta_0);
    for (int u = 0; u < data_.n_submissions; ++u) {
      if (data_.author[u] != v) continue;
      for (int i = 0; i < grid.count; ++i) {
        const double mean = (hp_.tau_s * hp_.mu_s + hp_.beta_0 * grid.at(i)) / (hp_.tau_s + hp_.beta_0);
        for (int c = 0; c < data_.components; ++c)
          lw[i] += log_normal_pdf(state.true_grade[data_.grade_var(u, c)], mean, var);
      }
    }
  }

  for (int p : data_.of_grader[v]) {
    if (!pair_effort(state, p)) continue;
    const auto& pairing = data_.pairings[p];
    for (int c = 0; c < data_.components; ++c) {
      const double s = state.true_grade[data_.grade_var(pairing.submission, c)];
      if (config_.censoring_enabled) {
        const CensorInterval& iv = pair_intervals_[static_cast<std::size_t>(p) * data_.components + c];
        const double lo = iv.lo - state.bias[v];
        const double hi = iv.hi - state.bias[v];
        for (int i = 0; i < grid.count; ++i)
          lw[i] += std::log(normal_interval_prob(lo, hi, s, lam / grid.at(i)));
      } else {
        const double mean = s + state.bias[v];
        for (int i = 0; i < grid.count; ++i)
          lw[i] += log_normal_pdf(pairing.reports[c], mean, lam / grid.at(i));
      }
    }
  }
}

void GibbsEngine::fill_logpost_bias(int v, const LatentState& state, std::vector<double>& lw) const {
  const auto& grid = config_.grids.bias;
  lw.resize(grid.count);
  std::copy(prior_log_b_grid_.begin(), prior_log_b_grid_.end(), lw.begin());
  const double lam = lambda_scale();
  const double var = lam / state.reliability[v];
  for (int p : data_.of_grader[v]) {
    if (!pair_effort(state, p)) continue;
    const auto& pairing = data_.pairings[p];
    for (int c = 0; c < data_.components; ++c) {
      const double s = state.true_grade[data_.grade_var(pairing.submission, c)];
      if (config_.censoring_enabled) {
        const CensorInterval& iv = pair_intervals_[static_cast<std::size_t>(p) * data_.components + c];
        for (int i = 0; i < grid.count; ++i)
          lw[i] += std::log(normal_interval_prob(iv.lo - grid.at(i), iv.hi - grid.at(i), s, var));
      } else {
        for (int i = 0; i < grid.count; ++i)
          lw[i] += log_normal_pdf(pairing.reports[c], s + grid.at(i), var);
      }
    }
  }
}

double GibbsEngine::unnorm_logpost_true_grade(int u, int c, double candidate,
                                              const LatentState& state) const {
  double lp;
  if (config_.correlation_enabled && data_.author[u] >= 0) {
    const double tau_author = state.reliability[data_.author[u]];
    const double mean = (hp_.tau_s * hp_.mu_s + hp_.beta_0 * tau_author) / (hp_.tau_s + hp_.beta_0);
    lp = log_normal_pdf(candidate, mean, 1.0 / (hp_.tau_s + hp_.beta_0));
  } else {
    lp = log_normal_pdf(candidate, hp_.mu_s, 1.0 / hp_.tau_s);
  }
  const double lam = lambda_scale();
  for (int p : data_.of_submission[u]) {
    const auto& pairing = data_.pairings[p];
    const bool z = pair_effort(state, p);
    const int r = pairing.reports[c];
    if (config_.censoring_enabled) {
      lp += std::log(report_likelihood(r, candidate, state.reliability[pairing.grader],
                                       state.bias[pairing.grader], z, hp_, lam));
    } else {
      lp += std::log(report_density_uncensored(r, candidate, state.reliability[pairing.grader],
                                               state.bias[pairing.grader], z, hp_, lam));
    }
  }
  return lp;
}

double GibbsEngine::unnorm_logpost_reliability(int v, double candidate, const LatentState& state) const {
  if (!(candidate > 0)) return -kInf;
  double lp = config_.correlation_enabled
                  ? log_normal_pdf(candidate, hp_.mu_s, 1.0 / hp_.tau_s + 1.0 / hp_.beta_0)
                  : log_gamma_pdf(candidate, hp_.alpha_tau, hp_.beta_tau);
  const double lam = lambda_scale();
  if (config_.correlation_enabled) {
    const double mean = (hp_.tau_s * hp_.mu_s + hp_.beta_0 * candidate) / (hp_.tau_s + hp_.beta_0);
    const double var = 1.0 / (hp_.tau_s + hp_.beta_0);
    for (int u = 0; u < data_.n_submissions; ++u) {
      if (data_.author[u] != v) continue;
      for (int c = 0; c < data_.components; ++c)
        lp += log_normal_pdf(state.true_grade[data_.grade_var(u, c)], mean, var);
    }
  }
  for (int p : data_.of_grader[v]) {
    const auto& pairing = data_.pairings[p];
    const bool z = pair_effort(state, p);
    if (!config_.censoring_enabled && config_.correlation_enabled && !z) {
      // uncensored correlated update uses only effortful pairs; the low-effort
      // density is constant in tau either way
      lp += pair_log_low_[p];
      continue;
    }
    for (int c = 0; c < data_.components; ++c) {
      const double s = state.true_grade[data_.grade_var(pairing.submission, c)];
      if (config_.censoring_enabled) {
        lp += std::log(report_likelihood(pairing.reports[c], s, candidate, state.bias[v], z, hp_, lam));
      } else {
        lp += std::log(report_density_uncensored(pairing.reports[c], s, candidate, state.bias[v], z, hp_, lam));
      }
    }
  }
  return lp;
}

double GibbsEngine::unnorm_logpost_bias(int v, double candidate, const LatentState& state) const {
  double lp = log_normal_pdf(candidate, 0.0, 1.0 / hp_.tau_b);
  const double lam = lambda_scale();
  for (int p : data_.of_grader[v]) {
    const auto& pairing = data_.pairings[p];
    const bool z = pair_effort(state, p);
    for (int c = 0; c < data_.components; ++c) {
      const double s = state.true_grade[data_.grade_var(pairing.submission, c)];
      if (config_.censoring_enabled) {
        lp += std::log(report_likelihood(pairing.reports[c], s, state.reliability[v], candidate, z, hp_, lam));
      } else {
        lp += std::log(report_density_uncensored(pairing.reports[c], s, state.reliability[v], candidate, z, hp_, lam));
      }
    }
  }
  return lp;
}

namespace {
double grid_draw(const UniformGrid& grid, std::vector<double>& lw, Rng& rng) {
  const int idx = sample_discrete_log(lw, rng);
  return grid.at(idx);
}
}  // namespace

double GibbsEngine::grid_sample_true_grade(int u, int c, const LatentState& state, Rng& rng) const {
  std::vector<double> lw;
  fill_logpost_true_grade(u, c, state, lw);
  return grid_draw(config_.grids.true_grade, lw, rng);
}

double GibbsEngine::grid_sample_reliability(int v, const LatentState& state, Rng& rng) const {
  std::vector<double> lw;
  fill_logpost_reliability(v, state, lw);
  return grid_draw(config_.grids.reliability, lw, rng);
}

double GibbsEngine::grid_sample_bias(int v, const LatentState& state, Rng& rng) const {
  std::vector<double> lw;
  fill_logpost_bias(v, state, lw);
  return grid_draw(config_.grids.bias, lw, rng);
}

void GibbsEngine::sweep(LatentState& state, Rng& rng) const {
  std::vector<double> lw;
  lw.reserve(std::max({config_.grids.true_grade.count, config_.grids.reliability.count,
                       config_.grids.bias.count}));

  for (int u = 0; u < data_.n_submissions; ++u) {
    for (int c = 0; c < data_.components; ++c) {
      double value;
      if (config_.censoring_enabled) {
        fill_logpost_true_grade(u, c, state, lw);
        value = grid_draw(config_.grids.true_grade, lw, rng);
      } else {
        value = sample_true_grade_conjugate(u, c, state, rng);
      }
      state.true_grade[data_.grade_var(u, c)] = value;
    }
  }

  const bool grid_reliability = config_.censoring_enabled || config_.correlation_enabled;
  for (int v = 0; v < data_.n_graders; ++v) {
    if (clamps_.reliability_mask[v]) continue;
    if (grid_reliability) {
      fill_logpost_reliability(v, state, lw);
      state.reliability[v] = grid_draw(config_.grids.reliability, lw, rng);
    } else {
      state.reliability[v] = sample_reliability_conjugate(v, state, rng);
    }
  }

  for (int v = 0; v < data_.n_graders; ++v) {
    if (clamps_.bias_mask[v]) continue;
    if (config_.censoring_enabled) {
      fill_logpost_bias(v, state, lw);
      state.bias[v] = grid_draw(config_.grids.bias, lw, rng);
    } else {
      state.bias[v] = sample_bias_conjugate(v, state, rng);
    }
  }

  if (config_.effort_enabled) {
    for (int v = 0; v < data_.n_graders; ++v) {
      if (clamps_.effort_mask[v]) continue;
      state.effort_prob[v] = sample_effort_probability(v, state, rng);
    }
    for (std::size_t p = 0; p < data_.pairings.size(); ++p)
      state.effort[p] = rng.bernoulli(effort_on_probability(static_cast<int>(p), state));
  }
}

std::vector<SampleTrace> run_chains(const IndexedDataset& data, const Hyperparameters& hp,
                                    const ModelConfig& config, const ClampSet& clamps,
                                    int threads) {
  config.validate();
  const DenseClamps dense = densify_clamps(clamps, data);
  const GibbsEngine engine(data, hp, config, dense);

  const int n_chains = config.sampling.chains;
  const int kept = config.sampling.samples - config.sampling.burn_in;
  std::vector<std::uint64_t> seeds(n_chains);
  std::uint64_t state = config.seed;
  for (int i = 0; i < n_chains; ++i) seeds[i] = splitmix64(state);

  std::vector<SampleTrace> traces(n_chains);
  for (int i = 0; i < n_chains; ++i) {
    auto& t = traces[i];
    t.chain_id = i;
    t.seed = seeds[i];
    t.kept = kept;
    t.n_grade_vars = data.n_grade_vars();
    t.n_graders = data.n_graders;
    t.n_pairings = static_cast<int>(data.pairings.size());
    t.true_grade.resize(static_cast<std::size_t>(kept) * t.n_grade_vars);
    t.reliability.resize(static_cast<std::size_t>(kept) * t.n_graders);
    t.bias.resize(static_cast<std::size_t>(kept) * t.n_graders);
    t.effort_prob.resize(static_cast<std::size_t>(kept) * t.n_graders);
    t.effort.resize(static_cast<std::size_t>(kept) * t.n_pairings);
  }

  auto run_one = [&](int chain) {
    Rng rng(seeds[chain]);
    LatentState st = engine.initial_state(rng);
    auto& t = traces[chain];
    for (int s = 0; s < config.sampling.samples; ++s) {
      engine.sweep(st, rng);
      const int k = s - config.sampling.burn_in;
      if (k < 0) continue;
      std::copy(st.true_grade.begin(), st.true_grade.end(),
                t.true_grade.begin() + static_cast<std::size_t>(k) * t.n_grade_vars);
      std::copy(st.reliability.begin(), st.reliability.end(),
                t.reliability.begin() + static_cast<std::size_t>(k) * t.n_graders);
      std::copy(st.bias.begin(), st.bias.end(),
                t.bias.begin() + static_cast<std::size_t>(k) * t.n_graders);
      std::copy(st.effort_prob.begin(), st.effort_prob.end(),
                t.effort_prob.begin() + static_cast<std::size_t>(k) * t.n_graders);
      std::copy(st.effort.begin(), st.effort.end(),
                t.effort.begin() + static_cast<std::size_t>(k) * t.n_pairings);
    }
  };

  int n_workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::clamp(n_workers, 1, n_chains);
  if (n_workers == 1) {
    for (int i = 0; i < n_chains; ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= n_chains) return;
          run_one(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return traces;
}

}  // namespace pg
