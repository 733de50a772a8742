#include "pg/cli.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>

#include "CLI11.hpp"
#include "pg/evaluation.hpp"
#include "pg/io.hpp"

namespace pg::cli {

namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::uint64_t draw_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

fs::path default_sidecar(const fs::path& data) {
  fs::path p = data;
  p.replace_extension(".meta.json");
  return p;
}

std::string hash_of(const std::string& text) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, io::fnv1a64(text));
  return buf;
}

void add_input(io::RunManifest& manifest, const fs::path& path) {
  if (!path.empty() && fs::exists(path)) manifest.inputs.emplace_back(path.string(), io::file_digest(path));
}

int run_simulate(const fs::path& spec_path, const fs::path& out_dir,
                 std::optional<std::uint64_t> seed) {
  Timer timer;
  ClassSpec spec = io::load_class_spec(spec_path);
  if (seed) spec.seed = *seed;
  const GroundTruth gt = generate_class(spec);

  fs::create_directories(out_dir);
  io::save_dataset(gt.dataset, out_dir / "dataset.csv", out_dir / "dataset.meta.json");
  io::save_ground_truth(gt, out_dir / "groundtruth.json");
  io::write_file(out_dir / "class_spec.json", io::dump_class_spec(spec));

  io::RunManifest manifest;
  manifest.command = "simulate";
  manifest.config_hash = hash_of(io::dump_class_spec(spec));
  manifest.master_seed = spec.seed;
  add_input(manifest, spec_path);
  manifest.outputs = {(out_dir / "dataset.csv").string(), (out_dir / "dataset.meta.json").string(),
                      (out_dir / "groundtruth.json").string(), (out_dir / "class_spec.json").string()};
  manifest.wall_seconds = timer.seconds();
  io::save_manifest(manifest, out_dir / "manifest.json");
  return 0;
}

struct InferFlags {
  std::optional<bool> effort, censoring, correlation;
};

int run_infer(const fs::path& data_path, fs::path sidecar_path, const fs::path& config_path,
              const fs::path& out_dir, const InferFlags& flags, std::optional<std::uint64_t> seed,
              bool export_traces, int threads) {
  Timer timer;
  if (sidecar_path.empty()) sidecar_path = default_sidecar(data_path);
  io::LoadedConfig loaded = io::load_config(config_path);
  if (flags.effort) loaded.config.effort_enabled = *flags.effort;
  if (flags.censoring) loaded.config.censoring_enabled = *flags.censoring;
  if (flags.correlation) loaded.config.correlation_enabled = *flags.correlation;
  const bool config_has_seed = io::read_file(config_path).find("\"seed\"") != std::string::npos;
  if (seed)
    loaded.config.seed = *seed;
  else if (!config_has_seed)
    loaded.config.seed = draw_seed();

  const Dataset dataset = io::load_dataset(data_path, sidecar_path);
  const IndexedDataset idx = index_dataset(dataset, loaded.hp);
  const ClampSet clamps = default_clamps(dataset);
  const auto traces = run_chains(idx, loaded.hp, loaded.config, clamps, threads);
  const PosteriorSummary summary = summarize(traces, idx, loaded.hp);

  fs::create_directories(out_dir);
  io::save_summary(summary, out_dir / "summary.csv");
  const std::string canonical = io::dump_config(loaded.hp, loaded.config);
  io::write_file(out_dir / "config_canonical.json", canonical);

  io::RunManifest manifest;
  manifest.command = "infer";
  manifest.config_hash = hash_of(canonical);
  manifest.master_seed = loaded.config.seed;
  add_input(manifest, data_path);
  add_input(manifest, sidecar_path);
  add_input(manifest, config_path);
  manifest.outputs = {(out_dir / "summary.csv").string(), (out_dir / "config_canonical.json").string()};
  if (export_traces) {
    io::save_traces(traces, idx, manifest.config_hash, out_dir / "traces");
    manifest.outputs.push_back((out_dir / "traces").string());
  }
  manifest.wall_seconds = timer.seconds();
  io::save_manifest(manifest, out_dir / "manifest.json");
  return 0;
}

int run_explain(const fs::path& summary_path, const fs::path& data_path, fs::path sidecar_path,
                const fs::path& out_dir, const MipConstants& constants) {
  Timer timer;
  if (sidecar_path.empty()) sidecar_path = default_sidecar(data_path);
  const PosteriorSummary summary = io::load_summary(summary_path);
  Hyperparameters hp;
  hp.grade_set = summary.grade_set;
  hp.max_grade = summary.grade_set.back();
  hp.components = summary.components;
  const Dataset dataset = io::load_dataset(data_path, sidecar_path);
  const IndexedDataset idx = index_dataset(dataset, hp);
  const ExplainReport report = explain_all(summary, idx, constants);

  fs::create_directories(out_dir);
  io::save_explanations(report, out_dir / "explanations.csv");

  io::RunManifest manifest;
  manifest.command = "explain";
  char consts[96];
  std::snprintf(consts, sizeof consts, "S=%g,T=%g,P=%g", constants.max_shift, constants.min_weight,
                constants.penalty);
  manifest.config_hash = hash_of(consts);
  add_input(manifest, summary_path);
  add_input(manifest, data_path);
  add_input(manifest, sidecar_path);
  manifest.outputs = {(out_dir / "explanations.csv").string()};
  manifest.wall_seconds = timer.seconds();
  io::save_manifest(manifest, out_dir / "manifest.json");
  std::printf("explained %zu submissions, MIP vs MAP disagreement %.4f\n", report.items.size(),
              report.map_disagreement);
  return 0;
}

int run_xval(const fs::path& data_path, fs::path sidecar_path, const fs::path& config_path,
             int k, const fs::path& out_dir, std::optional<std::uint64_t> seed, int threads) {
  Timer timer;
  if (sidecar_path.empty()) sidecar_path = default_sidecar(data_path);
  io::LoadedConfig loaded = io::load_config(config_path);
  if (seed) loaded.config.seed = *seed;

  const Dataset dataset = io::load_dataset(data_path, sidecar_path);
  const IndexedDataset idx = index_dataset(dataset, loaded.hp);
  const ClampSet clamps = default_clamps(dataset);

  std::uint64_t state = loaded.config.seed;
  Rng fold_rng(splitmix64(state));
  const FoldPlan plan = stratified_folds(idx, k, fold_rng);
  std::vector<std::uint64_t> run_seeds(k);
  for (auto& s : run_seeds) s = splitmix64(state);

  std::vector<double> fold_loglik(k, 0.0);
  std::vector<int> fold_sizes(k, 0);
  for (std::size_t p = 0; p < idx.pairings.size(); ++p) ++fold_sizes[plan.fold_of_pairing[p]];

  for (int fold = 0; fold < k; ++fold) {
    Dataset train = dataset;
    train.records.clear();
    std::vector<int> held;
    for (std::size_t p = 0; p < idx.pairings.size(); ++p) {
      const auto& pairing = idx.pairings[p];
      if (plan.fold_of_pairing[p] == fold) {
        held.push_back(static_cast<int>(p));
        continue;
      }
      for (int c = 0; c < idx.components; ++c) {
        GradeRecord rec;
        rec.submission_id = idx.submission_ids[pairing.submission];
        rec.grader_id = idx.grader_ids[pairing.grader];
        rec.component = c;
        rec.reported_grade = pairing.reports[c];
        train.records.push_back(std::move(rec));
      }
    }
    const IndexedDataset train_idx = index_dataset(train, loaded.hp);
    ModelConfig cfg = loaded.config;
    cfg.seed = run_seeds[fold];
    const auto traces = run_chains(train_idx, loaded.hp, cfg, clamps, threads);
    fold_loglik[fold] = heldout_loglik(traces, idx, held, loaded.hp, cfg);
  }

  fs::create_directories(out_dir);
  io::save_fold_table(fold_loglik, fold_sizes, out_dir / "folds.csv");

  io::RunManifest manifest;
  manifest.command = "xval";
  manifest.config_hash = hash_of(io::dump_config(loaded.hp, loaded.config));
  manifest.master_seed = loaded.config.seed;
  add_input(manifest, data_path);
  add_input(manifest, sidecar_path);
  add_input(manifest, config_path);
  manifest.outputs = {(out_dir / "folds.csv").string()};
  manifest.wall_seconds = timer.seconds();
  io::save_manifest(manifest, out_dir / "manifest.json");
  const double total = std::accumulate(fold_loglik.begin(), fold_loglik.end(), 0.0);
  std::printf("heldout loglik total %.4f over %d folds (%d collisions)\n", total, k, plan.collisions);
  return 0;
}

int run_experiment_cmd(const std::string& kind_name, const std::string& knob_name,
                       std::vector<double> settings, int replicates, const fs::path& spec_path,
                       const fs::path& config_path, const fs::path& out_dir,
                       std::optional<std::uint64_t> seed, int threads, int xval_k) {
  Timer timer;
  ExperimentRequest req;
  if (kind_name == "vary_weeks" || kind_name == "weeks")
    req.kind = ExperimentKind::VaryWeeks;
  else if (kind_name == "vary_graders_per_submission" || kind_name == "graders")
    req.kind = ExperimentKind::VaryGradersPerSubmission;
  else if (kind_name == "misspec")
    req.kind = ExperimentKind::Misspec;
  else if (kind_name == "mip_stability" || kind_name == "mip")
    req.kind = ExperimentKind::MipStability;
  else if (kind_name == "ablation")
    req.kind = ExperimentKind::Ablation;
  else
    throw std::invalid_argument("unknown experiment kind " + kind_name);

  if (!knob_name.empty()) {
    if (knob_name == "mu_s")
      req.knob = MisspecKnob::GradeMean;
    else if (knob_name == "sigma_s")
      req.knob = MisspecKnob::GradeSd;
    else if (knob_name == "sigma_b")
      req.knob = MisspecKnob::BiasSd;
    else if (knob_name == "reliability_mean")
      req.knob = MisspecKnob::ReliabilityMean;
    else if (knob_name == "reliability_variance")
      req.knob = MisspecKnob::ReliabilityVariance;
    else if (knob_name == "effort_mean")
      req.knob = MisspecKnob::EffortMean;
    else if (knob_name == "tau_ell")
      req.knob = MisspecKnob::LowEffortPrecision;
    else
      throw std::invalid_argument("unknown misspecification knob " + knob_name);
  } else if (req.kind == ExperimentKind::Misspec) {
    throw std::invalid_argument("misspec experiments need a knob");
  }

  if (settings.empty()) {
    switch (req.kind) {
      case ExperimentKind::VaryWeeks: settings = {1, 2, 4, 8}; break;
      case ExperimentKind::VaryGradersPerSubmission: settings = {1, 2, 4}; break;
      case ExperimentKind::MipStability: settings = {1, 4}; break;
      case ExperimentKind::Misspec:
        throw std::invalid_argument("misspec experiments need settings");
      case ExperimentKind::Ablation: settings = {0}; break;
    }
  }
  req.settings = std::move(settings);
  req.replicates = replicates;
  if (!spec_path.empty()) req.base = io::load_class_spec(spec_path);
  if (!config_path.empty()) {
    const io::LoadedConfig loaded = io::load_config(config_path);
    req.base.hp = loaded.hp;
    req.base.components = loaded.hp.components;
    req.config = loaded.config;
  }
  req.seed = seed ? *seed : draw_seed();
  req.threads = threads;
  req.xval_k = xval_k;

  const auto rows = run_experiment(req);
  fs::create_directories(out_dir);
  io::save_experiment_table(rows, out_dir / "results.csv");

  io::RunManifest manifest;
  manifest.command = "experiment " + kind_name;
  manifest.config_hash = hash_of(io::dump_class_spec(req.base) + io::dump_config(req.base.hp, req.config));
  manifest.master_seed = req.seed;
  add_input(manifest, spec_path);
  add_input(manifest, config_path);
  manifest.outputs = {(out_dir / "results.csv").string()};
  manifest.wall_seconds = timer.seconds();
  io::save_manifest(manifest, out_dir / "manifest.json");
  return 0;
}

}  // namespace

int execute(const std::vector<std::string>& args) {
  CLI::App app{"Bayesian peer-grading inference"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic class");
  std::string sim_spec, sim_out = "out";
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("--spec", sim_spec, "class spec JSON")->required();
  simulate->add_option("--out", sim_out, "output directory");
  simulate->add_option("--seed", sim_seed, "override the spec seed");

  // infer
  auto* infer = app.add_subcommand("infer", "run Gibbs inference on a dataset");
  std::string inf_data, inf_sidecar, inf_config, inf_out = "out";
  std::optional<std::uint64_t> inf_seed;
  InferFlags inf_flags;
  bool inf_traces = false;
  int inf_threads = 0;
  infer->add_option("--data", inf_data, "dataset CSV")->required();
  infer->add_option("--sidecar", inf_sidecar, "roles/authors sidecar (default <data>.meta.json)");
  infer->add_option("--config", inf_config, "config JSON")->required();
  infer->add_option("--out", inf_out, "output directory");
  infer->add_option("--seed", inf_seed, "override the config seed");
  infer->add_flag("--traces", inf_traces, "export per-chain traces");
  infer->add_option("--threads", inf_threads, "worker threads (0 = hardware)");
  bool eff_on = false, eff_off = false, cen_on = false, cen_off = false, cor_on = false;
  infer->add_flag("--effort", eff_on, "enable the effort model");
  infer->add_flag("--no-effort", eff_off, "disable the effort model");
  infer->add_flag("--censoring", cen_on, "enable censored reports");
  infer->add_flag("--no-censoring", cen_off, "disable censored reports");
  infer->add_flag("--correlation", cor_on, "enable grade-reliability correlation");

  // explain
  auto* explain = app.add_subcommand("explain", "MIP grade explanations from a summary");
  std::string exp_summary, exp_data, exp_sidecar, exp_out = "out";
  MipConstants constants;
  explain->add_option("--summary", exp_summary, "summary CSV from infer")->required();
  explain->add_option("--data", exp_data, "dataset CSV")->required();
  explain->add_option("--sidecar", exp_sidecar, "roles/authors sidecar");
  explain->add_option("--out", exp_out, "output directory");
  explain->add_option("--S", constants.max_shift, "max weight shift");
  explain->add_option("--T", constants.min_weight, "min nonzero weight");
  explain->add_option("--P", constants.penalty, "deviation penalty");

  // xval
  auto* xval = app.add_subcommand("xval", "stratified k-fold held-out likelihood");
  std::string xv_data, xv_sidecar, xv_config, xv_out = "out";
  int xv_k = 10, xv_threads = 0;
  std::optional<std::uint64_t> xv_seed;
  xval->add_option("--data", xv_data, "dataset CSV")->required();
  xval->add_option("--sidecar", xv_sidecar, "roles/authors sidecar");
  xval->add_option("--config", xv_config, "config JSON")->required();
  xval->add_option("--k", xv_k, "fold count");
  xval->add_option("--out", xv_out, "output directory");
  xval->add_option("--seed", xv_seed, "override the config seed");
  xval->add_option("--threads", xv_threads, "worker threads");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "synthetic-data experiment driver");
  std::string ex_kind, ex_knob, ex_spec, ex_config, ex_out = "out";
  std::vector<double> ex_settings;
  int ex_replicates = 15, ex_threads = 0, ex_k = 10;
  std::optional<std::uint64_t> ex_seed;
  experiment->add_option("--kind", ex_kind, "vary_weeks|vary_graders_per_submission|misspec|mip_stability|ablation")->required();
  experiment->add_option("--knob", ex_knob, "misspec knob");
  experiment->add_option("--settings", ex_settings, "setting values")->delimiter(',');
  experiment->add_option("--replicates", ex_replicates, "replicates per setting");
  experiment->add_option("--spec", ex_spec, "base class spec JSON");
  experiment->add_option("--config", ex_config, "inference config JSON");
  experiment->add_option("--out", ex_out, "output directory");
  experiment->add_option("--seed", ex_seed, "master seed");
  experiment->add_option("--threads", ex_threads, "worker threads");
  experiment->add_option("--k", ex_k, "folds for ablation");

  std::vector<const char*> argv;
  argv.push_back("peergrade");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help() << '\n';
    return 2;
  }

  try {
    if (*simulate) return run_simulate(sim_spec, sim_out, sim_seed);
    if (*infer) {
      if ((eff_on && eff_off) || (cen_on && cen_off))
        throw std::invalid_argument("conflicting effort/censoring flags");
      if (eff_on) inf_flags.effort = true;
      if (eff_off) inf_flags.effort = false;
      if (cen_on) inf_flags.censoring = true;
      if (cen_off) inf_flags.censoring = false;
      if (cor_on) inf_flags.correlation = true;
      return run_infer(inf_data, inf_sidecar, inf_config, inf_out, inf_flags, inf_seed, inf_traces,
                       inf_threads);
    }
    if (*explain) return run_explain(exp_summary, exp_data, exp_sidecar, exp_out, constants);
    if (*xval) return run_xval(xv_data, xv_sidecar, xv_config, xv_k, xv_out, xv_seed, xv_threads);
    if (*experiment)
      return run_experiment_cmd(ex_kind, ex_knob, ex_settings, ex_replicates, ex_spec, ex_config,
                                ex_out, ex_seed, ex_threads, ex_k);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace pg::cli
