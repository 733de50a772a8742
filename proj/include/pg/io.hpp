#pragma once
// File formats: dataset CSV + sidecar JSON, strict config JSON, summary and
// experiment tables, trace export, ground-truth sidecars, run manifests, and
// the FNV digest used to fingerprint inputs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pg/core.hpp"
#include "pg/evaluation.hpp"
#include "pg/gibbs.hpp"
#include "pg/mip.hpp"
#include "pg/posterior.hpp"
#include "pg/synth.hpp"

namespace pg::io {

std::uint64_t fnv1a64(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);  // 16 hex chars
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// --- dataset -------------------------------------------------------------
// CSV with header submission_id,grader_id,component,reported_grade; roles and
// authorship live in a JSON sidecar with keys "roles" and "authors".
Dataset load_dataset(const std::filesystem::path& csv_path,
                     const std::filesystem::path& sidecar_path = {});
void save_dataset(const Dataset& dataset, const std::filesystem::path& csv_path,
                  const std::filesystem::path& sidecar_path);

// --- config --------------------------------------------------------------
// Strict JSON mirroring Hyperparameters/ModelConfig field names; sigma_* keys
// are accepted as alternatives to tau_* (conflicts are errors), unknown keys
// are errors.
struct LoadedConfig {
  Hyperparameters hp;
  ModelConfig config;
};
LoadedConfig parse_config(const std::string& text, const std::string& origin = "config");
LoadedConfig load_config(const std::filesystem::path& path);
std::string dump_config(const Hyperparameters& hp, const ModelConfig& config);  // canonical form

// --- class spec (simulate input) ------------------------------------------
ClassSpec parse_class_spec(const std::string& text, const std::string& origin = "spec");
ClassSpec load_class_spec(const std::filesystem::path& path);
std::string dump_class_spec(const ClassSpec& spec);

// --- summaries -------------------------------------------------------------
void save_summary(const PosteriorSummary& summary, const std::filesystem::path& path);
PosteriorSummary load_summary(const std::filesystem::path& path);

// --- ground truth ----------------------------------------------------------
void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);

// --- traces ----------------------------------------------------------------
// One raw little-endian float64 matrix per chain (kept x variables) plus a
// manifest mapping variable names to columns.
void save_traces(const std::vector<SampleTrace>& traces, const IndexedDataset& data,
                 const std::string& config_hash, const std::filesystem::path& dir);

// --- tables ----------------------------------------------------------------
void save_experiment_table(const std::vector<ExperimentRow>& rows, const std::filesystem::path& path);
void save_explanations(const ExplainReport& report, const std::filesystem::path& path);
void save_fold_table(const std::vector<double>& fold_logliks, const std::vector<int>& fold_sizes,
                     const std::filesystem::path& path);

// --- run manifest ------------------------------------------------------------
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
};
void save_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace pg::io
