#include "pg/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pg::io {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw std::invalid_argument(origin + ": " + what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& origin) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok |= (it.key() == k);
    if (!ok) fail(origin, "unknown key \"" + it.key() + "\"");
  }
}

double take_number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw std::invalid_argument(std::string("key \"") + key + "\" must be a number");
  return obj[key].get<double>();
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string file_digest(const std::filesystem::path& path) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(read_file(path)));
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

Dataset load_dataset(const std::filesystem::path& csv_path,
                     const std::filesystem::path& sidecar_path) {
  Dataset ds;
  std::istringstream in(read_file(csv_path));
  std::string line;
  if (!std::getline(in, line)) fail(csv_path.string(), "empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "submission_id,grader_id,component,reported_grade")
    fail(csv_path.string(), "unexpected header \"" + line + "\"");
  std::set<std::string> subs, graders;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 4)
      fail(csv_path.string(), "line " + std::to_string(line_no) + ": expected 4 fields");
    GradeRecord rec;
    rec.submission_id = fields[0];
    rec.grader_id = fields[1];
    try {
      rec.component = std::stoi(fields[2]);
      rec.reported_grade = std::stoi(fields[3]);
    } catch (const std::exception&) {
      fail(csv_path.string(), "line " + std::to_string(line_no) + ": bad integer field");
    }
    if (subs.insert(rec.submission_id).second) ds.submissions.push_back(rec.submission_id);
    if (graders.insert(rec.grader_id).second) ds.graders.push_back(rec.grader_id);
    ds.records.push_back(std::move(rec));
  }

  if (!sidecar_path.empty() && std::filesystem::exists(sidecar_path)) {
    json side;
    try {
      side = json::parse(read_file(sidecar_path));
    } catch (const json::parse_error& e) {
      fail(sidecar_path.string(), e.what());
    }
    check_keys(side, {"roles", "authors", "submissions", "graders"}, sidecar_path.string());
    if (side.contains("roles")) {
      for (auto it = side["roles"].begin(); it != side["roles"].end(); ++it) {
        const auto role = parse_role(it.value().get<std::string>());
        if (!role) fail(sidecar_path.string(), "unknown role \"" + it.value().get<std::string>() + "\"");
        ds.roles[it.key()] = *role;
        if (graders.insert(it.key()).second) ds.graders.push_back(it.key());
      }
    }
    if (side.contains("authors")) {
      for (auto it = side["authors"].begin(); it != side["authors"].end(); ++it) {
        ds.authors[it.key()] = it.value().get<std::string>();
        if (subs.insert(it.key()).second) ds.submissions.push_back(it.key());
        if (graders.insert(it.value().get<std::string>()).second)
          ds.graders.push_back(it.value().get<std::string>());
      }
    }
    // optional explicit id lists let record-less entities exist
    if (side.contains("submissions")) {
      for (const auto& s : side["submissions"]) {
        if (subs.insert(s.get<std::string>()).second) ds.submissions.push_back(s.get<std::string>());
      }
    }
    if (side.contains("graders")) {
      for (const auto& g : side["graders"]) {
        if (graders.insert(g.get<std::string>()).second) ds.graders.push_back(g.get<std::string>());
      }
    }
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& csv_path,
                  const std::filesystem::path& sidecar_path) {
  std::ostringstream out;
  out << "submission_id,grader_id,component,reported_grade\n";
  for (const auto& rec : dataset.records)
    out << rec.submission_id << ',' << rec.grader_id << ',' << rec.component << ','
        << rec.reported_grade << '\n';
  write_file(csv_path, out.str());

  json side;
  side["roles"] = json::object();
  for (const auto& [grader, role] : dataset.roles) side["roles"][grader] = role_name(role);
  side["authors"] = json::object();
  for (const auto& [submission, grader] : dataset.authors) side["authors"][submission] = grader;
  side["submissions"] = dataset.submissions;
  side["graders"] = dataset.graders;
  write_file(sidecar_path, side.dump(2) + "\n");
}

namespace {

void apply_hp_keys(const json& obj, Hyperparameters& hp, const std::string& origin) {
  auto conflict = [&](const char* a, const char* b) {
    if (obj.contains(a) && obj.contains(b))
      fail(origin, std::string("conflicting keys \"") + a + "\" and \"" + b + "\"");
  };
  conflict("sigma_s", "tau_s");
  conflict("sigma_b", "tau_b");
  conflict("sigma_ell", "tau_ell");
  conflict("sigma_tau", "beta_0");

  hp.mu_s = take_number(obj, "mu_s", hp.mu_s);
  if (obj.contains("sigma_s")) hp.tau_s = tau_from_sigma(obj["sigma_s"].get<double>());
  hp.tau_s = take_number(obj, "tau_s", hp.tau_s);
  if (obj.contains("sigma_b")) hp.tau_b = tau_from_sigma(obj["sigma_b"].get<double>());
  hp.tau_b = take_number(obj, "tau_b", hp.tau_b);
  hp.alpha_tau = take_number(obj, "alpha_tau", hp.alpha_tau);
  hp.beta_tau = take_number(obj, "beta_tau", hp.beta_tau);
  hp.alpha_e = take_number(obj, "alpha_e", hp.alpha_e);
  hp.beta_e = take_number(obj, "beta_e", hp.beta_e);
  if (obj.contains("sigma_ell")) hp.tau_ell = tau_from_sigma(obj["sigma_ell"].get<double>());
  hp.tau_ell = take_number(obj, "tau_ell", hp.tau_ell);
  hp.epsilon = take_number(obj, "epsilon", hp.epsilon);
  if (obj.contains("sigma_tau")) hp.beta_0 = tau_from_sigma(obj["sigma_tau"].get<double>());
  hp.beta_0 = take_number(obj, "beta_0", hp.beta_0);
  hp.lambda = take_number(obj, "lambda", hp.lambda);
  hp.max_grade = static_cast<int>(take_number(obj, "max_grade", hp.max_grade));
  hp.components = static_cast<int>(take_number(obj, "components", hp.components));
  if (obj.contains("grade_set")) hp.grade_set = obj["grade_set"].get<std::vector<int>>();
}

UniformGrid parse_grid(const json& obj, const UniformGrid& fallback, const std::string& origin) {
  check_keys(obj, {"count", "lo", "hi"}, origin);
  UniformGrid g = fallback;
  g.count = static_cast<int>(take_number(obj, "count", g.count));
  g.lo = take_number(obj, "lo", g.lo);
  g.hi = take_number(obj, "hi", g.hi);
  return g;
}

}  // namespace

LoadedConfig parse_config(const std::string& text, const std::string& origin) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, e.what());
  }
  check_keys(obj,
             {"preset", "mu_s", "sigma_s", "tau_s", "sigma_b", "tau_b", "alpha_tau", "beta_tau",
              "alpha_e", "beta_e", "sigma_ell", "tau_ell", "epsilon", "sigma_tau", "beta_0",
              "lambda", "max_grade", "components", "grade_set", "effort_enabled",
              "censoring_enabled", "correlation_enabled", "grids", "sampling", "seed"},
             origin);

  LoadedConfig out;
  if (obj.contains("preset")) out.hp = preset_hyperparameters(obj["preset"].get<std::string>());
  apply_hp_keys(obj, out.hp, origin);

  if (obj.contains("effort_enabled")) out.config.effort_enabled = obj["effort_enabled"].get<bool>();
  if (obj.contains("censoring_enabled")) out.config.censoring_enabled = obj["censoring_enabled"].get<bool>();
  if (obj.contains("correlation_enabled"))
    out.config.correlation_enabled = obj["correlation_enabled"].get<bool>();
  if (obj.contains("grids")) {
    check_keys(obj["grids"], {"true_grade", "reliability", "bias"}, origin);
    if (obj["grids"].contains("true_grade"))
      out.config.grids.true_grade = parse_grid(obj["grids"]["true_grade"], out.config.grids.true_grade, origin);
    if (obj["grids"].contains("reliability"))
      out.config.grids.reliability = parse_grid(obj["grids"]["reliability"], out.config.grids.reliability, origin);
    if (obj["grids"].contains("bias"))
      out.config.grids.bias = parse_grid(obj["grids"]["bias"], out.config.grids.bias, origin);
  }
  if (obj.contains("sampling")) {
    check_keys(obj["sampling"], {"chains", "samples", "burn_in"}, origin);
    out.config.sampling.chains = static_cast<int>(take_number(obj["sampling"], "chains", out.config.sampling.chains));
    out.config.sampling.samples = static_cast<int>(take_number(obj["sampling"], "samples", out.config.sampling.samples));
    out.config.sampling.burn_in = static_cast<int>(take_number(obj["sampling"], "burn_in", out.config.sampling.burn_in));
  }
  if (obj.contains("seed")) out.config.seed = obj["seed"].get<std::uint64_t>();

  out.hp.validate();
  out.config.validate();
  return out;
}

LoadedConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.string());
}

std::string dump_config(const Hyperparameters& hp, const ModelConfig& config) {
  json obj;
  obj["mu_s"] = hp.mu_s;
  obj["tau_s"] = hp.tau_s;
  obj["tau_b"] = hp.tau_b;
  obj["alpha_tau"] = hp.alpha_tau;
  obj["beta_tau"] = hp.beta_tau;
  obj["alpha_e"] = hp.alpha_e;
  obj["beta_e"] = hp.beta_e;
  obj["tau_ell"] = hp.tau_ell;
  obj["epsilon"] = hp.epsilon;
  obj["beta_0"] = hp.beta_0;
  obj["lambda"] = hp.lambda;
  obj["max_grade"] = hp.max_grade;
  obj["components"] = hp.components;
  obj["grade_set"] = hp.grade_set;
  obj["effort_enabled"] = config.effort_enabled;
  obj["censoring_enabled"] = config.censoring_enabled;
  obj["correlation_enabled"] = config.correlation_enabled;
  obj["grids"] = {
      {"true_grade", {{"count", config.grids.true_grade.count}, {"lo", config.grids.true_grade.lo}, {"hi", config.grids.true_grade.hi}}},
      {"reliability", {{"count", config.grids.reliability.count}, {"lo", config.grids.reliability.lo}, {"hi", config.grids.reliability.hi}}},
      {"bias", {{"count", config.grids.bias.count}, {"lo", config.grids.bias.lo}, {"hi", config.grids.bias.hi}}},
  };
  obj["sampling"] = {{"chains", config.sampling.chains},
                     {"samples", config.sampling.samples},
                     {"burn_in", config.sampling.burn_in}};
  obj["seed"] = config.seed;
  return obj.dump(2) + "\n";
}

ClassSpec parse_class_spec(const std::string& text, const std::string& origin) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, e.what());
  }
  check_keys(obj,
             {"students", "weeks", "grades_per_submission", "grades_per_grader_per_week",
              "components", "tas", "ta_coverage", "ta_reliability_mean", "student_reliability_mean",
              "calibrations_per_week", "seed", "hyperparameters"},
             origin);
  ClassSpec spec;
  spec.students = static_cast<int>(take_number(obj, "students", spec.students));
  spec.weeks = static_cast<int>(take_number(obj, "weeks", spec.weeks));
  spec.grades_per_submission = static_cast<int>(take_number(obj, "grades_per_submission", spec.grades_per_submission));
  spec.grades_per_grader_per_week =
      static_cast<int>(take_number(obj, "grades_per_grader_per_week", spec.grades_per_grader_per_week));
  spec.components = static_cast<int>(take_number(obj, "components", spec.components));
  spec.tas = static_cast<int>(take_number(obj, "tas", spec.tas));
  spec.ta_coverage = take_number(obj, "ta_coverage", spec.ta_coverage);
  spec.ta_reliability_mean = take_number(obj, "ta_reliability_mean", spec.ta_reliability_mean);
  spec.student_reliability_mean = take_number(obj, "student_reliability_mean", spec.student_reliability_mean);
  spec.calibrations_per_week = static_cast<int>(take_number(obj, "calibrations_per_week", spec.calibrations_per_week));
  if (obj.contains("seed")) spec.seed = obj["seed"].get<std::uint64_t>();
  if (obj.contains("hyperparameters")) {
    const auto& hj = obj["hyperparameters"];
    check_keys(hj,
               {"preset", "mu_s", "sigma_s", "tau_s", "sigma_b", "tau_b", "alpha_tau", "beta_tau",
                "alpha_e", "beta_e", "sigma_ell", "tau_ell", "epsilon", "sigma_tau", "beta_0",
                "lambda", "max_grade", "components", "grade_set"},
               origin);
    if (hj.contains("preset")) spec.hp = preset_hyperparameters(hj["preset"].get<std::string>());
    apply_hp_keys(hj, spec.hp, origin);
  }
  spec.components = spec.hp.components;  // keep in sync when only hp sets it
  if (obj.contains("components")) {
    spec.components = static_cast<int>(obj["components"].get<double>());
    spec.hp.components = spec.components;
  }
  spec.validate();
  return spec;
}

ClassSpec load_class_spec(const std::filesystem::path& path) {
  return parse_class_spec(read_file(path), path.string());
}

std::string dump_class_spec(const ClassSpec& spec) {
  json obj;
  obj["students"] = spec.students;
  obj["weeks"] = spec.weeks;
  obj["grades_per_submission"] = spec.grades_per_submission;
  obj["grades_per_grader_per_week"] = spec.grades_per_grader_per_week;
  obj["components"] = spec.components;
  obj["tas"] = spec.tas;
  obj["ta_coverage"] = spec.ta_coverage;
  obj["ta_reliability_mean"] = spec.ta_reliability_mean;
  obj["student_reliability_mean"] = spec.student_reliability_mean;
  obj["calibrations_per_week"] = spec.calibrations_per_week;
  obj["seed"] = spec.seed;
  json hj = json::parse(dump_config(spec.hp, ModelConfig{}));
  json hp_only;
  for (const char* k : {"mu_s", "tau_s", "tau_b", "alpha_tau", "beta_tau", "alpha_e", "beta_e",
                        "tau_ell", "epsilon", "beta_0", "lambda", "max_grade", "components",
                        "grade_set"})
    hp_only[k] = hj[k];
  obj["hyperparameters"] = hp_only;
  return obj.dump(2) + "\n";
}

void save_summary(const PosteriorSummary& summary, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "kind,id,component,mean,sd,q05,q10,q50,q90,q95,map_grade";
  for (int g : summary.grade_set) out << ",m" << g;
  out << '\n';
  const int n_masses = static_cast<int>(summary.grade_set.size());
  auto stats_cols = [&](const VarStats& st) {
    out << ',' << fmt(st.mean) << ',' << fmt(st.sd) << ',' << fmt(st.q05) << ',' << fmt(st.q10)
        << ',' << fmt(st.q50) << ',' << fmt(st.q90) << ',' << fmt(st.q95);
  };
  for (std::size_t u = 0; u < summary.submission_ids.size(); ++u) {
    for (int c = 0; c < summary.components; ++c) {
      const int g = static_cast<int>(u) * summary.components + c;
      out << "true_grade," << summary.submission_ids[u] << ',' << c;
      stats_cols(summary.true_grade[g]);
      out << ',' << summary.map_grade[g];
      for (int k = 0; k < n_masses; ++k) out << ',' << fmt(summary.masses[g][k]);
      out << '\n';
    }
  }
  auto grader_rows = [&](const char* kind, const std::vector<VarStats>& stats) {
    for (std::size_t v = 0; v < summary.grader_ids.size(); ++v) {
      out << kind << ',' << summary.grader_ids[v] << ',';
      stats_cols(stats[v]);
      out << ',';
      for (int k = 0; k < n_masses; ++k) out << ',';
      out << '\n';
    }
  };
  grader_rows("reliability", summary.reliability);
  grader_rows("bias", summary.bias);
  grader_rows("effort_prob", summary.effort_prob);
  write_file(path, out.str());
}

PosteriorSummary load_summary(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path.string() + ": empty summary");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split(line, ',');
  if (header.size() < 12 || header[0] != "kind")
    throw std::invalid_argument(path.string() + ": unexpected summary header");
  PosteriorSummary s;
  for (std::size_t i = 11; i < header.size(); ++i) {
    if (header[i].size() < 2 || header[i][0] != 'm')
      throw std::invalid_argument(path.string() + ": unexpected mass column " + header[i]);
    s.grade_set.push_back(std::stoi(header[i].substr(1)));
  }
  const int n_masses = static_cast<int>(s.grade_set.size());

  std::map<std::string, int> grader_pos;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (static_cast<int>(f.size()) != 11 + n_masses)
      throw std::invalid_argument(path.string() + ": bad summary row \"" + line + "\"");
    VarStats st;
    st.mean = std::stod(f[3]);
    st.sd = std::stod(f[4]);
    st.q05 = std::stod(f[5]);
    st.q10 = std::stod(f[6]);
    st.q50 = std::stod(f[7]);
    st.q90 = std::stod(f[8]);
    st.q95 = std::stod(f[9]);
    if (f[0] == "true_grade") {
      const int c = std::stoi(f[2]);
      if (c == 0) s.submission_ids.push_back(f[1]);
      s.components = std::max(s.components, c + 1);
      s.true_grade.push_back(st);
      s.map_grade.push_back(std::stoi(f[10]));
      std::vector<double> mass(n_masses);
      for (int k = 0; k < n_masses; ++k) mass[k] = std::stod(f[11 + k]);
      s.masses.push_back(std::move(mass));
    } else {
      auto pos = grader_pos.find(f[1]);
      if (pos == grader_pos.end()) {
        pos = grader_pos.emplace(f[1], static_cast<int>(s.grader_ids.size())).first;
        s.grader_ids.push_back(f[1]);
        s.reliability.emplace_back();
        s.bias.emplace_back();
        s.effort_prob.emplace_back();
      }
      if (f[0] == "reliability")
        s.reliability[pos->second] = st;
      else if (f[0] == "bias")
        s.bias[pos->second] = st;
      else if (f[0] == "effort_prob")
        s.effort_prob[pos->second] = st;
      else
        throw std::invalid_argument(path.string() + ": unknown row kind " + f[0]);
    }
  }
  return s;
}

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  json obj;
  obj["true_grade"] = gt.true_grade;
  obj["reliability"] = gt.reliability;
  obj["bias"] = gt.bias;
  obj["effort_prob"] = gt.effort_prob;
  obj["effort"] = gt.effort;
  write_file(path, obj.dump(2) + "\n");
}

void save_traces(const std::vector<SampleTrace>& traces, const IndexedDataset& data,
                 const std::string& config_hash, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["config_hash"] = config_hash;
  manifest["chains"] = json::array();
  std::vector<std::string> names;
  for (int u = 0; u < data.n_submissions; ++u)
    for (int c = 0; c < data.components; ++c)
      names.push_back("s:" + data.submission_ids[u] + ":" + std::to_string(c));
  for (const auto& id : data.grader_ids) names.push_back("tau:" + id);
  for (const auto& id : data.grader_ids) names.push_back("b:" + id);
  for (const auto& id : data.grader_ids) names.push_back("e:" + id);
  manifest["variables"] = names;

  for (const auto& t : traces) {
    const std::string file = "chain_" + std::to_string(t.chain_id) + ".f64";
    json cj;
    cj["file"] = file;
    cj["seed"] = t.seed;
    cj["kept"] = t.kept;
    manifest["chains"].push_back(cj);
    std::string bytes;
    const int cols = t.n_grade_vars + 3 * t.n_graders;
    bytes.reserve(static_cast<std::size_t>(t.kept) * cols * sizeof(double));
    auto append_row = [&](const double* p, int n) {
      bytes.append(reinterpret_cast<const char*>(p), static_cast<std::size_t>(n) * sizeof(double));
    };
    for (int k = 0; k < t.kept; ++k) {
      append_row(t.true_grade.data() + static_cast<std::size_t>(k) * t.n_grade_vars, t.n_grade_vars);
      append_row(t.reliability.data() + static_cast<std::size_t>(k) * t.n_graders, t.n_graders);
      append_row(t.bias.data() + static_cast<std::size_t>(k) * t.n_graders, t.n_graders);
      append_row(t.effort_prob.data() + static_cast<std::size_t>(k) * t.n_graders, t.n_graders);
    }
    write_file(dir / file, bytes);
  }
  write_file(dir / "trace_manifest.json", manifest.dump(2) + "\n");
}

namespace {
void metric_cols(std::ostringstream& out, const MetricReport& m) {
  const double* values[] = {&m.true_grade_mae,       &m.true_grade_rmse,
                            &m.accuracy,             &m.map_mae,
                            &m.reliability_spearman, &m.effort_spearman,
                            &m.bias_mae,             &m.heldout_loglik,
                            &m.mip_mae,              &m.mip_map_disagreement,
                            &m.mip_matches_report,   &m.p_vs_full};
  for (const double* v : values) {
    out << ',';
    if (!std::isnan(*v)) out << fmt(*v);
  }
}
}  // namespace

void save_experiment_table(const std::vector<ExperimentRow>& rows, const std::filesystem::path& path) {
  std::ostringstream out;
  const char* metrics[] = {"true_grade_mae", "true_grade_rmse", "accuracy",       "map_mae",
                           "reliability_spearman", "effort_spearman", "bias_mae", "heldout_loglik",
                           "mip_mae", "mip_map_disagreement", "mip_matches_report", "p_vs_full"};
  out << "label,setting,replicates";
  for (const char* m : metrics) out << ',' << m;
  for (const char* m : metrics) out << ',' << m << "_ci95";
  out << '\n';
  for (const auto& row : rows) {
    out << row.label << ',' << fmt(row.setting) << ',' << row.replicates;
    metric_cols(out, row.mean);
    metric_cols(out, row.ci95);
    out << '\n';
  }
  write_file(path, out.str());
}

void save_explanations(const ExplainReport& report, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "submission_id,status,objective,graders,weights,grades,map_grades,slacks\n";
  auto join = [](const auto& items, auto f) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) s += '|';
      s += f(items[i]);
    }
    return s;
  };
  for (const auto& item : report.items) {
    const bool ok = item.solution.status == MipStatus::Optimal;
    out << item.submission_id << ',' << (ok ? "optimal" : "infeasible") << ','
        << (ok ? fmt(item.solution.objective) : std::string()) << ','
        << join(item.grader_ids, [](const std::string& s) { return s; }) << ','
        << join(item.solution.weights, [](double w) { return fmt3(w); }) << ','
        << join(item.solution.grades, [](int g) { return std::to_string(g); }) << ','
        << join(item.map_grades, [](int g) { return std::to_string(g); }) << ','
        << join(item.solution.slacks, [](double s) { return fmt3(s); }) << '\n';
  }
  write_file(path, out.str());
}

void save_fold_table(const std::vector<double>& fold_logliks, const std::vector<int>& fold_sizes,
                     const std::filesystem::path& path) {
  std::ostringstream out;
  out << "fold,groups,heldout_loglik\n";
  double total = 0.0;
  long groups = 0;
  for (std::size_t i = 0; i < fold_logliks.size(); ++i) {
    out << i << ',' << fold_sizes[i] << ',' << fmt(fold_logliks[i]) << '\n';
    total += fold_logliks[i];
    groups += fold_sizes[i];
  }
  out << "total," << groups << ',' << fmt(total) << '\n';
  write_file(path, out.str());
}

void save_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  json obj;
  obj["command"] = manifest.command;
  obj["config_hash"] = manifest.config_hash;
  obj["master_seed"] = manifest.master_seed;
  obj["inputs"] = json::object();
  for (const auto& [p, digest] : manifest.inputs) obj["inputs"][p] = digest;
  obj["outputs"] = manifest.outputs;
  obj["timings"] = {{"wall_seconds", manifest.wall_seconds}};
  write_file(path, obj.dump(2) + "\n");
}

}  // namespace pg::io
