#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pg/cli.hpp"
#include "pg/io.hpp"

namespace fs = std::filesystem;
using pg::cli::execute;

namespace {

const fs::path kData = fs::path(PG_TEST_DATA_DIR) / "golden10";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("pgtest_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int count_lines(const fs::path& p, const std::string& prefix = "") {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line))
    if (prefix.empty() || line.rfind(prefix, 0) == 0) ++n;
  return n;
}

std::string spec_json(std::uint64_t seed) {
  return "{\n  \"students\": 6,\n  \"weeks\": 1,\n  \"tas\": 0,\n  \"seed\": " +
         std::to_string(seed) + ",\n  \"hyperparameters\": {\"preset\": \"paper-default\"}\n}\n";
}

}  // namespace

TEST_CASE("help exits zero, bad flags exit two") {
  CHECK(execute({"--help"}) == 0);
  CHECK(execute({"infer", "--help"}) == 0);
  CHECK(execute({"--definitely-not-a-flag"}) == 2);
  CHECK(execute({"infer"}) == 2);  // missing required options
  CHECK(execute({"not-a-subcommand"}) == 2);
}

TEST_CASE("simulate is byte deterministic") {
  TempDir dir("simulate");
  pg::io::write_file(dir.path / "spec.json", spec_json(31337));
  REQUIRE(execute({"simulate", "--spec", (dir.path / "spec.json").string(), "--out",
                   (dir.path / "a").string()}) == 0);
  REQUIRE(execute({"simulate", "--spec", (dir.path / "spec.json").string(), "--out",
                   (dir.path / "b").string()}) == 0);
  CHECK(pg::io::read_file(dir.path / "a" / "dataset.csv") ==
        pg::io::read_file(dir.path / "b" / "dataset.csv"));
  CHECK(pg::io::read_file(dir.path / "a" / "dataset.meta.json") ==
        pg::io::read_file(dir.path / "b" / "dataset.meta.json"));
  CHECK(pg::io::read_file(dir.path / "a" / "groundtruth.json") ==
        pg::io::read_file(dir.path / "b" / "groundtruth.json"));

  SUBCASE("seed flag overrides the spec") {
    REQUIRE(execute({"simulate", "--spec", (dir.path / "spec.json").string(), "--out",
                     (dir.path / "c").string(), "--seed", "99"}) == 0);
    CHECK(pg::io::read_file(dir.path / "a" / "dataset.csv") !=
          pg::io::read_file(dir.path / "c" / "dataset.csv"));
  }
}

TEST_CASE("infer on the golden dataset") {
  TempDir dir("infer");
  const std::string data = (kData / "dataset.csv").string();
  const std::string sidecar = (kData / "dataset.meta.json").string();
  const std::string config = (kData / "config.json").string();
  const std::string digest_before = pg::io::file_digest(data);
  REQUIRE(execute({"infer", "--data", data, "--sidecar", sidecar, "--config", config, "--out",
                   (dir.path / "run").string(), "--threads", "2"}) == 0);

  // 10 submissions x 4 components true-grade rows; 11 graders x 3 kinds
  const fs::path summary = dir.path / "run" / "summary.csv";
  CHECK(count_lines(summary, "true_grade,") == 40);
  CHECK(count_lines(summary, "reliability,") == 11);
  CHECK(count_lines(summary, "bias,") == 11);
  CHECK(count_lines(summary, "effort_prob,") == 11);
  CHECK(count_lines(summary) == 1 + 40 + 33);

  // manifest carries the required fields
  const std::string manifest = pg::io::read_file(dir.path / "run" / "manifest.json");
  for (const char* key : {"command", "config_hash", "master_seed", "inputs", "outputs", "timings"})
    CHECK(manifest.find(key) != std::string::npos);

  // inputs were not mutated
  CHECK(pg::io::file_digest(data) == digest_before);

  SUBCASE("summary round-trips through the loader") {
    const pg::PosteriorSummary s = pg::io::load_summary(summary);
    CHECK(s.submission_ids.size() == 10);
    CHECK(s.components == 4);
    CHECK(s.grader_ids.size() == 11);
    CHECK(s.grade_set == std::vector<int>{0, 1, 2, 3, 4, 5});
    for (const auto& m : s.masses) {
      double sum = 0.0;
      for (double x : m) sum += x;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("explain consumes the summary") {
    REQUIRE(execute({"explain", "--summary", summary.string(), "--data", data, "--sidecar",
                     sidecar, "--out", (dir.path / "explain").string()}) == 0);
    CHECK(count_lines(dir.path / "explain" / "explanations.csv") == 1 + 10);
  }

  SUBCASE("repeat run with the same seed is byte identical") {
    REQUIRE(execute({"infer", "--data", data, "--sidecar", sidecar, "--config", config, "--out",
                     (dir.path / "run2").string(), "--threads", "1"}) == 0);
    CHECK(pg::io::read_file(summary) == pg::io::read_file(dir.path / "run2" / "summary.csv"));
  }
}

TEST_CASE("model flags rewire the engine") {
  TempDir dir("flags");
  const std::string data = (kData / "dataset.csv").string();
  const std::string sidecar = (kData / "dataset.meta.json").string();
  const std::string config = (kData / "config.json").string();
  REQUIRE(execute({"infer", "--data", data, "--sidecar", sidecar, "--config", config,
                   "--no-censoring", "--no-effort", "--out", (dir.path / "pg1").string()}) == 0);
  const std::string canonical = pg::io::read_file(dir.path / "pg1" / "config_canonical.json");
  CHECK(canonical.find("\"censoring_enabled\": false") != std::string::npos);
  CHECK(canonical.find("\"effort_enabled\": false") != std::string::npos);
  CHECK(execute({"infer", "--data", data, "--config", config, "--effort", "--no-effort", "--out",
                 (dir.path / "x").string()}) == 2);
}

TEST_CASE("config loading") {
  TempDir dir("config");
  SUBCASE("preset only gives full defaults") {
    pg::io::write_file(dir.path / "c.json", "{\"preset\": \"paper-default\"}\n");
    const pg::io::LoadedConfig loaded = pg::io::load_config(dir.path / "c.json");
    CHECK(loaded.hp.epsilon == doctest::Approx(0.05));
    CHECK(loaded.config.sampling.chains == 4);
    CHECK(loaded.config.sampling.samples == 1100);
    CHECK(loaded.config.sampling.burn_in == 100);
    CHECK(loaded.config.grids.true_grade.count == 101);
    CHECK(loaded.config.grids.reliability.lo == doctest::Approx(0.1));
    CHECK(loaded.config.grids.bias.count == 61);
  }
  SUBCASE("conflicting sigma and tau keys fail") {
    pg::io::write_file(dir.path / "c.json", "{\"sigma_s\": 0.8, \"tau_s\": 1.5625}\n");
    CHECK_THROWS_WITH_AS(pg::io::load_config(dir.path / "c.json"),
                         doctest::Contains("conflicting keys"), std::invalid_argument);
  }
  SUBCASE("unknown keys fail") {
    pg::io::write_file(dir.path / "c.json", "{\"mu_z\": 4.0}\n");
    CHECK_THROWS_WITH_AS(pg::io::load_config(dir.path / "c.json"),
                         doctest::Contains("unknown key"), std::invalid_argument);
  }
  SUBCASE("sigma keys convert to precisions") {
    pg::io::write_file(dir.path / "c.json", "{\"sigma_s\": 0.5, \"sigma_b\": 2.0}\n");
    const pg::io::LoadedConfig loaded = pg::io::load_config(dir.path / "c.json");
    CHECK(loaded.hp.tau_s == doctest::Approx(4.0));
    CHECK(loaded.hp.tau_b == doctest::Approx(0.25));
  }
  SUBCASE("dump-load round trip is canonical") {
    pg::io::write_file(dir.path / "c.json",
                       "{\"preset\": \"fall21\", \"sampling\": {\"chains\": 2}, \"seed\": 7}\n");
    const pg::io::LoadedConfig first = pg::io::load_config(dir.path / "c.json");
    const std::string canon = pg::io::dump_config(first.hp, first.config);
    const pg::io::LoadedConfig second = pg::io::parse_config(canon);
    CHECK(pg::io::dump_config(second.hp, second.config) == canon);
    CHECK(second.hp.tau_ell == doctest::Approx(4.0));
    CHECK(second.config.sampling.chains == 2);
    CHECK(second.config.seed == 7);
  }
  SUBCASE("parse errors carry the origin") {
    pg::io::write_file(dir.path / "c.json", "{nope\n");
    CHECK_THROWS_AS(pg::io::load_config(dir.path / "c.json"), std::invalid_argument);
  }
}

TEST_CASE("xval produces a fold table") {
  TempDir dir("xval");
  pg::io::write_file(dir.path / "spec.json", spec_json(2024));
  REQUIRE(execute({"simulate", "--spec", (dir.path / "spec.json").string(), "--out",
                   (dir.path / "sim").string()}) == 0);
  pg::io::write_file(dir.path / "config.json",
                     "{\"preset\": \"paper-default\", \"sampling\": {\"chains\": 2, \"samples\": "
                     "40, \"burn_in\": 10}, \"seed\": 5}\n");
  REQUIRE(execute({"xval", "--data", (dir.path / "sim" / "dataset.csv").string(), "--config",
                   (dir.path / "config.json").string(), "--k", "3", "--out",
                   (dir.path / "cv").string(), "--threads", "2"}) == 0);
  const fs::path folds = dir.path / "cv" / "folds.csv";
  CHECK(count_lines(folds) == 1 + 3 + 1);  // header, 3 folds, total row
  const std::string text = pg::io::read_file(folds);
  CHECK(text.find("total,") != std::string::npos);
}

TEST_CASE("experiment subcommand writes a results table") {
  TempDir dir("exp");
  pg::io::write_file(dir.path / "spec.json", spec_json(77));
  pg::io::write_file(dir.path / "config.json",
                     "{\"preset\": \"paper-default\", \"sampling\": {\"chains\": 2, \"samples\": "
                     "30, \"burn_in\": 5}}\n");
  REQUIRE(execute({"experiment", "--kind", "vary_weeks", "--settings", "1", "--replicates", "1",
                   "--spec", (dir.path / "spec.json").string(), "--config",
                   (dir.path / "config.json").string(), "--out", (dir.path / "out").string(),
                   "--seed", "3", "--threads", "2"}) == 0);
  CHECK(count_lines(dir.path / "out" / "results.csv") == 2);
  CHECK(execute({"experiment", "--kind", "bogus"}) == 2);
  CHECK(execute({"experiment", "--kind", "misspec", "--settings", "3"}) == 2);  // knob missing
}
