#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "adenoise/data.hpp"
#include "adenoise/tuning.hpp"
#include "support/tempdir.hpp"

using namespace adenoise;

namespace {

int run(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string(ADENOISE_CLI) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Tiny end-to-end configuration: a handful of short utterances and a
/// small network so the whole pipeline runs in seconds.
void write_config(const std::filesystem::path& p) {
  std::ofstream(p) << R"({
  "seed": 5,
  "policy": {"hidden_size": 8},
  "trainer": {"epochs": 1, "lr_grid": [0.001]},
  "data": {"num_clean": 8, "num_noise": 2, "num_rir": 1, "duration_s": 0.6, "lead_in_s": 0.12,
           "split_ratios": [50, 25, 25]},
  "tune": {"max_iter": 4}
})";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage and config errors exit with 1") {
    testing::TempDir dir("cli-errors");
    const auto log = dir / "log.txt";
    CHECK(run("", log) == 1);
    CHECK(run("frobnicate", log) == 1);
    CHECK(run("synth --config " + (dir / "missing.json").string(), log) == 1);
    std::ofstream(dir / "typo.json") << R"({"trainer": {"epohcs": 2}})";
    CHECK(run("synth --config " + (dir / "typo.json").string() + " --out " + (dir / "c").string(), log) == 1);
    CHECK(slurp(log).find("trainer.epohcs") != std::string::npos);
  }

  TEST_CASE("data errors exit with 2") {
    testing::TempDir dir("cli-data");
    const auto log = dir / "log.txt";
    CHECK(run("mix --corpus " + (dir / "nothing").string() + " --out " + (dir / "m").string(), log) == 2);
    CHECK(run("enhance --in " + (dir / "none.wav").string() + " --out " + (dir / "o.wav").string(), log) == 2);
  }

  TEST_CASE("the full pipeline runs and is deterministic") {
    testing::TempDir dir("cli-pipeline");
    const auto cfg = dir / "config.json";
    write_config(cfg);
    const std::string c = " --config " + cfg.string();
    const auto log = dir / "log.txt";
    const auto d = [&](const std::string& name) { return (dir / name).string(); };

    REQUIRE(run("synth" + c + " --out " + d("corpus"), log) == 0);
    int count = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / "corpus" / "clean")) count += e.path().extension() == ".wav";
    CHECK(count == 8);

    REQUIRE(run("mix" + c + " --corpus " + d("corpus") + " --snr-grid 0,10,20,30 --out " + d("mix"), log) == 0);
    const Manifest m = load_manifest(dir / "mix" / "manifest.json");
    REQUIRE(m.entries.size() == 8);
    for (const auto& e : m.entries) {
      REQUIRE(e.noisy_path.has_value());
      CHECK(std::filesystem::exists(*e.noisy_path));
      const Utterance u = render_utterance(m, e);
      const Eigen::VectorXd added = u.noisy.samples - u.clean.samples;
      CHECK(std::abs(10.0 * std::log10(u.clean.samples.squaredNorm() / added.squaredNorm()) - e.target_snr_db) < 1e-9);
    }

    const std::string manifest = " --manifest " + d("mix/manifest.json");
    REQUIRE(run("tune" + c + manifest + " --out " + d("params.json"), log) == 0);
    CHECK_NOTHROW(load_params(dir / "params.json"));
    CHECK(slurp(dir / "params.trace.csv").rfind("iteration,evaluations,best_value,spread", 0) == 0);
    REQUIRE(run("tune" + c + manifest + " --out " + d("params2.json"), log) == 0);
    CHECK(slurp(dir / "params.json") == slurp(dir / "params2.json"));

    const std::string params = " --params " + d("params.json");
    REQUIRE(run("train" + c + manifest + params + " --out " + d("run1"), log) == 0);
    REQUIRE(run("train" + c + manifest + params + " --out " + d("run2"), log) == 0);
    CHECK(slurp(dir / "run1" / "training_log.csv") == slurp(dir / "run2" / "training_log.csv"));
    CHECK(slurp(dir / "run1" / "checkpoint.bin") == slurp(dir / "run2" / "checkpoint.bin"));
    CHECK(slurp(dir / "run1" / "training_log.csv").rfind("episode_id,epoch,utterance_id,seed,learning_rate,return,gradient_norm", 0) == 0);
    REQUIRE(run("train" + c + manifest + params + " --baseline-mode none --out " + d("run0"), log) == 0);

    const std::string noisy = m.split(Split::Test).front()->noisy_path.value();
    REQUIRE(run("enhance" + c + " --checkpoint " + d("run1/checkpoint.bin") + " --in " + noisy + " --out " + d("e.wav") +
                    " --trace " + d("e.csv"),
                log) == 0);
    CHECK(read_wav(dir / "e.wav").size() == read_wav(noisy).size());
    CHECK(slurp(dir / "e.csv").rfind("frame,time_s,", 0) == 0);
    CHECK(run("enhance" + c + " --checkpoint " + d("run1/checkpoint.bin") + params + " --in " + noisy + " --out " +
                  d("x.wav"),
              log) == 1);

    REQUIRE(run("eval" + c + manifest + params + " --checkpoint " + d("run1/checkpoint.bin") + " --checkpoint " +
                    d("run0/checkpoint.bin") + " --out " + d("eval"),
                log) == 0);
    const std::string table = slurp(dir / "eval" / "results.txt");
    for (const char* row : {"noisy", "baseline", "rl-unbiased", "rl-baselined", "clean"})
      CHECK(table.find(row) != std::string::npos);
    CHECK(std::filesystem::exists(dir / "eval" / "buckets.csv"));
    CHECK(std::filesystem::exists(dir / "eval" / "report_clean.csv"));
  }
}
