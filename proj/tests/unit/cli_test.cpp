#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "flowdiff/data/csv.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int status = 0;
    std::string output;
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("flowdiff_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        std::ofstream(config()) << R"({
  "seed": 3,
  "synth": {"num_regions": 6, "num_days": 6},
  "kge": {"dim": 8, "epochs": 5},
  "diffusion": {"steps": 20, "beta_end": 0.3},
  "model": {"hidden": 8, "layers": 1, "heads": 2, "volume_hidden": 8},
  "train": {"pretrain_epochs": 2, "epochs": 2, "alternation": 1},
  "sampling": {"num_samples": 4}
})";
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path config() const { return dir_ / "config.json"; }
    fs::path out() const { return dir_ / "run"; }

    CliResult cli(const std::string& args) const {
        const auto log = dir_ / "cli.log";
        const std::string cmd = std::string(FLOWDIFF_CLI) + " " + args + " > " + log.string() + " 2>&1";
        const int raw = std::system(cmd.c_str());
        CliResult r;
        r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        std::ifstream in(log);
        std::stringstream ss;
        ss << in.rdbuf();
        r.output = ss.str();
        return r;
    }

    std::string common() const { return "--config " + config().string() + " --out " + out().string() + " -q"; }

    fs::path dir_;
};

TEST_F(CliTest, UnknownSubcommandFails) {
    const auto r = cli("frobnicate");
    EXPECT_NE(r.status, 0);
}

TEST_F(CliTest, MissingSubcommandFails) { EXPECT_NE(cli("").status, 0); }

TEST_F(CliTest, EvaluateBeforeGenerateReportsMissingSamples) {
    ASSERT_EQ(cli("synth " + common()).status, 0);
    const auto r = cli("evaluate " + common());
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.output.find("samples not found"), std::string::npos) << r.output;
}

TEST_F(CliTest, GenerateWithoutCheckpointFails) {
    ASSERT_EQ(cli("synth " + common()).status, 0);
    const auto r = cli("generate " + common());
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.output.find("trainer: checkpoint not found"), std::string::npos) << r.output;
}

TEST_F(CliTest, BadConfigIsOneLineDiagnostic) {
    std::ofstream(config()) << R"({"train": {"epocs": 1}})";
    const auto r = cli("synth " + common());
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.output.find("config: unknown key 'train.epocs'"), std::string::npos) << r.output;
    EXPECT_EQ(r.output.find('\n'), r.output.size() - 1) << r.output;
}

TEST_F(CliTest, PipelineProducesMetrics) {
    for (const char* stage : {"synth", "build-kg", "train-kge", "train", "generate", "evaluate"}) {
        const auto r = cli(std::string(stage) + " " + common());
        ASSERT_EQ(r.status, 0) << stage << ": " << r.output;
    }
    EXPECT_TRUE(fs::exists(out() / "checkpoint.bin"));
    EXPECT_TRUE(fs::exists(out() / "samples.npy.gz"));
    EXPECT_TRUE(fs::exists(out() / "train_log.csv"));
    const auto metrics = flowdiff::data::read_text(out() / "metrics.json");
    for (const char* key : {"\"mae\"", "\"rmse\"", "\"smape\"", "\"mmd\""}) {
        EXPECT_NE(metrics.find(key), std::string::npos) << key << " missing from " << metrics;
    }
}

TEST_F(CliTest, SeedFlagOverridesConfig) {
    ASSERT_EQ(cli("synth " + common() + " --seed 9").status, 0);
    const auto saved = flowdiff::data::read_text(out() / "config.json");
    EXPECT_NE(saved.find("\"seed\": 9"), std::string::npos) << saved;
}

}  // namespace
