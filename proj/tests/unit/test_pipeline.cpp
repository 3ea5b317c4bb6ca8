#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "impact/pipeline.hpp"

using namespace impact;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("impact_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small_config(const fs::path& out) {
  RunConfig cfg;
  cfg.out_dir = out;
  cfg.ell_max = 16;
  cfg.gen_events = 20000;
  cfg.gen_sessions = 2;
  cfg.gen_sign_law = "markov";
  cfg.gen_rho = 0.5;
  cfg.D0 = 0.01;
  return cfg;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(IMPACT_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Stages, ParseInExecutionOrder) {
  const auto s = parse_stages("compare,estimate,generate,estimate");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], Stage::Generate);
  EXPECT_EQ(s[1], Stage::Estimate);
  EXPECT_EQ(s[2], Stage::Compare);
  EXPECT_EQ(parse_stage("calibrate-hdim"), Stage::CalibrateHdim);
  EXPECT_FALSE(parse_stage("calibrate"));
  EXPECT_THROW(parse_stages("estimate,bogus"), Error);
}

TEST(Pipeline, MissingUpstreamArtifactIsDependencyError) {
  const auto dir = fresh_dir("dep");
  EXPECT_THROW(run_pipeline(small_config(dir), {Stage::CalibrateTim}), DependencyError);
}

TEST(Pipeline, FullRunWritesManifestsAndIsDeterministic) {
  const auto a = fresh_dir("full_a");
  const auto b = fresh_dir("full_b");
  const std::vector<Stage> all = {Stage::Generate, Stage::Estimate, Stage::CalibrateTim, Stage::CalibrateHdim,
                                  Stage::PredictD, Stage::Simulate, Stage::Compare};
  const auto ra = run_pipeline(small_config(a), all);
  ASSERT_TRUE(ra.ok());
  EXPECT_EQ(ra.exit_code(), 0);
  ASSERT_TRUE(run_pipeline(small_config(b), all).ok());
  for (const char* f : {"events.csv", "stats.csv", "curves.csv", "tim_kernels.csv", "kappa.csv", "dgstar.csv",
                        "diffusion.csv", "path_tim.csv", "path_hdim.csv", "diffusion_sim_tim.csv",
                        "diffusion_sim_hdim.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto m = nlohmann::json::parse(slurp(a / "estimate.manifest.json"));
  EXPECT_EQ(m.at("seed").get<std::uint64_t>(), 1u);
  EXPECT_TRUE(m.contains("config_digest"));
  EXPECT_TRUE(m.at("outputs").contains("curves.csv"));
  const auto cmp = nlohmann::json::parse(slurp(a / "compare.json"));
  EXPECT_TRUE(cmp.is_object());
}

TEST(Pipeline, SeedChangesGeneratedEvents) {
  const auto a = fresh_dir("seed_a");
  const auto b = fresh_dir("seed_b");
  auto ca = small_config(a);
  auto cb = small_config(b);
  cb.seed = 2;
  ASSERT_TRUE(run_pipeline(ca, {Stage::Generate}).ok());
  ASSERT_TRUE(run_pipeline(cb, {Stage::Generate}).ok());
  EXPECT_NE(slurp(a / "events.csv"), slurp(b / "events.csv"));
}

TEST(Cli, ExitCodes) {
  const auto dir = fresh_dir("cli");
  EXPECT_EQ(run_cli("run --stages generate,estimate --out " + dir.string() + " --ell-max 8 --set gen_events=5000"), 0);
  EXPECT_TRUE(fs::exists(dir / "curves.csv"));
  EXPECT_EQ(run_cli("calibrate-tim --out " + fresh_dir("cli_dep").string()), 3);
  EXPECT_EQ(run_cli("run --stages generate --out " + dir.string() + " --set no_such_key=1"), 2);
  EXPECT_NE(run_cli("run --stages nonsense --out " + dir.string()), 0);
}
