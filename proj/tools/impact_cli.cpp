// Command-line front end for the impact pipeline.
#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "impact/compare.hpp"
#include "impact/io.hpp"
#include "impact/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> ell_max;
  std::string out_dir;
  std::string input;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "config file (default: $IMPACT_CONFIG)");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--ell-max", o.ell_max, "calibration lag grid length");
  cmd->add_option("-o,--out", o.out_dir, "artifact directory");
  cmd->add_option("-i,--input", o.input, "classified events CSV");
  cmd->add_option("--set", o.sets, "extra key=value config entries");
}

impact::RunConfig resolve(const Overrides& o) {
  impact::RunConfig cfg;
  std::string path = o.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(impact::kConfigEnv)) path = env;
  }
  if (!path.empty()) cfg = impact::load_config(path);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw impact::Error("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.ell_max) cfg.ell_max = *o.ell_max;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (!o.input.empty()) cfg.input = o.input;
  return cfg;
}

int run(const Overrides& o, const std::vector<impact::Stage>& stages) {
  const auto result = impact::run_pipeline(resolve(o), stages);
  for (const auto& s : result.stages) {
    std::cout << impact::to_string(s.stage) << ": " << (s.ok ? "ok" : "FAILED") << (s.message.empty() ? "" : " (")
              << s.message << (s.message.empty() ? "" : ")") << '\n';
  }
  return result.exit_code();
}

int compare_files(const std::string& a, const std::string& b) {
  std::ifstream fa(a);
  std::ifstream fb(b);
  if (!fa || !fb) throw impact::Error("cannot open diffusion files to compare");
  const auto ca = impact::read_diffusion_csv(fa);
  const auto cb = impact::read_diffusion_csv(fb);
  if (ca.empty() || cb.empty()) throw impact::Error("empty diffusion file");
  std::cout << impact::to_json(impact::compare_curves(ca.front(), cb.front())) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrate, predict and simulate order-book impact models"};
  app.require_subcommand(1);
  Overrides o;

  std::string stages_text;
  auto* run_cmd = app.add_subcommand("run", "run several stages in dependency order");
  add_common(run_cmd, o);
  run_cmd->add_option("--stages", stages_text, "comma-separated stage list")->required();

  std::map<CLI::App*, impact::Stage> single;
  for (const char* name : {"generate", "classify", "validate", "estimate", "calibrate-tim", "calibrate-hdim",
                           "refine-scale", "predict-d", "simulate", "roundtrip"}) {
    auto* cmd = app.add_subcommand(name, std::string("run the '") + name + "' stage");
    add_common(cmd, o);
    cmd->add_option("--stages", stages_text, "additional stages to run with this one");
    single[cmd] = *impact::parse_stage(name);
  }

  std::string file_a;
  std::string file_b;
  auto* compare_cmd = app.add_subcommand("compare", "compare diffusion curves");
  add_common(compare_cmd, o);
  compare_cmd->add_option("--a", file_a, "diffusion CSV to compare");
  compare_cmd->add_option("--b", file_b, "reference diffusion CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return run(o, impact::parse_stages(stages_text));
    if (compare_cmd->parsed()) {
      if (!file_a.empty() || !file_b.empty()) return compare_files(file_a, file_b);
      return run(o, {impact::Stage::Compare});
    }
    for (const auto& [cmd, stage] : single) {
      if (!cmd->parsed()) continue;
      auto stages = stages_text.empty() ? std::vector<impact::Stage>{} : impact::parse_stages(stages_text);
      stages.push_back(stage);
      return run(o, stages);
    }
  } catch (const impact::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
