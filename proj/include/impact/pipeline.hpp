#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "impact/config.hpp"
#include "impact/errors.hpp"

namespace impact {

enum class Stage {
  Generate,
  Classify,
  Validate,
  Estimate,
  CalibrateTim,
  CalibrateHdim,
  RefineScale,
  PredictD,
  Simulate,
  Compare,
  Roundtrip,
};

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view text);
/// Comma-separated stage list, returned in execution order.
std::vector<Stage> parse_stages(std::string_view text);

/// A stage's input artifact is missing.
class DependencyError : public Error {
 public:
  using Error::Error;
};

struct StageOutcome {
  Stage stage;
  bool ok = true;
  std::string message;
};

struct PipelineResult {
  std::vector<StageOutcome> stages;
  [[nodiscard]] bool ok() const;
  [[nodiscard]] int exit_code() const { return ok() ? 0 : 1; }
};

/// Runs the stages in dependency order, reading and writing artifacts in
/// config.out_dir. Each stage writes `<stage>.manifest.json`. Invariant
/// violations mark the stage as failed and stop the run.
PipelineResult run_pipeline(const RunConfig& config, std::vector<Stage> stages);

}  // namespace impact
