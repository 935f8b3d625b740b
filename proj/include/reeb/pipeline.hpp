#pragma once

#include "reeb/models.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace reeb {

/// Stage names in execution order.
const std::vector<std::string>& pipeline_stage_names();

struct RunConfig {
  Json model;              // model document (resolved from model_path when given)
  std::uint64_t seed = 0;
  std::string output_dir = "reeb-out";
  int workers = 1;
  std::map<std::string, Json> stages;  // stage name -> options object
  Json source;             // the config document as read
};

/// Validates a config document. Relative model paths resolve against
/// `base_dir`. Unknown keys raise validation errors naming the field path.
RunConfig parse_run_config(const Json& doc, const std::string& base_dir = ".");

struct StageOutcome {
  std::string name;
  std::string status;  // ok | failed | skipped
  int code = 0;        // exit code of a failure
  std::string reason;
  std::string witness;
  std::vector<std::string> artifacts;
};

struct RunResult {
  Json manifest;
  std::vector<StageOutcome> stages;
  int exit_code = 0;  // first failing stage's code
  std::string output_dir;
};

/// Runs the requested stages in dependency order and writes each artifact
/// and the manifest atomically. A failed stage marks its dependents skipped;
/// artifacts of earlier stages are kept.
RunResult run_pipeline(const RunConfig& config);

/// CSV tables for plotting, keyed by file name.
std::map<std::string, std::string> plot_data(const Json& artifact, const std::string& kind);

}  // namespace reeb
