// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_EXP_RUNNER_HPP_
#define ZDDA_EXP_RUNNER_HPP_

#include <map>
#include <optional>

#include "zdda/eval/noise_grid.hpp"
#include "zdda/exp/config.hpp"

namespace zdda {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kDataRootEnv = "ZDDA_DATA_ROOT";

// Outcome of one experiment run: where everything went and every number
// produced. Persisted as run_record.json inside the output directory.
struct RunRecord {
  std::string name;
  std::string tr_source, tr_target, ti_pair;
  std::string config_hash;
  std::string tool_version;
  std::map<std::string, double> step_wall_seconds;
  std::map<std::string, std::string> artifact_paths;
  std::map<std::string, EvalReport> reports;  // keyed by evaluation name
  std::map<std::string, std::string> grid_paths;  // noise model -> JSON path
  std::map<std::string, std::string> failures;    // evaluation -> reason
  std::optional<double> similarity;
};

// Executes the requested stages in dependency order
// (synthesis -> t pretrain -> step1 -> step2 -> [step3] -> evaluations),
// persisting checkpoints, reports and provenance under config.output_dir.
// Completed stages found in the output directory are reused when their
// input hash matches.
RunRecord run_experiment(const ExperimentConfig& config);

RunRecord load_run_record(const std::filesystem::path& run_dir);
void save_run_record(const std::filesystem::path& run_dir,
                     const RunRecord& record);

// EvalReport and NoiseGridResult serialization (JSON and CSV).
std::string report_to_json(const EvalReport& r);
EvalReport report_from_json(const std::string& text);
std::string report_to_csv(const EvalReport& r);
std::string grid_to_json(const NoiseGridResult& g);
NoiseGridResult grid_from_json(const std::string& text);
std::string grid_to_csv(const NoiseGridResult& g);

struct CheckOutcome {
  CheckSpec spec;
  double actual = 0.0;
  bool passed = false;
  std::string detail;
};

// Evaluates the config's threshold checks against a run record.
std::vector<CheckOutcome> evaluate_checks(const ExperimentConfig& config,
                                          const RunRecord& record);

}  // namespace zdda

#endif  // ZDDA_EXP_RUNNER_HPP_
