#pragma once

#include "autoform/config.hpp"

#include <string>
#include <vector>

namespace autoform {

// Snapshot written to <run-dir>/manifest.json before the first backend call,
// finalized (end timestamp, artifact list) when the run completes.
struct RunManifest {
    std::string harness_version;
    std::string command;
    std::string started_at;
    std::string finished_at;
    std::string status = "running"; // running | ok | failed
    std::vector<std::string> artifacts;
};

// Resolves <out>/<task>/<strategy>/<label>/ and creates it. `label` is the
// config's run_label or a timestamp.
std::string prepare_run_directory(const ExperimentConfig& config);

// Executes a single-LLM experiment: traces under traces/, accuracy report as
// report.json + report.md. Returns the process exit status (0 only when
// every instance completed and every file was written).
int cmd_run_reason(const ExperimentConfig& config);

// Executes a dialogue experiment: one transcript per instance under
// transcripts/, metrics (RougeL / tokens / optional delta vs baseline) as
// report.json + report.md.
int cmd_run_dialogue(const ExperimentConfig& config);

// Consolidates finished run directories into one markdown + CSV summary,
// ordered by (task, strategy, backend pair). Mixed tasks warn, don't fail.
int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_path_md,
               const std::string& out_path_csv);

// Loads a task file and prints one pass/fail line per invariant.
int cmd_validate_data(const std::string& path, TaskKind kind);

} // namespace autoform
