#pragma once

#include "autoform/backend.hpp"
#include "autoform/datasets.hpp"
#include "autoform/dialogue.hpp"
#include "autoform/prompting.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace autoform {

struct TaskRef {
    std::string name;
    std::string path;
    TaskKind kind = TaskKind::coin_flip;
};

struct AgentBinding {
    std::string name;    // speaker name, order in the list is speaking order
    std::string backend; // key into ExperimentConfig::backends
};

// Everything one experiment needs, loadable from a JSON config file with
// CLI flag overrides on top (flags win).
struct ExperimentConfig {
    TaskRef task;
    StrategyConfig strategy;
    std::map<std::string, BackendConfig> backends;
    std::string solver_backend;              // role binding for run-reason
    std::optional<std::string> selector_backend; // two-step stage 1
    std::vector<AgentBinding> agents;        // role bindings for run-dialogue
    std::size_t runs = 3;
    std::int64_t seed = 0;
    std::size_t max_rounds = 5;
    TerminationPolicy policy = TerminationPolicy::strict_consensus;
    std::string tokenizer_id = "whitespace";
    std::string out_dir = "runs";
    std::string prompts_dir = "prompts";
    std::size_t workers = 4;
    std::optional<std::string> baseline_dir;
    bool emit_delta = false;
    std::optional<std::string> run_label; // fixed directory name instead of a timestamp
    bool split_supporting = false;        // dialogue: split supporting facts instead of random

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    nlohmann::json to_json() const;

    const BackendConfig& backend_named(const std::string& name) const;

    // Command-specific validation; throws ConfigInvalid naming the key.
    void validate_for_reason() const;
    void validate_for_dialogue() const;
};

} // namespace autoform
