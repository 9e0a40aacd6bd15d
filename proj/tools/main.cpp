// Command-line entry point: run-reason, run-dialogue, report, validate-data.

#include "autoform/config.hpp"
#include "autoform/errors.hpp"
#include "autoform/runner.hpp"
#include "autoform/tokenizer.hpp"
#include "autoform/version.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::int64_t> seed;
    std::optional<std::size_t> runs;
    std::optional<std::string> out_dir;
    std::optional<std::string> tokenizer;
    std::optional<std::string> baseline;
    std::optional<std::size_t> max_rounds;
    std::optional<std::string> policy;
    std::optional<std::string> prompts;
    std::optional<std::string> run_label;
    std::vector<std::string> backend_overrides; // NAME=URL
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Experiment config file (JSON)")
        ->required();
    cmd->add_option("--seed", flags.seed, "Override the experiment seed");
    cmd->add_option("--runs", flags.runs, "Override the number of runs");
    cmd->add_option("--out", flags.out_dir, "Override the output directory");
    cmd->add_option("--tokenizer", flags.tokenizer, "Override the tokenizer id");
    cmd->add_option("--baseline", flags.baseline,
                    "Baseline run directory for token deltas");
    cmd->add_option("--max-rounds", flags.max_rounds, "Override the dialogue round cap");
    cmd->add_option("--policy", flags.policy, "Termination policy: strict | single");
    cmd->add_option("--prompts", flags.prompts, "Override the prompts directory");
    cmd->add_option("--run-label", flags.run_label,
                    "Fixed run directory name instead of a timestamp");
    cmd->add_option("--backend", flags.backend_overrides,
                    "Override a backend endpoint: NAME=URL");
}

autoform::ExperimentConfig load_with_overrides(const CommonFlags& flags) {
    auto config = autoform::ExperimentConfig::from_file(flags.config_path);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.runs) config.runs = *flags.runs;
    if (flags.out_dir) config.out_dir = *flags.out_dir;
    if (flags.tokenizer) config.tokenizer_id = *flags.tokenizer;
    if (flags.baseline) {
        config.baseline_dir = *flags.baseline;
        config.emit_delta = true;
    }
    if (flags.max_rounds) config.max_rounds = *flags.max_rounds;
    if (flags.policy)
        config.policy = autoform::termination_policy_from_string(*flags.policy);
    if (flags.prompts) config.prompts_dir = *flags.prompts;
    if (flags.run_label) config.run_label = *flags.run_label;
    for (const auto& spec : flags.backend_overrides) {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw autoform::ConfigInvalid("--backend expects NAME=URL", "--backend");
        std::string name = spec.substr(0, eq);
        auto it = config.backends.find(name);
        if (it == config.backends.end())
            throw autoform::ConfigInvalid("--backend names an undefined backend '" + name +
                                              "'",
                                          "--backend");
        it->second.endpoint_url = spec.substr(eq + 1);
    }
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Format-selection evaluation harness for LLM reasoning and "
                 "multi-agent communication"};
    app.set_version_flag("--version", autoform::kVersion);
    app.require_subcommand(1);

    CommonFlags reason_flags;
    auto* reason = app.add_subcommand("run-reason", "Run a single-LLM reasoning strategy");
    add_common_flags(reason, reason_flags);

    CommonFlags dialogue_flags;
    auto* dialogue = app.add_subcommand("run-dialogue", "Run a two-agent dialogue strategy");
    add_common_flags(dialogue, dialogue_flags);

    std::vector<std::string> report_dirs;
    std::string report_md, report_csv;
    auto* report = app.add_subcommand("report", "Consolidate finished run directories");
    report->add_option("dirs", report_dirs, "Run directories")->required();
    report->add_option("--out-md", report_md, "Write markdown summary here");
    report->add_option("--out-csv", report_csv, "Write CSV summary here");

    std::string validate_path, validate_kind;
    auto* validate = app.add_subcommand("validate-data", "Check a task file's invariants");
    validate->add_option("path", validate_path, "Task JSONL file")->required();
    validate->add_option("--kind", validate_kind, "Task kind")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (reason->parsed())
            return autoform::cmd_run_reason(load_with_overrides(reason_flags));
        if (dialogue->parsed())
            return autoform::cmd_run_dialogue(load_with_overrides(dialogue_flags));
        if (report->parsed())
            return autoform::cmd_report(report_dirs, report_md, report_csv);
        if (validate->parsed())
            return autoform::cmd_validate_data(validate_path,
                                               autoform::task_kind_from_string(validate_kind));
    } catch (const autoform::ConfigInvalid& e) {
        std::cerr << "config error";
        if (!e.key().empty()) std::cerr << " [" << e.key() << "]";
        std::cerr << ": " << e.what() << "\n";
        return 2;
    } catch (const autoform::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
