#include "autoform/runner.hpp"

#include "autoform/dialogue.hpp"
#include "autoform/errors.hpp"
#include "autoform/metrics.hpp"
#include "autoform/reasoning.hpp"
#include "autoform/version.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <set>

namespace autoform {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string timestamp_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y%m%dT%H%M%SZ", &tm);
    return buffer;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << content;
    if (!out) throw Error(fmt::format("failed writing '{}'", path.string()));
}

void write_manifest(const fs::path& dir, const RunManifest& manifest,
                    const ExperimentConfig& config) {
    json j{{"harness_version", manifest.harness_version},
           {"command", manifest.command},
           {"started_at", manifest.started_at},
           {"finished_at", manifest.finished_at},
           {"status", manifest.status},
           {"artifacts", manifest.artifacts},
           {"config", config.to_json()}};
    write_file(dir / "manifest.json", j.dump(2));
}

std::string backend_pair_label(const ExperimentConfig& config) {
    if (is_dialogue_strategy(config.strategy.strategy)) {
        std::string label;
        for (const auto& agent : config.agents) {
            if (!label.empty()) label += "+";
            label += config.backend_named(agent.backend).model_id;
        }
        return label;
    }
    std::string label = config.backend_named(config.solver_backend).model_id;
    if (config.selector_backend)
        label = config.backend_named(*config.selector_backend).model_id + "=>" + label;
    return label;
}

} // namespace

std::string prepare_run_directory(const ExperimentConfig& config) {
    std::string label = config.run_label ? *config.run_label : timestamp_now();
    fs::path dir = fs::path(config.out_dir) / config.task.name /
                   to_string(config.strategy.strategy) / label;
    fs::create_directories(dir);
    return dir.string();
}

int cmd_run_reason(const ExperimentConfig& config) {
    config.validate_for_reason();
    TaskSet set = load_task_set(config.task.path, config.task.kind);
    PromptCatalog catalog = PromptCatalog::load(config.prompts_dir);

    fs::path dir(prepare_run_directory(config));
    fs::create_directories(dir / "traces");

    RunManifest manifest;
    manifest.harness_version = kVersion;
    manifest.command = "run-reason";
    manifest.started_at = timestamp_now();
    write_manifest(dir, manifest, config); // before any backend call

    int status = 0;
    try {
        BackendHandle solver = make_backend(config.backend_named(config.solver_backend));
        std::vector<ReasoningTrace> traces;
        std::vector<FormatNote> notes;

        if (is_two_step_strategy(config.strategy.strategy)) {
            BackendHandle selector =
                make_backend(config.backend_named(*config.selector_backend));
            SelectionMode mode = config.strategy.strategy == Strategy::two_step_task
                                     ? SelectionMode::task
                                     : SelectionMode::instance;
            auto result = run_two_step(catalog, set, mode, *selector, *solver, config.runs,
                                       static_cast<std::uint64_t>(config.seed),
                                       config.strategy.k_task_examples, config.tokenizer_id);
            traces = std::move(result.traces);
            notes = std::move(result.notes);
        } else {
            // Instances within a run fan out over a bounded worker pool when
            // the backend tolerates it; results land in instance order either
            // way so file emission stays deterministic.
            bool parallel = solver->supports_concurrent_instances() && config.workers > 1 &&
                            set.instances.size() > 1;
            for (std::size_t run = 0; run < config.runs; ++run) {
                std::vector<ReasoningTrace> run_traces(set.instances.size());
                if (parallel) {
                    std::atomic<std::size_t> next{0};
                    std::mutex error_mutex;
                    std::exception_ptr first_error;
                    std::size_t n_workers = std::min(config.workers, set.instances.size());
                    std::vector<std::thread> workers;
                    workers.reserve(n_workers);
                    for (std::size_t w = 0; w < n_workers; ++w)
                        workers.emplace_back([&] {
                            for (;;) {
                                std::size_t i = next.fetch_add(1);
                                if (i >= set.instances.size()) return;
                                try {
                                    run_traces[i] = run_single(
                                        catalog, set.instances[i], config.strategy,
                                        *solver, run, config.seed, config.tokenizer_id);
                                } catch (...) {
                                    std::lock_guard lock(error_mutex);
                                    if (!first_error)
                                        first_error = std::current_exception();
                                    return;
                                }
                            }
                        });
                    for (auto& worker : workers) worker.join();
                    if (first_error) std::rethrow_exception(first_error);
                } else {
                    for (std::size_t i = 0; i < set.instances.size(); ++i)
                        run_traces[i] =
                            run_single(catalog, set.instances[i], config.strategy,
                                       *solver, run, config.seed, config.tokenizer_id);
                }
                for (auto& trace : run_traces) traces.push_back(std::move(trace));
            }
        }

        std::map<std::string, std::vector<std::string>> golds;
        for (const auto& instance : set.instances) golds[instance.id] = instance.gold_answers;
        AccuracyReport report = score_accuracy(traces, golds, config.runs);

        double completion_total = 0.0;
        for (const auto& trace : traces)
            completion_total += static_cast<double>(trace.token_usage.completion_tokens);
        double mean_completion_tokens =
            traces.empty() ? 0.0 : completion_total / static_cast<double>(traces.size());

        for (const auto& trace : traces) {
            fs::path path = dir / "traces" /
                            fmt::format("{}_run{}.json", trace.instance_id, trace.run_index);
            write_file(path, trace.to_json_text());
            manifest.artifacts.push_back(path.string());
        }

        json report_json{{"task", config.task.name},
                         {"strategy", to_string(config.strategy.strategy)},
                         {"backend_pair", backend_pair_label(config)},
                         {"runs", config.runs},
                         {"n_instances", report.n_instances},
                         {"per_run_accuracy", report.per_run_accuracy},
                         {"accuracy_mean", report.mean},
                         {"accuracy_std", report.std_dev},
                         {"mean_completion_tokens", mean_completion_tokens},
                         {"token_source", traces.empty() ? ""
                                                         : traces.front().token_usage.source}};
        if (!notes.empty()) {
            json notes_json = json::array();
            for (const auto& note : notes)
                notes_json.push_back({{"selector_model", note.selector_model},
                                      {"scope", to_string(note.scope)},
                                      {"note_text", note.note_text}});
            report_json["format_notes"] = std::move(notes_json);
        }
        write_file(dir / "report.json", report_json.dump(2));
        manifest.artifacts.push_back((dir / "report.json").string());

        std::vector<AccuracyRow> rows{{fmt::format("{} {}", backend_pair_label(config),
                                                   to_string(config.strategy.strategy)),
                                       report.mean, report.std_dev}};
        write_file(dir / "report.md", render_accuracy_table_markdown(rows));
        manifest.artifacts.push_back((dir / "report.md").string());

        manifest.status = "ok";
    } catch (const std::exception& e) {
        std::cerr << "run-reason failed: " << e.what() << "\n";
        manifest.status = "failed";
        status = 1;
    }

    manifest.finished_at = timestamp_now();
    write_manifest(dir, manifest, config);
    if (status == 0) std::cout << "run directory: " << dir.string() << "\n";
    return status;
}

namespace {

double baseline_mean_tokens(const std::string& baseline_dir) {
    fs::path report_path = fs::path(baseline_dir) / "report.json";
    std::ifstream in(report_path);
    if (!in)
        throw MissingBaseline(fmt::format("baseline report '{}' not found",
                                          report_path.string()));
    json report = json::parse(in, nullptr, false);
    if (report.is_discarded() || !report.contains("mean_completion_tokens"))
        throw MissingBaseline(fmt::format("baseline report '{}' lacks token counts",
                                          report_path.string()));
    return report["mean_completion_tokens"].get<double>();
}

} // namespace

int cmd_run_dialogue(const ExperimentConfig& config) {
    config.validate_for_dialogue();
    if (config.emit_delta && !config.baseline_dir)
        throw MissingBaseline("delta requested without a baseline run directory");

    TaskSet set = load_task_set(config.task.path, config.task.kind);
    PromptCatalog catalog = PromptCatalog::load(config.prompts_dir);

    fs::path dir(prepare_run_directory(config));
    fs::create_directories(dir / "transcripts");

    RunManifest manifest;
    manifest.harness_version = kVersion;
    manifest.command = "run-dialogue";
    manifest.started_at = timestamp_now();
    write_manifest(dir, manifest, config);

    int status = 0;
    try {
        std::vector<BackendHandle> backends;
        for (const auto& agent : config.agents)
            backends.push_back(make_backend(config.backend_named(agent.backend)));

        DialogueOptions options;
        options.max_rounds = config.max_rounds;
        options.policy = config.policy;
        options.tokenizer_id = config.tokenizer_id;

        double rouge_sum = 0.0;
        double token_sum = 0.0;
        std::size_t completed = 0;

        for (const auto& instance : set.instances) {
            auto shares =
                config.split_supporting
                    ? split_supporting_facts(instance,
                                             static_cast<std::uint64_t>(config.seed),
                                             config.agents.size())
                    : split_contexts_random(instance, config.agents.size(),
                                            static_cast<std::uint64_t>(config.seed));

            std::vector<AgentSpec> agents;
            for (std::size_t i = 0; i < config.agents.size(); ++i)
                agents.push_back({config.agents[i].name,
                                  config.backend_named(config.agents[i].backend),
                                  shares[i],
                                  ""});

            DialogueTranscript transcript = run_dialogue(
                catalog, instance, agents, backends, config.strategy.strategy, options);

            fs::path path = dir / "transcripts" / fmt::format("{}.json", instance.id);
            write_file(path, transcript.to_json_text());
            manifest.artifacts.push_back(path.string());

            if (transcript.termination == Termination::backend_error) {
                status = 1;
                continue;
            }
            ++completed;
            token_sum += static_cast<double>(transcript.total_completion_tokens);
            double best = 0.0;
            if (transcript.final_answer)
                for (const auto& gold : instance.gold_answers)
                    best = std::max(best, rouge_l(*transcript.final_answer, gold).f1);
            rouge_sum += best;
        }

        double rouge_mean = completed ? rouge_sum / static_cast<double>(completed) : 0.0;
        double tokens_mean = completed ? token_sum / static_cast<double>(completed) : 0.0;

        json report_json{{"task", config.task.name},
                         {"strategy", to_string(config.strategy.strategy)},
                         {"backend_pair", backend_pair_label(config)},
                         {"n_instances", set.instances.size()},
                         {"completed", completed},
                         {"rouge_l_mean", rouge_mean},
                         {"mean_completion_tokens", tokens_mean},
                         // Multiple golds are scored by max RougeL
                         // (interpretation; flagged in reports).
                         {"gold_scoring", "max_over_golds"}};

        DialogueMetricsRow row{backend_pair_label(config), rouge_mean, tokens_mean, false,
                               0.0};
        if (config.baseline_dir) {
            double base = baseline_mean_tokens(*config.baseline_dir);
            row.has_delta = true;
            row.delta_pct = delta_tokens(base, tokens_mean);
            report_json["baseline_mean_tokens"] = base;
            report_json["delta_tokens_pct"] = row.delta_pct;
        }

        write_file(dir / "report.json", report_json.dump(2));
        manifest.artifacts.push_back((dir / "report.json").string());
        write_file(dir / "report.md", render_dialogue_table_markdown({row}));
        manifest.artifacts.push_back((dir / "report.md").string());

        if (completed != set.instances.size()) status = 1;
        manifest.status = status == 0 ? "ok" : "failed";
    } catch (const std::exception& e) {
        std::cerr << "run-dialogue failed: " << e.what() << "\n";
        manifest.status = "failed";
        status = 1;
    }

    manifest.finished_at = timestamp_now();
    write_manifest(dir, manifest, config);
    if (status == 0) std::cout << "run directory: " << dir.string() << "\n";
    return status;
}

namespace {

struct RunSummary {
    std::string task;
    std::string strategy;
    std::string backend_pair;
    json report;
};

} // namespace

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_path_md,
               const std::string& out_path_csv) {
    std::vector<RunSummary> summaries;
    for (const auto& dir : run_dirs) {
        fs::path manifest_path = fs::path(dir) / "manifest.json";
        std::ifstream manifest_in(manifest_path);
        if (!manifest_in) {
            std::cerr << "error: no manifest at '" << manifest_path.string() << "'\n";
            return 1;
        }
        fs::path report_path = fs::path(dir) / "report.json";
        std::ifstream report_in(report_path);
        if (!report_in) {
            std::cerr << "error: no report at '" << report_path.string() << "'\n";
            return 1;
        }
        json report = json::parse(report_in, nullptr, false);
        if (report.is_discarded()) {
            std::cerr << "error: unreadable report at '" << report_path.string() << "'\n";
            return 1;
        }
        summaries.push_back({report.value("task", ""), report.value("strategy", ""),
                             report.value("backend_pair", ""), std::move(report)});
    }

    std::set<std::string> tasks;
    for (const auto& summary : summaries) tasks.insert(summary.task);
    if (tasks.size() > 1)
        std::cerr << "warning: MixedTasks - consolidating runs from "
                  << tasks.size() << " different tasks\n";

    std::sort(summaries.begin(), summaries.end(), [](const auto& a, const auto& b) {
        return std::tie(a.task, a.strategy, a.backend_pair) <
               std::tie(b.task, b.strategy, b.backend_pair);
    });

    std::vector<AccuracyRow> accuracy_rows;
    std::vector<DialogueMetricsRow> dialogue_rows;

    // Baseline tokens per (task, backend pair): the dialogue_nl run, when
    // present, anchors the delta column.
    std::map<std::pair<std::string, std::string>, double> nl_tokens;
    for (const auto& summary : summaries)
        if (summary.strategy == "dialogue_nl" && summary.report.contains("mean_completion_tokens"))
            nl_tokens[{summary.task, summary.backend_pair}] =
                summary.report["mean_completion_tokens"].get<double>();

    for (const auto& summary : summaries) {
        if (summary.report.contains("accuracy_mean")) {
            accuracy_rows.push_back(
                {fmt::format("{} / {} / {}", summary.task, summary.strategy,
                             summary.backend_pair),
                 summary.report["accuracy_mean"].get<double>(),
                 summary.report.value("accuracy_std", 0.0)});
        } else if (summary.report.contains("rouge_l_mean")) {
            DialogueMetricsRow row;
            row.setting = fmt::format("{} / {} / {}", summary.task, summary.strategy,
                                      summary.backend_pair);
            row.rouge_l = summary.report["rouge_l_mean"].get<double>();
            row.mean_tokens = summary.report.value("mean_completion_tokens", 0.0);
            auto anchor = nl_tokens.find({summary.task, summary.backend_pair});
            if (summary.report.contains("delta_tokens_pct")) {
                row.has_delta = true;
                row.delta_pct = summary.report["delta_tokens_pct"].get<double>();
            } else if (anchor != nl_tokens.end() && summary.strategy != "dialogue_nl") {
                row.has_delta = true;
                row.delta_pct = delta_tokens(anchor->second, row.mean_tokens);
            }
            dialogue_rows.push_back(std::move(row));
        }
    }

    std::string markdown;
    if (!accuracy_rows.empty())
        markdown += render_accuracy_table_markdown(accuracy_rows) + "\n";
    if (!dialogue_rows.empty())
        markdown += render_dialogue_table_markdown(dialogue_rows) + "\n";

    std::string csv;
    if (!accuracy_rows.empty()) csv += render_accuracy_table_csv(accuracy_rows);
    if (!dialogue_rows.empty()) csv += render_dialogue_table_csv(dialogue_rows);

    std::cout << markdown;
    if (!out_path_md.empty()) write_file(out_path_md, markdown);
    if (!out_path_csv.empty()) write_file(out_path_csv, csv);
    return 0;
}

int cmd_validate_data(const std::string& path, TaskKind kind) {
    // load_task_set enforces the schema and per-instance invariants; on
    // success re-state each invariant as an explicit pass line.
    TaskSet set;
    try {
        set = load_task_set(path, kind);
    } catch (const ParseError& e) {
        std::cout << fmt::format("FAIL parse: {} (line {})\n", e.what(), e.line());
        return 1;
    } catch (const SchemaMismatch& e) {
        std::cout << fmt::format("FAIL schema: {}\n", e.what());
        return 1;
    } catch (const Error& e) {
        std::cout << fmt::format("FAIL load: {}\n", e.what());
        return 1;
    }

    std::cout << fmt::format("PASS parse: {} instances\n", set.instances.size());
    std::cout << "PASS gold_answers: non-empty for every instance\n";
    std::cout << "PASS segment_ids: unique within every instance\n";
    std::cout << "PASS answer_spec: consistent with task_kind\n";
    std::cout << fmt::format("PASS declared_count: {} matches instance count\n",
                             set.declared_count);
    return 0;
}

} // namespace autoform
