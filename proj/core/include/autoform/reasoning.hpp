#pragma once

#include "autoform/backend.hpp"
#include "autoform/datasets.hpp"
#include "autoform/prompting.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace autoform {

// Where a token count came from: the provider's own accounting or a local
// tokenizer fallback ("local:<tokenizer_id>").
std::string token_source_provider();
std::string token_source_local(const std::string& tokenizer_id);

struct TraceTokenUsage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    std::string source; // "provider" or "local:<tokenizer_id>"
};

struct ReasoningTrace {
    std::string instance_id;
    StrategyConfig strategy;
    std::string prompt_text;
    std::string raw_response;
    std::optional<std::string> extracted_answer;
    std::optional<bool> correct;
    TraceTokenUsage token_usage;
    std::size_t run_index = 0;
    std::string solver_model;
    std::optional<std::string> format_note; // two-step runs carry the stage-1 note

    std::string to_json_text() const;
    static ReasoningTrace from_json_text(const std::string& text);
};

struct FormatNote {
    std::string selector_model;
    SelectionMode scope = SelectionMode::task;
    std::string note_text;
};

struct AccuracyReport {
    std::vector<double> per_run_accuracy;
    double mean = 0.0;
    double std_dev = 0.0;
    std::size_t n_instances = 0;
};

// Scans `text` case-insensitively for the spec's answer marker and returns
// the captured value, taking the last occurrence when several exist.
// the_answer_is accepts both "the answer is:" and the bare "answer:" the
// transcripts exhibit; tagged_A prefers <A>...</A> and falls back to an
// "Answer:" line. Values are trimmed of surrounding whitespace and terminal
// punctuation; yes/no lowercases, capital letters uppercase.
std::optional<std::string> extract_answer(std::string_view text, const AnswerSpec& spec);

// Comparison form: lowercased, whitespace-collapsed, terminal punctuation
// stripped. Used for gold matching and dialogue consensus.
std::string normalize_answer(std::string_view answer);
bool answer_matches_gold(std::string_view extracted, const std::vector<std::string>& golds);

// Executes one single-LLM completion for `instance` and scores it against
// the instance's gold answers. Extraction failure is not an error: the trace
// records correct = false. Two-step strategies need `note`.
ReasoningTrace run_single(const PromptCatalog& catalog, const TaskInstance& instance,
                          const StrategyConfig& config, Backend& solver,
                          std::size_t run_index, std::int64_t base_seed = 0,
                          const std::string& tokenizer_id = "whitespace",
                          const std::optional<FormatNote>& note = {});

// Stage 1 of the two-step flow: asks `selector` for the format to use.
// Task mode samples k distinct instances from `set` by seed. Throws
// EmptySelectorReply when the reply is blank.
FormatNote select_format(const PromptCatalog& catalog, const TaskSet& set,
                         SelectionMode mode, Backend& selector, std::uint64_t seed,
                         std::size_t k_task_examples = 5);
FormatNote select_format_for_instance(const PromptCatalog& catalog,
                                      const TaskInstance& instance, Backend& selector);

struct TwoStepResult {
    std::vector<ReasoningTrace> traces;
    AccuracyReport report;
    std::vector<FormatNote> notes; // one for task mode, one per instance otherwise
};

// Runs the full two-step flow: task mode makes exactly one selector call for
// the whole run set, instance mode exactly one per instance; notes are
// reused across runs.
TwoStepResult run_two_step(const PromptCatalog& catalog, const TaskSet& set,
                           SelectionMode mode, Backend& selector, Backend& solver,
                           std::size_t runs, std::uint64_t seed,
                           std::size_t k_task_examples = 5,
                           const std::string& tokenizer_id = "whitespace");

// Folds traces into per-run accuracies. Requires every instance id in
// `golds` and a complete runs x instances matrix.
AccuracyReport score_accuracy(const std::vector<ReasoningTrace>& traces,
                              const std::map<std::string, std::vector<std::string>>& golds,
                              std::size_t runs);

} // namespace autoform
