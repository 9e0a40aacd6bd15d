#pragma once

#include "autoform/backend.hpp"
#include "autoform/datasets.hpp"
#include "autoform/metrics.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace autoform {

enum class Strategy {
    cot,
    autoform,
    forced_format,
    two_step_instance,
    two_step_task,
    dialogue_nl,
    dialogue_autoform,
    dialogue_kqml,
    dialogue_json_kqml,
};

std::string to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& s);

bool is_single_llm_strategy(Strategy strategy);
bool is_dialogue_strategy(Strategy strategy);
bool is_two_step_strategy(Strategy strategy);

struct StrategyConfig {
    Strategy strategy = Strategy::cot;
    std::optional<FormatLabel> forced_format_label;
    std::size_t k_task_examples = 5;

    // forced_format requires a label; k_task_examples must be positive.
    void validate() const;
};

// The one-sentence directive used by the forced-format strategy.
std::string format_instruction(FormatLabel label);

struct PromptTemplate {
    std::string template_id;
    std::string text;
    std::vector<std::string> placeholders; // in order of first appearance
};

struct DialogueExample {
    std::string context;
    std::string question;
    std::string answer;
};

// Immutable template catalog loaded from a prompts directory.
//
// Layout: <task_kind>/<strategy>.txt with a _shared/ fallback: template id
// "<kind>/<name>" resolves to the per-kind file when present, else to
// "_shared/<name>.txt". Placeholder syntax is ${name}, brace-delimited, no
// nesting. A single trailing run of whitespace is stripped at load.
// Few-shot pairs for dialogue scaffolds live in <task_kind>/examples.json.
class PromptCatalog {
public:
    static PromptCatalog load(const std::string& directory);

    // Substitutes bindings verbatim (no escaping). Throws UnknownTemplate or
    // UnboundPlaceholder naming the missing key. Extra bindings are ignored.
    std::string render(const std::string& template_id,
                       const std::map<std::string, std::string>& bindings) const;

    const PromptTemplate& get(const std::string& template_id) const;
    bool has(const std::string& template_id) const;
    std::vector<std::string> template_ids() const;

    const std::vector<DialogueExample>& examples_for(TaskKind kind) const;

    // Registration hooks for tests and programmatic catalogs.
    void add_template(const std::string& template_id, std::string text);
    void add_examples(TaskKind kind, std::vector<DialogueExample> examples);

private:
    std::map<std::string, PromptTemplate> templates_;
    std::map<TaskKind, std::vector<DialogueExample>> examples_;
};

// Substitutes ${name} placeholders in `text`. Exposed for template-free
// construction in tests.
std::string render_template_text(const std::string& template_id, const std::string& text,
                                 const std::map<std::string, std::string>& bindings);
std::vector<std::string> scan_placeholders(const std::string& text);

// Builds the message list for a single-LLM strategy. Two-step strategies
// build the stage-2 prompt and need `format_note` (the stage-1 output).
// Throws StrategyMismatch for dialogue strategies, MissingFormatNote when a
// two-step prompt lacks its note.
std::vector<ChatMessage> build_single_prompt(const PromptCatalog& catalog,
                                             const TaskInstance& instance,
                                             const StrategyConfig& config,
                                             const std::optional<std::string>& format_note = {});

enum class SelectionMode { instance, task };

std::string to_string(SelectionMode mode);
SelectionMode selection_mode_from_string(const std::string& s);

// Stage-1 prompt of the two-step flow: presents input texts only (never gold
// answers) and asks for the most suitable structured format. Instance mode
// takes exactly one instance, task mode exactly `k_task_examples`.
// Throws WrongArity otherwise.
std::vector<ChatMessage> build_format_selection_prompt(
    const PromptCatalog& catalog, const std::vector<TaskInstance>& instances,
    SelectionMode mode, std::size_t k_task_examples = 5);

// System prompt for one dialogue agent: shared scaffold plus the
// mode-specific tail. Every mode carries the <A>xxx</A> answer rule.
std::string build_dialogue_prompt(const PromptCatalog& catalog,
                                  const std::string& agent_name,
                                  const std::string& all_roles,
                                  const std::string& share_text,
                                  const TaskInstance& instance, Strategy mode);

} // namespace autoform
