#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace autoform {

enum class TaskKind {
    logic_grid,
    coin_flip,
    info_essentiality,
    mm_qa,
    aqua,
    hotpot_qa,
    wiki_hop,
    narrative_qa,
};

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

// How the final answer is announced in a response and what value shape it
// carries. Each task kind maps to one canonical pairing.
enum class MarkerKind { the_answer_is, answer_colon, correct_option_is, tagged_A };
enum class ValueDomain { yes_no, integer, capital_letter, free_text };

std::string to_string(MarkerKind kind);
MarkerKind marker_kind_from_string(const std::string& s);
std::string to_string(ValueDomain domain);
ValueDomain value_domain_from_string(const std::string& s);

struct AnswerSpec {
    MarkerKind marker_kind = MarkerKind::the_answer_is;
    ValueDomain value_domain = ValueDomain::free_text;
};

// Canonical marker/domain pairing for a task kind.
AnswerSpec default_answer_spec(TaskKind kind);
bool answer_spec_consistent(TaskKind kind, const AnswerSpec& spec);

struct ContextSegment {
    std::string segment_id;
    std::string text;
    bool is_supporting = false;
};

struct TaskInstance {
    std::string id;
    TaskKind task_kind = TaskKind::coin_flip;
    std::string input_text;
    std::vector<ContextSegment> context_segments;
    std::vector<std::string> gold_answers;
    AnswerSpec answer_spec;
};

struct ContextShare {
    std::size_t agent_index = 0;
    std::vector<std::string> segments; // segment ids
};

struct TaskSet {
    std::string name;
    std::vector<TaskInstance> instances;
    std::size_t declared_count = 0;
};

// Loads a JSONL task file (one instance per line). When a sidecar manifest
// "<path>.manifest.json" with {"name", "declared_count"} exists, the declared
// count must match the number of parsed lines. Order is preserved.
// Throws ParseError (bad JSON, with line number) or SchemaMismatch (missing
// or ill-typed field, with field name and line number).
TaskSet load_task_set(const std::string& path, TaskKind task_kind);

// Randomly partitions the instance's segments over `n_agents` shares.
// Deterministic in (instance.id, seed): shuffled with a seeded generator and
// dealt round-robin. Throws NoSegments when the instance has none.
std::vector<ContextShare> split_contexts_random(const TaskInstance& instance,
                                                std::size_t n_agents,
                                                std::uint64_t seed);

// Partitions so that every agent holds at least one supporting segment;
// non-supporting segments are dealt round-robin after a seeded shuffle.
// Throws InsufficientSupport when supporting segments < n_agents.
std::vector<ContextShare> split_supporting_facts(const TaskInstance& instance,
                                                 std::uint64_t seed,
                                                 std::size_t n_agents = 2);

// Splits `text` at the whitespace boundary closest to the token midpoint.
// Guarantees left + right == text byte-for-byte and both halves within
// `per_half_limit` tokens. Throws OverBudget when the text cannot fit.
std::pair<std::string, std::string> bisect_book(const std::string& text,
                                                const std::string& tokenizer_id,
                                                std::size_t per_half_limit);

// Source filter: accepts texts that start with the exact prefix
// "Project Gutenberg's" and hold at most `max_tokens` tokens.
bool admit_book(const std::string& text, const std::string& tokenizer_id,
                std::size_t max_tokens = 30000);

// Stable 64-bit content hash used wherever splits must be a pure function
// of (instance id, seed).
std::uint64_t fnv1a64(std::string_view data);

// Draws `k` distinct indices out of [0, n) deterministically from `seed`.
std::vector<std::size_t> seeded_sample_indices(std::size_t n, std::size_t k,
                                               std::uint64_t seed);

} // namespace autoform
