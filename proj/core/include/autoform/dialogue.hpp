#pragma once

#include "autoform/backend.hpp"
#include "autoform/datasets.hpp"
#include "autoform/prompting.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace autoform {

struct AgentSpec {
    std::string name;
    BackendConfig backend;
    ContextShare share;
    std::string system_prompt; // rendered by the engine when empty
};

struct Turn {
    std::size_t round = 1;
    std::string agent;
    std::string message;
    std::optional<std::string> extracted_answer;
    std::size_t completion_tokens = 0;
    std::string token_source;
};

enum class Termination { consensus, single_answer, max_rounds, backend_error };

std::string to_string(Termination termination);
Termination termination_from_string(const std::string& s);

enum class TerminationPolicy { strict_consensus, single_answer_ok };

std::string to_string(TerminationPolicy policy);
TerminationPolicy termination_policy_from_string(const std::string& s);

struct DialogueTranscript {
    std::string instance_id;
    Strategy mode = Strategy::dialogue_nl;
    std::vector<Turn> turns;
    Termination termination = Termination::max_rounds;
    std::optional<std::string> final_answer;
    std::size_t total_completion_tokens = 0;

    std::string to_json_text() const;
    static DialogueTranscript from_json_text(const std::string& text);
    static DialogueTranscript from_file(const std::string& path);
};

enum class TerminationDecision { keep_going, consensus, single_answer };

// Pure function of the turn sequence and policy, evaluated after every turn.
// Consensus: every agent's most recent answer exists and all agree after
// normalization. single_answer_ok additionally ends when an answer has stood
// unchallenged for one full round.
TerminationDecision check_termination(const std::vector<Turn>& turns,
                                      std::size_t n_agents, TerminationPolicy policy);

struct DialogueOptions {
    std::size_t max_rounds = 5;
    TerminationPolicy policy = TerminationPolicy::strict_consensus;
    std::string tokenizer_id = "whitespace";
    BackendHooks hooks; // forwarded to backends built from AgentSpec configs
};

// Runs the turn-taking protocol: agents[0] speaks first, speaking order is
// fixed, each turn sees the full labeled history of prior turns. Shares must
// partition the instance's segments; an agent's rendered system prompt must
// not contain any other agent's segment text (ShareLeak otherwise).
DialogueTranscript run_dialogue(const PromptCatalog& catalog, const TaskInstance& instance,
                                const std::vector<AgentSpec>& agents, Strategy mode,
                                const DialogueOptions& options = {});

// Variant taking pre-built backends (hold state across dialogues; needed for
// shared scripted fixtures and call accounting).
DialogueTranscript run_dialogue(const PromptCatalog& catalog, const TaskInstance& instance,
                                const std::vector<AgentSpec>& agents,
                                const std::vector<BackendHandle>& backends, Strategy mode,
                                const DialogueOptions& options = {});

struct DialogueMeasure {
    std::size_t total_completion_tokens = 0;
    std::size_t turns = 0;
    std::size_t rounds = 0;
};

DialogueMeasure measure_dialogue(const DialogueTranscript& transcript);

// History as each agent sees it: one "[name]: message" block per prior turn.
std::string render_history(const std::vector<Turn>& turns);

} // namespace autoform
