#include "autoform/dialogue.hpp"

#include "autoform/errors.hpp"
#include "autoform/reasoning.hpp"
#include "autoform/tokenizer.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace autoform {

using nlohmann::json;

std::string to_string(Termination termination) {
    switch (termination) {
    case Termination::consensus: return "consensus";
    case Termination::single_answer: return "single_answer";
    case Termination::max_rounds: return "max_rounds";
    case Termination::backend_error: return "backend_error";
    }
    return "max_rounds";
}

Termination termination_from_string(const std::string& s) {
    if (s == "consensus") return Termination::consensus;
    if (s == "single_answer") return Termination::single_answer;
    if (s == "max_rounds") return Termination::max_rounds;
    if (s == "backend_error") return Termination::backend_error;
    throw Error(fmt::format("unknown termination '{}'", s));
}

std::string to_string(TerminationPolicy policy) {
    return policy == TerminationPolicy::strict_consensus ? "strict_consensus"
                                                         : "single_answer_ok";
}

TerminationPolicy termination_policy_from_string(const std::string& s) {
    if (s == "strict_consensus" || s == "strict") return TerminationPolicy::strict_consensus;
    if (s == "single_answer_ok" || s == "single") return TerminationPolicy::single_answer_ok;
    throw Error(fmt::format("unknown termination policy '{}'", s));
}

std::string DialogueTranscript::to_json_text() const {
    json turns_json = json::array();
    for (const auto& turn : turns) {
        json t{{"round", turn.round},
               {"agent", turn.agent},
               {"message", turn.message},
               {"completion_tokens", turn.completion_tokens},
               {"token_source", turn.token_source}};
        if (turn.extracted_answer)
            t["extracted_answer"] = *turn.extracted_answer;
        else
            t["extracted_answer"] = nullptr;
        turns_json.push_back(std::move(t));
    }
    json j{{"instance_id", instance_id},
           {"mode", to_string(mode)},
           {"turns", std::move(turns_json)},
           {"termination", to_string(termination)},
           {"total_completion_tokens", total_completion_tokens}};
    if (final_answer)
        j["final_answer"] = *final_answer;
    else
        j["final_answer"] = nullptr;
    return j.dump(2);
}

DialogueTranscript DialogueTranscript::from_json_text(const std::string& text) {
    json j = json::parse(text);
    DialogueTranscript transcript;
    transcript.instance_id = j.at("instance_id").get<std::string>();
    transcript.mode = strategy_from_string(j.at("mode").get<std::string>());
    for (const auto& t : j.at("turns")) {
        Turn turn;
        turn.round = t.at("round").get<std::size_t>();
        turn.agent = t.at("agent").get<std::string>();
        turn.message = t.at("message").get<std::string>();
        turn.completion_tokens = t.at("completion_tokens").get<std::size_t>();
        turn.token_source = t.at("token_source").get<std::string>();
        if (t.contains("extracted_answer") && !t.at("extracted_answer").is_null())
            turn.extracted_answer = t.at("extracted_answer").get<std::string>();
        transcript.turns.push_back(std::move(turn));
    }
    transcript.termination = termination_from_string(j.at("termination").get<std::string>());
    if (j.contains("final_answer") && !j.at("final_answer").is_null())
        transcript.final_answer = j.at("final_answer").get<std::string>();
    transcript.total_completion_tokens = j.at("total_completion_tokens").get<std::size_t>();
    return transcript;
}

DialogueTranscript DialogueTranscript::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open transcript '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

TerminationDecision check_termination(const std::vector<Turn>& turns,
                                      std::size_t n_agents, TerminationPolicy policy) {
    if (n_agents < 2 || turns.empty()) return TerminationDecision::keep_going;

    // Most recent answer of every agent, in normalized form.
    std::map<std::string, std::string> latest;
    std::set<std::string> speakers;
    for (const auto& turn : turns) {
        speakers.insert(turn.agent);
        if (turn.extracted_answer)
            latest[turn.agent] = normalize_answer(*turn.extracted_answer);
    }
    if (speakers.size() >= n_agents && latest.size() >= n_agents) {
        bool all_equal = true;
        const std::string& first = latest.begin()->second;
        for (const auto& [agent, answer] : latest)
            if (answer != first) all_equal = false;
        if (all_equal) return TerminationDecision::consensus;
    }

    if (policy == TerminationPolicy::single_answer_ok) {
        // An answer emitted at turn s stands unchallenged once the following
        // full round (n more turns) passes without a different answer.
        for (std::size_t s = 0; s < turns.size(); ++s) {
            if (!turns[s].extracted_answer) continue;
            if (turns.size() < s + 1 + n_agents) continue;
            std::string answer = normalize_answer(*turns[s].extracted_answer);
            bool challenged = false;
            for (std::size_t i = s + 1; i <= s + n_agents; ++i)
                if (turns[i].extracted_answer &&
                    normalize_answer(*turns[i].extracted_answer) != answer)
                    challenged = true;
            if (!challenged) return TerminationDecision::single_answer;
        }
    }
    return TerminationDecision::keep_going;
}

std::string render_history(const std::vector<Turn>& turns) {
    std::string out;
    for (const auto& turn : turns) {
        if (!out.empty()) out += "\n\n";
        out += fmt::format("[{}]: {}", turn.agent, turn.message);
    }
    return out;
}

namespace {

std::string join_share_text(const TaskInstance& instance, const ContextShare& share) {
    std::map<std::string, const ContextSegment*> by_id;
    for (const auto& segment : instance.context_segments)
        by_id[segment.segment_id] = &segment;
    std::string out;
    for (const auto& id : share.segments) {
        auto it = by_id.find(id);
        if (it == by_id.end())
            throw Error(fmt::format("share references unknown segment '{}'", id));
        if (!out.empty()) out += "\n";
        out += it->second->text;
    }
    return out;
}

void check_share_leak(const std::string& system_prompt, const TaskInstance& instance,
                      const AgentSpec& agent) {
    std::set<std::string> own(agent.share.segments.begin(), agent.share.segments.end());
    for (const auto& segment : instance.context_segments) {
        if (own.count(segment.segment_id)) continue;
        if (!segment.text.empty() &&
            system_prompt.find(segment.text) != std::string::npos)
            throw ShareLeak(fmt::format(
                "agent '{}' prompt contains foreign segment '{}'", agent.name,
                segment.segment_id));
    }
}

std::string last_emitted_answer(const std::vector<Turn>& turns) {
    for (auto it = turns.rbegin(); it != turns.rend(); ++it)
        if (it->extracted_answer) return normalize_answer(*it->extracted_answer);
    return {};
}

} // namespace

DialogueTranscript run_dialogue(const PromptCatalog& catalog, const TaskInstance& instance,
                                const std::vector<AgentSpec>& agents, Strategy mode,
                                const DialogueOptions& options) {
    std::vector<BackendHandle> backends;
    backends.reserve(agents.size());
    for (const auto& agent : agents)
        backends.push_back(make_backend(agent.backend, options.hooks));
    return run_dialogue(catalog, instance, agents, backends, mode, options);
}

DialogueTranscript run_dialogue(const PromptCatalog& catalog, const TaskInstance& instance,
                                const std::vector<AgentSpec>& agents,
                                const std::vector<BackendHandle>& backends, Strategy mode,
                                const DialogueOptions& options) {
    if (agents.size() < 2) throw Error("dialogue needs at least 2 agents");
    if (backends.size() != agents.size())
        throw Error("one backend per agent required");
    if (!is_dialogue_strategy(mode))
        throw StrategyMismatch(fmt::format("'{}' is not a dialogue strategy",
                                           to_string(mode)));
    if (options.max_rounds == 0) throw Error("max_rounds must be positive");

    {
        std::set<std::string> names;
        for (const auto& agent : agents)
            if (!names.insert(agent.name).second)
                throw Error(fmt::format("duplicate agent name '{}'", agent.name));
        // Shares must partition the instance's segments.
        std::set<std::string> assigned;
        for (const auto& agent : agents)
            for (const auto& id : agent.share.segments)
                if (!assigned.insert(id).second)
                    throw Error(fmt::format("segment '{}' assigned twice", id));
        if (assigned.size() != instance.context_segments.size())
            throw Error("shares do not cover every segment exactly once");
    }

    std::string all_roles;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (i) all_roles += i + 1 == agents.size() ? " and " : ", ";
        all_roles += agents[i].name;
    }

    std::vector<std::string> system_prompts;
    for (const auto& agent : agents) {
        std::string prompt = agent.system_prompt;
        if (prompt.empty())
            prompt = build_dialogue_prompt(catalog, agent.name, all_roles,
                                           join_share_text(instance, agent.share),
                                           instance, mode);
        check_share_leak(prompt, instance, agent);
        system_prompts.push_back(std::move(prompt));
    }

    DialogueTranscript transcript;
    transcript.instance_id = instance.id;
    transcript.mode = mode;

    bool stop = false;
    for (std::size_t round = 1; round <= options.max_rounds && !stop; ++round) {
        for (std::size_t k = 0; k < agents.size() && !stop; ++k) {
            ChatRequest request;
            request.model_id = backends[k]->model_id();
            request.temperature = backends[k]->default_temperature();
            request.messages.push_back({Role::system, system_prompts[k]});
            std::string history = render_history(transcript.turns);
            request.messages.push_back(
                {Role::user, history.empty() ? "You start the conversation." : history});

            ChatResponse response;
            try {
                response = backends[k]->complete(request);
            } catch (const Error&) {
                transcript.termination = Termination::backend_error;
                transcript.final_answer = std::nullopt;
                return transcript;
            }

            Turn turn;
            turn.round = round;
            turn.agent = agents[k].name;
            turn.message = response.content;
            turn.extracted_answer = extract_answer(response.content, instance.answer_spec);
            if (response.reported_usage) {
                turn.completion_tokens = response.reported_usage->completion_tokens;
                turn.token_source = token_source_provider();
            } else {
                turn.completion_tokens = count_tokens(response.content, options.tokenizer_id);
                turn.token_source = token_source_local(options.tokenizer_id);
            }
            transcript.total_completion_tokens += turn.completion_tokens;
            transcript.turns.push_back(std::move(turn));

            switch (check_termination(transcript.turns, agents.size(), options.policy)) {
            case TerminationDecision::consensus:
                transcript.termination = Termination::consensus;
                transcript.final_answer = last_emitted_answer(transcript.turns);
                stop = true;
                break;
            case TerminationDecision::single_answer:
                transcript.termination = Termination::single_answer;
                transcript.final_answer = last_emitted_answer(transcript.turns);
                stop = true;
                break;
            case TerminationDecision::keep_going:
                break;
            }
        }
    }

    if (!stop) {
        transcript.termination = Termination::max_rounds;
        if (options.policy == TerminationPolicy::single_answer_ok) {
            std::string last = last_emitted_answer(transcript.turns);
            if (!last.empty()) transcript.final_answer = last;
        }
    }
    return transcript;
}

DialogueMeasure measure_dialogue(const DialogueTranscript& transcript) {
    DialogueMeasure measure;
    measure.turns = transcript.turns.size();
    for (const auto& turn : transcript.turns) {
        measure.total_completion_tokens += turn.completion_tokens;
        measure.rounds = std::max(measure.rounds, turn.round);
    }
    return measure;
}

} // namespace autoform
