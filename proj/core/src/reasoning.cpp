#include "autoform/reasoning.hpp"

#include "autoform/errors.hpp"
#include "autoform/tokenizer.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <random>
#include <set>

namespace autoform {

using nlohmann::json;

std::string token_source_provider() { return "provider"; }
std::string token_source_local(const std::string& tokenizer_id) {
    return "local:" + tokenizer_id;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string strip_terminal(std::string value) {
    // Surrounding whitespace plus terminal sentence punctuation and
    // markdown emphasis.
    auto drop_tail = [&] {
        while (!value.empty()) {
            char c = value.back();
            if (is_space(c) || c == '.' || c == '!' || c == '?' || c == ',' ||
                c == ';' || c == ':' || c == '*' || c == '"' || c == '\'')
                value.pop_back();
            else
                break;
        }
    };
    std::size_t start = 0;
    while (start < value.size() && is_space(value[start])) ++start;
    value.erase(0, start);
    drop_tail();
    return value;
}

// Captures a yes/no token at `pos` in the lowercased text; returns the match.
std::optional<std::string> capture_yes_no(const std::string& low, std::size_t pos) {
    while (pos < low.size() && (is_space(low[pos]) || low[pos] == '"' || low[pos] == '\'' ||
                                low[pos] == '*'))
        ++pos;
    auto word_boundary = [&](std::size_t end) {
        return end >= low.size() || !std::isalnum(static_cast<unsigned char>(low[end]));
    };
    if (low.compare(pos, 3, "yes") == 0 && word_boundary(pos + 3)) return "yes";
    if (low.compare(pos, 2, "no") == 0 && word_boundary(pos + 2)) return "no";
    return std::nullopt;
}

std::optional<std::string> capture_integer(std::string_view text, std::size_t pos) {
    while (pos < text.size() && (is_space(text[pos]) || text[pos] == '"' ||
                                 text[pos] == '\'' || text[pos] == '*' || text[pos] == '('))
        ++pos;
    std::size_t start = pos;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
    std::size_t digits_start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == digits_start) return std::nullopt;
    return std::string(text.substr(start, pos - start));
}

std::optional<std::string> capture_letter(std::string_view text, std::size_t pos) {
    while (pos < text.size() && (is_space(text[pos]) || text[pos] == '"' ||
                                 text[pos] == '\'' || text[pos] == '*' || text[pos] == '('))
        ++pos;
    if (pos >= text.size() || !std::isalpha(static_cast<unsigned char>(text[pos])))
        return std::nullopt;
    if (pos + 1 < text.size() && std::isalpha(static_cast<unsigned char>(text[pos + 1])))
        return std::nullopt; // multi-letter word, not an option letter
    return std::string(1, static_cast<char>(std::toupper(
                              static_cast<unsigned char>(text[pos]))));
}

std::optional<std::string> capture_free_text(std::string_view text, std::size_t pos) {
    std::size_t eol = text.find('\n', pos);
    std::string value(text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                     : eol - pos));
    value = strip_terminal(std::move(value));
    if (value.empty()) return std::nullopt;
    return value;
}

std::optional<std::string> capture_by_domain(std::string_view original,
                                             const std::string& low, std::size_t pos,
                                             ValueDomain domain) {
    switch (domain) {
    case ValueDomain::yes_no: return capture_yes_no(low, pos);
    case ValueDomain::integer: return capture_integer(original, pos);
    case ValueDomain::capital_letter: return capture_letter(original, pos);
    case ValueDomain::free_text: return capture_free_text(original, pos);
    }
    return std::nullopt;
}

struct MarkerPhrase {
    std::string_view phrase;
    bool require_colon; // bare words need their colon so prose never matches
};

// Finds the last occurrence of any marker phrase followed by a well-formed
// value of the requested domain.
std::optional<std::string> scan_markers(std::string_view original,
                                        const std::vector<MarkerPhrase>& phrases,
                                        ValueDomain domain) {
    std::string low = lower(original);
    std::optional<std::string> best;
    std::size_t best_at = 0;
    for (const auto& marker : phrases) {
        std::size_t at = low.find(marker.phrase);
        while (at != std::string::npos) {
            std::size_t pos = at + marker.phrase.size();
            std::size_t probe = pos;
            while (probe < low.size() && (low[probe] == ' ' || low[probe] == '\t')) ++probe;
            bool has_colon = probe < low.size() && low[probe] == ':';
            if (has_colon) pos = probe + 1;
            if (!marker.require_colon || has_colon) {
                if (auto value = capture_by_domain(original, low, pos, domain)) {
                    if (!best || at >= best_at) {
                        best = std::move(value);
                        best_at = at;
                    }
                }
            }
            at = low.find(marker.phrase, at + 1);
        }
    }
    return best;
}

std::optional<std::string> extract_tagged(std::string_view original, ValueDomain domain) {
    std::string low = lower(original);
    std::size_t close = low.rfind("</a>");
    while (close != std::string::npos) {
        std::size_t open = low.rfind("<a>", close);
        if (open != std::string::npos) {
            std::string inner(original.substr(open + 3, close - open - 3));
            inner = strip_terminal(std::move(inner));
            if (!inner.empty()) {
                if (domain == ValueDomain::yes_no || domain == ValueDomain::capital_letter ||
                    domain == ValueDomain::integer) {
                    std::string inner_low = lower(inner);
                    return capture_by_domain(inner, inner_low, 0, domain);
                }
                return inner;
            }
        }
        if (close == 0) break;
        close = low.rfind("</a>", close - 1);
    }
    return std::nullopt;
}

} // namespace

std::optional<std::string> extract_answer(std::string_view text, const AnswerSpec& spec) {
    switch (spec.marker_kind) {
    case MarkerKind::the_answer_is:
        // Primary phrase plus the bare "Answer:" variant responses exhibit.
        return scan_markers(text, {{"the answer is", false}, {"answer", true}},
                            spec.value_domain);
    case MarkerKind::answer_colon:
        return scan_markers(text, {{"answer", true}}, spec.value_domain);
    case MarkerKind::correct_option_is:
        return scan_markers(text, {{"the correct option is", false},
                                   {"correct option", true}},
                            spec.value_domain);
    case MarkerKind::tagged_A: {
        if (auto tagged = extract_tagged(text, spec.value_domain)) return tagged;
        // Transcripts sometimes close with an "Answer:" line instead of the
        // tag; accept it as a fallback.
        return scan_markers(text, {{"answer", true}}, spec.value_domain);
    }
    }
    return std::nullopt;
}

std::string normalize_answer(std::string_view answer) {
    std::string collapsed;
    bool pending_space = false;
    for (char c : answer) {
        if (is_space(c)) {
            pending_space = !collapsed.empty();
        } else {
            if (pending_space) collapsed.push_back(' ');
            pending_space = false;
            collapsed.push_back(
                static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return strip_terminal(std::move(collapsed));
}

bool answer_matches_gold(std::string_view extracted, const std::vector<std::string>& golds) {
    std::string norm = normalize_answer(extracted);
    return std::any_of(golds.begin(), golds.end(), [&](const std::string& gold) {
        return normalize_answer(gold) == norm;
    });
}

namespace {

json strategy_to_json(const StrategyConfig& config) {
    json j{{"strategy", to_string(config.strategy)},
           {"k_task_examples", config.k_task_examples}};
    if (config.forced_format_label)
        j["forced_format_label"] = to_string(*config.forced_format_label);
    return j;
}

StrategyConfig strategy_from_json(const json& j) {
    StrategyConfig config;
    config.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    if (j.contains("k_task_examples"))
        config.k_task_examples = j.at("k_task_examples").get<std::size_t>();
    if (j.contains("forced_format_label"))
        config.forced_format_label =
            format_label_from_string(j.at("forced_format_label").get<std::string>());
    return config;
}

} // namespace

std::string ReasoningTrace::to_json_text() const {
    json j{
        {"instance_id", instance_id},
        {"strategy", strategy_to_json(strategy)},
        {"prompt_text", prompt_text},
        {"raw_response", raw_response},
        {"token_usage",
         {{"prompt_tokens", token_usage.prompt_tokens},
          {"completion_tokens", token_usage.completion_tokens},
          {"source", token_usage.source}}},
        {"run_index", run_index},
        {"solver_model", solver_model},
    };
    if (extracted_answer) j["extracted_answer"] = *extracted_answer;
    if (correct) j["correct"] = *correct;
    if (format_note) j["format_note"] = *format_note;
    return j.dump(2);
}

ReasoningTrace ReasoningTrace::from_json_text(const std::string& text) {
    json j = json::parse(text);
    ReasoningTrace trace;
    trace.instance_id = j.at("instance_id").get<std::string>();
    trace.strategy = strategy_from_json(j.at("strategy"));
    trace.prompt_text = j.at("prompt_text").get<std::string>();
    trace.raw_response = j.at("raw_response").get<std::string>();
    const auto& usage = j.at("token_usage");
    trace.token_usage.prompt_tokens = usage.at("prompt_tokens").get<std::size_t>();
    trace.token_usage.completion_tokens = usage.at("completion_tokens").get<std::size_t>();
    trace.token_usage.source = usage.at("source").get<std::string>();
    trace.run_index = j.at("run_index").get<std::size_t>();
    trace.solver_model = j.at("solver_model").get<std::string>();
    if (j.contains("extracted_answer"))
        trace.extracted_answer = j.at("extracted_answer").get<std::string>();
    if (j.contains("correct")) trace.correct = j.at("correct").get<bool>();
    if (j.contains("format_note")) trace.format_note = j.at("format_note").get<std::string>();
    return trace;
}

ReasoningTrace run_single(const PromptCatalog& catalog, const TaskInstance& instance,
                          const StrategyConfig& config, Backend& solver,
                          std::size_t run_index, std::int64_t base_seed,
                          const std::string& tokenizer_id,
                          const std::optional<FormatNote>& note) {
    if (!is_single_llm_strategy(config.strategy))
        throw StrategyMismatch(fmt::format("'{}' is not a single-LLM strategy",
                                           to_string(config.strategy)));
    if (is_two_step_strategy(config.strategy) && !note)
        throw MissingFormatNote("two-step run needs a FormatNote");

    auto messages = build_single_prompt(
        catalog, instance, config,
        note ? std::optional<std::string>(note->note_text) : std::nullopt);

    ChatRequest request;
    request.model_id = solver.model_id();
    request.messages = messages;
    request.temperature = solver.default_temperature();
    request.request_seed = base_seed + static_cast<std::int64_t>(run_index);

    ChatResponse response = solver.complete(request);

    ReasoningTrace trace;
    trace.instance_id = instance.id;
    trace.strategy = config;
    for (const auto& message : messages) {
        if (!trace.prompt_text.empty()) trace.prompt_text += "\n";
        trace.prompt_text += message.content;
    }
    trace.raw_response = response.content;
    trace.run_index = run_index;
    trace.solver_model = solver.model_id();
    if (note) trace.format_note = note->note_text;

    if (response.reported_usage) {
        trace.token_usage.prompt_tokens = response.reported_usage->prompt_tokens;
        trace.token_usage.completion_tokens = response.reported_usage->completion_tokens;
        trace.token_usage.source = token_source_provider();
    } else {
        trace.token_usage.prompt_tokens = count_tokens(trace.prompt_text, tokenizer_id);
        trace.token_usage.completion_tokens = count_tokens(response.content, tokenizer_id);
        trace.token_usage.source = token_source_local(tokenizer_id);
    }

    trace.extracted_answer = extract_answer(response.content, instance.answer_spec);
    trace.correct = trace.extracted_answer &&
                    answer_matches_gold(*trace.extracted_answer, instance.gold_answers);
    return trace;
}

FormatNote select_format(const PromptCatalog& catalog, const TaskSet& set,
                         SelectionMode mode, Backend& selector, std::uint64_t seed,
                         std::size_t k_task_examples) {
    std::vector<TaskInstance> sample;
    if (mode == SelectionMode::instance) {
        if (!set.instances.empty()) sample.push_back(set.instances.front());
    } else {
        auto indices = seeded_sample_indices(set.instances.size(),
                                             std::min(k_task_examples, set.instances.size()),
                                             seed);
        for (std::size_t idx : indices) sample.push_back(set.instances[idx]);
    }
    auto messages = build_format_selection_prompt(catalog, sample, mode, k_task_examples);

    ChatRequest request;
    request.model_id = selector.model_id();
    request.messages = std::move(messages);
    ChatResponse response = selector.complete(request);
    if (response.content.find_first_not_of(" \t\r\n") == std::string::npos)
        throw EmptySelectorReply("format selector returned a blank reply");

    FormatNote note;
    note.selector_model = selector.model_id();
    note.scope = mode;
    note.note_text = response.content;
    return note;
}

FormatNote select_format_for_instance(const PromptCatalog& catalog,
                                      const TaskInstance& instance, Backend& selector) {
    auto messages =
        build_format_selection_prompt(catalog, {instance}, SelectionMode::instance);
    ChatRequest request;
    request.model_id = selector.model_id();
    request.messages = std::move(messages);
    ChatResponse response = selector.complete(request);
    if (response.content.find_first_not_of(" \t\r\n") == std::string::npos)
        throw EmptySelectorReply("format selector returned a blank reply");
    return FormatNote{selector.model_id(), SelectionMode::instance, response.content};
}

TwoStepResult run_two_step(const PromptCatalog& catalog, const TaskSet& set,
                           SelectionMode mode, Backend& selector, Backend& solver,
                           std::size_t runs, std::uint64_t seed,
                           std::size_t k_task_examples, const std::string& tokenizer_id) {
    if (runs == 0) throw Error("runs must be positive");

    TwoStepResult result;
    std::vector<const FormatNote*> note_per_instance(set.instances.size(), nullptr);
    if (mode == SelectionMode::task) {
        result.notes.push_back(
            select_format(catalog, set, SelectionMode::task, selector, seed,
                          k_task_examples));
        for (auto& slot : note_per_instance) slot = &result.notes.front();
    } else {
        result.notes.reserve(set.instances.size());
        for (const auto& instance : set.instances)
            result.notes.push_back(select_format_for_instance(catalog, instance, selector));
        for (std::size_t i = 0; i < set.instances.size(); ++i)
            note_per_instance[i] = &result.notes[i];
    }

    StrategyConfig config;
    config.strategy = mode == SelectionMode::task ? Strategy::two_step_task
                                                  : Strategy::two_step_instance;
    config.k_task_examples = k_task_examples;

    std::map<std::string, std::vector<std::string>> golds;
    for (const auto& instance : set.instances) golds[instance.id] = instance.gold_answers;

    for (std::size_t run = 0; run < runs; ++run)
        for (std::size_t i = 0; i < set.instances.size(); ++i)
            result.traces.push_back(run_single(catalog, set.instances[i], config, solver,
                                               run, static_cast<std::int64_t>(seed),
                                               tokenizer_id, *note_per_instance[i]));

    result.report = score_accuracy(result.traces, golds, runs);
    return result;
}

AccuracyReport score_accuracy(const std::vector<ReasoningTrace>& traces,
                              const std::map<std::string, std::vector<std::string>>& golds,
                              std::size_t runs) {
    if (runs == 0) throw Error("runs must be positive");
    std::vector<std::set<std::string>> seen(runs);
    std::vector<std::size_t> correct(runs, 0);

    for (const auto& trace : traces) {
        auto gold = golds.find(trace.instance_id);
        if (gold == golds.end())
            throw MissingGold(fmt::format("no gold answers for instance '{}'",
                                          trace.instance_id));
        if (trace.run_index >= runs)
            throw IncompleteRunMatrix(fmt::format("trace run_index {} outside {} runs",
                                                  trace.run_index, runs));
        if (!seen[trace.run_index].insert(trace.instance_id).second)
            throw IncompleteRunMatrix(fmt::format("duplicate trace for '{}' in run {}",
                                                  trace.instance_id, trace.run_index));
        bool is_correct = trace.correct
                              ? *trace.correct
                              : (trace.extracted_answer &&
                                 answer_matches_gold(*trace.extracted_answer, gold->second));
        if (is_correct) ++correct[trace.run_index];
    }

    for (std::size_t run = 0; run < runs; ++run)
        if (seen[run].size() != golds.size())
            throw IncompleteRunMatrix(fmt::format(
                "run {} covers {} of {} instances", run, seen[run].size(), golds.size()));

    AccuracyReport report;
    report.n_instances = golds.size();
    for (std::size_t run = 0; run < runs; ++run)
        report.per_run_accuracy.push_back(static_cast<double>(correct[run]) /
                                          static_cast<double>(golds.size()));
    auto aggregate = aggregate_runs(report.per_run_accuracy);
    report.mean = aggregate.mean;
    report.std_dev = aggregate.std_dev;
    return report;
}

} // namespace autoform
