#include "autoform/prompting.hpp"

#include "autoform/errors.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace autoform {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct StrategyName {
    Strategy strategy;
    const char* name;
};

constexpr std::array<StrategyName, 9> kStrategyNames{{
    {Strategy::cot, "cot"},
    {Strategy::autoform, "autoform"},
    {Strategy::forced_format, "forced_format"},
    {Strategy::two_step_instance, "two_step_instance"},
    {Strategy::two_step_task, "two_step_task"},
    {Strategy::dialogue_nl, "dialogue_nl"},
    {Strategy::dialogue_autoform, "dialogue_autoform"},
    {Strategy::dialogue_kqml, "dialogue_kqml"},
    {Strategy::dialogue_json_kqml, "dialogue_json_kqml"},
}};

} // namespace

std::string to_string(Strategy strategy) {
    for (const auto& entry : kStrategyNames)
        if (entry.strategy == strategy) return entry.name;
    return "cot";
}

Strategy strategy_from_string(const std::string& s) {
    for (const auto& entry : kStrategyNames)
        if (s == entry.name) return entry.strategy;
    throw Error(fmt::format("unknown strategy '{}'", s));
}

bool is_single_llm_strategy(Strategy strategy) {
    switch (strategy) {
    case Strategy::cot:
    case Strategy::autoform:
    case Strategy::forced_format:
    case Strategy::two_step_instance:
    case Strategy::two_step_task:
        return true;
    default:
        return false;
    }
}

bool is_dialogue_strategy(Strategy strategy) { return !is_single_llm_strategy(strategy); }

bool is_two_step_strategy(Strategy strategy) {
    return strategy == Strategy::two_step_instance || strategy == Strategy::two_step_task;
}

void StrategyConfig::validate() const {
    if (strategy == Strategy::forced_format && !forced_format_label)
        throw StrategyMismatch("forced_format strategy requires forced_format_label");
    if (k_task_examples == 0)
        throw Error("k_task_examples must be positive");
}

std::string format_instruction(FormatLabel label) {
    const char* phrase = nullptr;
    switch (label) {
    case FormatLabel::math_equation: phrase = "mathematical equations"; break;
    case FormatLabel::unordered_list: phrase = "an unordered list"; break;
    case FormatLabel::ordered_list: phrase = "an ordered list"; break;
    case FormatLabel::markdown_table: phrase = "a markdown table"; break;
    case FormatLabel::multi_level_list: phrase = "a multi-level list"; break;
    case FormatLabel::logical_expression: phrase = "logical expressions"; break;
    case FormatLabel::json: phrase = "JSON"; break;
    case FormatLabel::code_or_pseudocode: phrase = "code or pseudocode"; break;
    case FormatLabel::natural_language: phrase = "natural language"; break;
    case FormatLabel::other: phrase = "a structured format other than natural language"; break;
    }
    return fmt::format("You must present your step-by-step reasoning strictly as {}.",
                       phrase);
}

std::vector<std::string> scan_placeholders(const std::string& text) {
    std::vector<std::string> names;
    std::size_t pos = 0;
    while ((pos = text.find("${", pos)) != std::string::npos) {
        std::size_t name_start = pos + 2;
        std::size_t end = name_start;
        while (end < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_'))
            ++end;
        if (end < text.size() && text[end] == '}' && end > name_start) {
            std::string name = text.substr(name_start, end - name_start);
            if (std::find(names.begin(), names.end(), name) == names.end())
                names.push_back(std::move(name));
            pos = end + 1;
        } else {
            pos = name_start; // not a placeholder, keep scanning
        }
    }
    return names;
}

std::string render_template_text(const std::string& template_id, const std::string& text,
                                 const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t at = text.find("${", pos);
        if (at == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, at - pos);
        std::size_t name_start = at + 2;
        std::size_t end = name_start;
        while (end < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_'))
            ++end;
        if (end < text.size() && text[end] == '}' && end > name_start) {
            std::string name = text.substr(name_start, end - name_start);
            auto it = bindings.find(name);
            if (it == bindings.end())
                throw UnboundPlaceholder(
                    fmt::format("template '{}': placeholder '{}' is unbound", template_id,
                                name),
                    name);
            out += it->second;
            pos = end + 1;
        } else {
            out += "${";
            pos = name_start;
        }
    }
    return out;
}

PromptCatalog PromptCatalog::load(const std::string& directory) {
    PromptCatalog catalog;
    fs::path root(directory);
    if (!fs::is_directory(root))
        throw Error(fmt::format("prompts directory '{}' does not exist", directory));
    for (const auto& group : fs::directory_iterator(root)) {
        if (!group.is_directory()) continue;
        std::string group_name = group.path().filename().string();
        for (const auto& file : fs::directory_iterator(group.path())) {
            if (!file.is_regular_file()) continue;
            auto path = file.path();
            if (path.extension() == ".txt") {
                std::ifstream in(path);
                std::stringstream buffer;
                buffer << in.rdbuf();
                catalog.add_template(group_name + "/" + path.stem().string(),
                                     buffer.str());
            } else if (path.filename() == "examples.json") {
                std::ifstream in(path);
                json parsed = json::parse(in, nullptr, false);
                if (parsed.is_discarded() || !parsed.contains("examples"))
                    throw Error(fmt::format("bad examples file '{}'", path.string()));
                std::vector<DialogueExample> examples;
                for (const auto& e : parsed["examples"])
                    examples.push_back({e.at("context").get<std::string>(),
                                        e.at("question").get<std::string>(),
                                        e.at("answer").get<std::string>()});
                catalog.add_examples(task_kind_from_string(group_name),
                                     std::move(examples));
            }
        }
    }
    return catalog;
}

void PromptCatalog::add_template(const std::string& template_id, std::string text) {
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r' ||
                             text.back() == ' ' || text.back() == '\t'))
        text.pop_back();
    PromptTemplate tpl;
    tpl.template_id = template_id;
    tpl.placeholders = scan_placeholders(text);
    tpl.text = std::move(text);
    templates_[template_id] = std::move(tpl);
}

void PromptCatalog::add_examples(TaskKind kind, std::vector<DialogueExample> examples) {
    examples_[kind] = std::move(examples);
}

const PromptTemplate& PromptCatalog::get(const std::string& template_id) const {
    auto it = templates_.find(template_id);
    if (it != templates_.end()) return it->second;
    // Per-kind ids fall back to the shared scaffold.
    auto slash = template_id.find('/');
    if (slash != std::string::npos) {
        auto shared = templates_.find("_shared/" + template_id.substr(slash + 1));
        if (shared != templates_.end()) return shared->second;
    }
    throw UnknownTemplate(fmt::format("no template '{}'", template_id));
}

bool PromptCatalog::has(const std::string& template_id) const {
    if (templates_.count(template_id)) return true;
    auto slash = template_id.find('/');
    if (slash != std::string::npos)
        return templates_.count("_shared/" + template_id.substr(slash + 1)) > 0;
    return false;
}

std::vector<std::string> PromptCatalog::template_ids() const {
    std::vector<std::string> ids;
    ids.reserve(templates_.size());
    for (const auto& [id, tpl] : templates_) ids.push_back(id);
    return ids;
}

const std::vector<DialogueExample>& PromptCatalog::examples_for(TaskKind kind) const {
    auto it = examples_.find(kind);
    if (it == examples_.end() || it->second.size() < 2)
        throw Error(fmt::format("no dialogue examples registered for task kind '{}'",
                                to_string(kind)));
    return it->second;
}

std::string PromptCatalog::render(const std::string& template_id,
                                  const std::map<std::string, std::string>& bindings) const {
    const PromptTemplate& tpl = get(template_id);
    return render_template_text(tpl.template_id, tpl.text, bindings);
}

std::vector<ChatMessage> build_single_prompt(const PromptCatalog& catalog,
                                             const TaskInstance& instance,
                                             const StrategyConfig& config,
                                             const std::optional<std::string>& format_note) {
    config.validate();
    if (!is_single_llm_strategy(config.strategy))
        throw StrategyMismatch(fmt::format("'{}' is not a single-LLM strategy",
                                           to_string(config.strategy)));

    std::string kind = to_string(instance.task_kind);
    std::map<std::string, std::string> bindings{{"task_description", instance.input_text}};

    std::string text;
    switch (config.strategy) {
    case Strategy::cot:
        text = catalog.render(kind + "/cot", bindings);
        break;
    case Strategy::autoform:
        text = catalog.render(kind + "/autoform", bindings);
        break;
    case Strategy::forced_format:
        bindings["format_instruction"] = format_instruction(*config.forced_format_label);
        bindings["format_label"] = to_string(*config.forced_format_label);
        text = catalog.render(kind + "/forced_format", bindings);
        break;
    case Strategy::two_step_instance:
    case Strategy::two_step_task: {
        if (!format_note || format_note->empty())
            throw MissingFormatNote("two-step stage-2 prompt needs the stage-1 format note");
        std::string cot = catalog.render(kind + "/cot", bindings);
        text = fmt::format(
            "A reasoning format has been chosen for problems like this one:\n{}\n\n"
            "Apply that format.\n\n{}",
            *format_note, cot);
        break;
    }
    default:
        throw StrategyMismatch("unreachable");
    }
    return {ChatMessage{Role::user, std::move(text)}};
}

std::string to_string(SelectionMode mode) {
    return mode == SelectionMode::instance ? "instance" : "task";
}

SelectionMode selection_mode_from_string(const std::string& s) {
    if (s == "instance") return SelectionMode::instance;
    if (s == "task") return SelectionMode::task;
    throw Error(fmt::format("unknown selection mode '{}'", s));
}

std::vector<ChatMessage> build_format_selection_prompt(
    const PromptCatalog& catalog, const std::vector<TaskInstance>& instances,
    SelectionMode mode, std::size_t k_task_examples) {
    if (mode == SelectionMode::instance && instances.size() != 1)
        throw WrongArity(fmt::format("instance mode takes exactly 1 instance, got {}",
                                     instances.size()));
    if (mode == SelectionMode::task && instances.size() != k_task_examples)
        throw WrongArity(fmt::format("task mode takes exactly {} instances, got {}",
                                     k_task_examples, instances.size()));

    std::map<std::string, std::string> bindings;
    std::string text;
    if (mode == SelectionMode::instance) {
        bindings["task_description"] = instances.front().input_text;
        text = catalog.render("_shared/format_selection_instance", bindings);
    } else {
        for (std::size_t i = 0; i < instances.size(); ++i)
            bindings[fmt::format("example_question_{}", i + 1)] = instances[i].input_text;
        text = catalog.render("_shared/format_selection_task", bindings);
    }
    return {ChatMessage{Role::user, std::move(text)}};
}

std::string build_dialogue_prompt(const PromptCatalog& catalog,
                                  const std::string& agent_name,
                                  const std::string& all_roles,
                                  const std::string& share_text,
                                  const TaskInstance& instance, Strategy mode) {
    if (!is_dialogue_strategy(mode))
        throw StrategyMismatch(fmt::format("'{}' is not a dialogue strategy",
                                           to_string(mode)));
    const auto& examples = catalog.examples_for(instance.task_kind);
    std::map<std::string, std::string> bindings{
        {"agent_name", agent_name},
        {"all_roles", all_roles},
        {"knowledge", share_text},
        {"task_description", instance.input_text},
    };
    for (std::size_t i = 0; i < 2; ++i) {
        bindings[fmt::format("example_context_{}", i + 1)] = examples[i].context;
        bindings[fmt::format("example_question_{}", i + 1)] = examples[i].question;
        bindings[fmt::format("example_answer_{}", i + 1)] = examples[i].answer;
    }
    std::string kind = to_string(instance.task_kind);
    return catalog.render(kind + "/" + to_string(mode), bindings);
}

} // namespace autoform
