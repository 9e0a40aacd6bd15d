#include "autoform/config.hpp"

#include "autoform/errors.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace autoform {

using nlohmann::json;

namespace {

BackendKind backend_kind_from_string(const std::string& s) {
    if (s == "http") return BackendKind::http;
    if (s == "scripted") return BackendKind::scripted;
    if (s == "replay") return BackendKind::replay;
    throw ConfigInvalid(fmt::format("unknown backend kind '{}'", s), "backends.kind");
}

std::string backend_kind_to_string(BackendKind kind) {
    switch (kind) {
    case BackendKind::http: return "http";
    case BackendKind::scripted: return "scripted";
    case BackendKind::replay: return "replay";
    }
    return "scripted";
}

BackendConfig backend_from_json(const std::string& name, const json& j) {
    BackendConfig config;
    if (!j.contains("kind"))
        throw ConfigInvalid(fmt::format("backend '{}' lacks 'kind'", name),
                            fmt::format("backends.{}.kind", name));
    config.kind = backend_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("model_id")) config.model_id = j.at("model_id").get<std::string>();
    if (j.contains("endpoint_url"))
        config.endpoint_url = j.at("endpoint_url").get<std::string>();
    if (j.contains("api_key_env"))
        config.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("max_retries")) config.max_retries = j.at("max_retries").get<unsigned>();
    if (j.contains("backoff_base_ms"))
        config.backoff_base_ms = j.at("backoff_base_ms").get<unsigned>();
    if (j.contains("requests_per_minute"))
        config.requests_per_minute = j.at("requests_per_minute").get<unsigned>();
    if (j.contains("default_temperature"))
        config.default_temperature = j.at("default_temperature").get<double>();
    if (j.contains("source")) config.source_path = j.at("source").get<std::string>();
    if (j.contains("replay_agent"))
        config.replay_agent = j.at("replay_agent").get<std::string>();
    try {
        config.validate();
    } catch (const Error& e) {
        throw ConfigInvalid(fmt::format("backend '{}': {}", name, e.what()),
                            fmt::format("backends.{}", name));
    }
    return config;
}

json backend_to_json(const BackendConfig& config) {
    json j{{"kind", backend_kind_to_string(config.kind)},
           {"model_id", config.model_id},
           {"max_retries", config.max_retries},
           {"backoff_base_ms", config.backoff_base_ms},
           {"default_temperature", config.default_temperature}};
    if (config.endpoint_url) j["endpoint_url"] = *config.endpoint_url;
    if (config.api_key_env) j["api_key_env"] = *config.api_key_env;
    if (config.requests_per_minute) j["requests_per_minute"] = *config.requests_per_minute;
    if (config.source_path) j["source"] = *config.source_path;
    if (config.replay_agent) j["replay_agent"] = *config.replay_agent;
    return j;
}

} // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ConfigInvalid("config is not a JSON object");

    ExperimentConfig config;
    if (!j.contains("task") || !j["task"].is_object())
        throw ConfigInvalid("missing 'task' section", "task");
    const auto& task = j["task"];
    if (!task.contains("path")) throw ConfigInvalid("task needs 'path'", "task.path");
    if (!task.contains("kind")) throw ConfigInvalid("task needs 'kind'", "task.kind");
    config.task.path = task.at("path").get<std::string>();
    try {
        config.task.kind = task_kind_from_string(task.at("kind").get<std::string>());
    } catch (const Error& e) {
        throw ConfigInvalid(e.what(), "task.kind");
    }
    config.task.name = task.contains("name") ? task.at("name").get<std::string>()
                                             : to_string(config.task.kind);

    if (!j.contains("strategy")) throw ConfigInvalid("missing 'strategy'", "strategy");
    try {
        if (j["strategy"].is_string()) {
            config.strategy.strategy =
                strategy_from_string(j["strategy"].get<std::string>());
        } else {
            const auto& strategy = j["strategy"];
            config.strategy.strategy =
                strategy_from_string(strategy.at("name").get<std::string>());
            if (strategy.contains("forced_format_label"))
                config.strategy.forced_format_label = format_label_from_string(
                    strategy.at("forced_format_label").get<std::string>());
            if (strategy.contains("k_task_examples"))
                config.strategy.k_task_examples =
                    strategy.at("k_task_examples").get<std::size_t>();
        }
        config.strategy.validate();
    } catch (const ConfigInvalid&) {
        throw;
    } catch (const Error& e) {
        throw ConfigInvalid(e.what(), "strategy");
    }

    if (j.contains("backends"))
        for (const auto& [name, backend] : j["backends"].items())
            config.backends.emplace(name, backend_from_json(name, backend));

    if (j.contains("roles")) {
        const auto& roles = j["roles"];
        if (roles.contains("solver"))
            config.solver_backend = roles.at("solver").get<std::string>();
        if (roles.contains("selector"))
            config.selector_backend = roles.at("selector").get<std::string>();
        if (roles.contains("agents"))
            for (const auto& agent : roles.at("agents"))
                config.agents.push_back({agent.at("name").get<std::string>(),
                                         agent.at("backend").get<std::string>()});
    }

    if (j.contains("runs")) config.runs = j.at("runs").get<std::size_t>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::int64_t>();
    if (j.contains("max_rounds")) config.max_rounds = j.at("max_rounds").get<std::size_t>();
    if (j.contains("policy"))
        config.policy = termination_policy_from_string(j.at("policy").get<std::string>());
    if (j.contains("tokenizer")) config.tokenizer_id = j.at("tokenizer").get<std::string>();
    if (j.contains("out")) config.out_dir = j.at("out").get<std::string>();
    if (j.contains("prompts")) config.prompts_dir = j.at("prompts").get<std::string>();
    if (j.contains("workers")) config.workers = j.at("workers").get<std::size_t>();
    if (j.contains("baseline")) config.baseline_dir = j.at("baseline").get<std::string>();
    if (j.contains("emit_delta")) config.emit_delta = j.at("emit_delta").get<bool>();
    if (j.contains("run_label")) config.run_label = j.at("run_label").get<std::string>();
    if (j.contains("split")) {
        std::string split = j.at("split").get<std::string>();
        if (split == "supporting")
            config.split_supporting = true;
        else if (split != "random")
            throw ConfigInvalid(fmt::format("unknown split '{}'", split), "split");
    }

    if (config.runs == 0) throw ConfigInvalid("runs must be positive", "runs");
    if (config.max_rounds == 0) throw ConfigInvalid("max_rounds must be positive", "max_rounds");
    if (config.workers == 0) throw ConfigInvalid("workers must be positive", "workers");
    return config;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid(fmt::format("cannot open config '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

json ExperimentConfig::to_json() const {
    json strategy_json{{"name", to_string(strategy.strategy)},
                       {"k_task_examples", strategy.k_task_examples}};
    if (strategy.forced_format_label)
        strategy_json["forced_format_label"] = to_string(*strategy.forced_format_label);

    json backends_json = json::object();
    for (const auto& [name, backend] : backends)
        backends_json[name] = backend_to_json(backend);

    json roles{{"solver", solver_backend}};
    if (selector_backend) roles["selector"] = *selector_backend;
    json agents_json = json::array();
    for (const auto& agent : agents)
        agents_json.push_back({{"name", agent.name}, {"backend", agent.backend}});
    roles["agents"] = std::move(agents_json);

    json j{{"task",
            {{"name", task.name}, {"path", task.path}, {"kind", to_string(task.kind)}}},
           {"strategy", std::move(strategy_json)},
           {"backends", std::move(backends_json)},
           {"roles", std::move(roles)},
           {"runs", runs},
           {"seed", seed},
           {"max_rounds", max_rounds},
           {"policy", to_string(policy)},
           {"tokenizer", tokenizer_id},
           {"out", out_dir},
           {"prompts", prompts_dir},
           {"workers", workers},
           {"emit_delta", emit_delta},
           {"split", split_supporting ? "supporting" : "random"}};
    if (baseline_dir) j["baseline"] = *baseline_dir;
    if (run_label) j["run_label"] = *run_label;
    return j;
}

const BackendConfig& ExperimentConfig::backend_named(const std::string& name) const {
    auto it = backends.find(name);
    if (it == backends.end())
        throw ConfigInvalid(fmt::format("backend '{}' is not defined", name),
                            "backends");
    return it->second;
}

void ExperimentConfig::validate_for_reason() const {
    if (!is_single_llm_strategy(strategy.strategy))
        throw ConfigInvalid(
            fmt::format("run-reason needs a single-LLM strategy, got '{}'",
                        to_string(strategy.strategy)),
            "strategy");
    if (solver_backend.empty())
        throw ConfigInvalid("run-reason needs roles.solver", "roles.solver");
    backend_named(solver_backend);
    if (is_two_step_strategy(strategy.strategy)) {
        if (!selector_backend)
            throw ConfigInvalid("two-step strategies need roles.selector", "roles.selector");
        backend_named(*selector_backend);
    }
}

void ExperimentConfig::validate_for_dialogue() const {
    if (!is_dialogue_strategy(strategy.strategy))
        throw ConfigInvalid(
            fmt::format("run-dialogue needs a dialogue strategy, got '{}'",
                        to_string(strategy.strategy)),
            "strategy");
    if (agents.size() < 2)
        throw ConfigInvalid("run-dialogue needs at least 2 agents", "roles.agents");
    for (const auto& agent : agents) backend_named(agent.backend);
}

} // namespace autoform
