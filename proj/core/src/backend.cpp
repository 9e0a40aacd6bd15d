#include "autoform/backend.hpp"

#include "autoform/errors.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

// httplib is used only by the default transport; keep it out of the header.
#include <httplib.h>

namespace autoform {

using nlohmann::json;

std::string to_string(Role role) {
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw Error(fmt::format("unknown chat role '{}'", s));
}

void ChatRequest::validate() const {
    if (messages.empty()) throw Error("chat request has no messages");
    Role first = messages.front().role;
    if (first != Role::system && first != Role::user)
        throw Error("first message role must be system or user");
    if (temperature < 0.0 || temperature > 2.0)
        throw Error(fmt::format("temperature {} outside [0, 2]", temperature));
    if (max_output_tokens && *max_output_tokens == 0)
        throw Error("max_output_tokens must be positive");
}

void BackendConfig::validate() const {
    switch (kind) {
    case BackendKind::http:
        if (!endpoint_url) throw Error("http backend requires endpoint_url");
        if (!api_key_env) throw Error("http backend requires api_key_env");
        break;
    case BackendKind::scripted:
        if (!inline_script && !source_path)
            throw Error("scripted backend requires a script source");
        break;
    case BackendKind::replay:
        if (!source_path) throw Error("replay backend requires a transcript source");
        break;
    }
    if (backoff_base_ms == 0) throw Error("backoff_base_ms must be positive");
    if (requests_per_minute && *requests_per_minute == 0)
        throw Error("requests_per_minute must be positive");
}

Script Script::from_json_text(const std::string& text) {
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_array())
        throw Error("script must be a JSON array of {match?, response} records");
    Script script;
    for (const auto& record : parsed) {
        if (!record.is_object() || !record.contains("response"))
            throw Error("script record missing 'response'");
        ScriptEntry entry;
        entry.response = record.at("response").get<std::string>();
        if (record.contains("match") && !record.at("match").is_null())
            entry.match = record.at("match").get<std::string>();
        script.entries.push_back(std::move(entry));
    }
    if (script.entries.empty()) throw Error("script has no entries");
    return script;
}

Script Script::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open script '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

std::string Script::to_json_text() const {
    json out = json::array();
    for (const auto& entry : entries) {
        json record{{"response", entry.response}};
        if (entry.match) record["match"] = *entry.match;
        out.push_back(std::move(record));
    }
    return out.dump(2);
}

RateLimiter::RateLimiter(unsigned per_minute, Clock clock, Sleeper sleeper)
    : per_minute_(per_minute),
      clock_(clock ? std::move(clock) : [] { return std::chrono::steady_clock::now(); }),
      sleeper_(sleeper ? std::move(sleeper)
                       : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

void RateLimiter::acquire() {
    using namespace std::chrono;
    std::unique_lock lock(mutex_);
    for (;;) {
        auto now = clock_();
        auto cutoff = now - seconds(60);
        recent_.erase(std::remove_if(recent_.begin(), recent_.end(),
                                     [&](auto t) { return t <= cutoff; }),
                      recent_.end());
        if (recent_.size() < per_minute_) {
            recent_.push_back(now);
            return;
        }
        auto oldest = *std::min_element(recent_.begin(), recent_.end());
        auto wait = duration_cast<milliseconds>(oldest + seconds(60) - now) + milliseconds(1);
        lock.unlock();
        sleeper_(std::max(wait, milliseconds(1)));
        lock.lock();
    }
}

namespace {

std::string last_user_message(const ChatRequest& request) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it)
        if (it->role == Role::user) return it->content;
    return {};
}

class ScriptedBackend final : public Backend {
public:
    ScriptedBackend(Script script, std::string model_id)
        : script_(std::move(script)), model_id_(std::move(model_id)) {}

    ChatResponse complete(const ChatRequest& request) override {
        request.validate();
        std::lock_guard lock(mutex_);
        if (cursor_ >= script_.entries.size()) {
            if (script_.exhaustion_policy == ExhaustionPolicy::error)
                throw ScriptExhausted(fmt::format(
                    "script exhausted after {} entries", script_.entries.size()));
            return respond(script_.entries.back(), request);
        }
        const ScriptEntry& entry = script_.entries[cursor_++];
        return respond(entry, request);
    }

    std::string id() const override { return "scripted:" + model_id_; }
    std::string model_id() const override { return model_id_; }
    std::size_t calls_served() const override {
        std::lock_guard lock(mutex_);
        return served_;
    }

private:
    ChatResponse respond(const ScriptEntry& entry, const ChatRequest& request) {
        if (entry.match) {
            std::string last = last_user_message(request);
            if (last.find(*entry.match) == std::string::npos)
                throw ScriptMismatch(fmt::format(
                    "script entry expected '{}' in the last user message", *entry.match));
        }
        ++served_;
        ChatResponse response;
        response.content = entry.response;
        response.backend_id = id();
        return response;
    }

    Script script_;
    std::string model_id_;
    mutable std::mutex mutex_;
    std::size_t cursor_ = 0;
    std::size_t served_ = 0;
};

class ReplayBackend final : public Backend {
public:
    ReplayBackend(const std::string& path, std::optional<std::string> agent,
                  std::string model_id)
        : model_id_(std::move(model_id)) {
        std::ifstream in(path);
        if (!in) throw Error(fmt::format("cannot open transcript '{}'", path));
        json transcript = json::parse(in, nullptr, false);
        if (transcript.is_discarded() || !transcript.contains("turns"))
            throw Error(fmt::format("'{}' is not a transcript file", path));
        for (const auto& turn : transcript.at("turns")) {
            if (agent && turn.at("agent").get<std::string>() != *agent) continue;
            messages_.push_back(turn.at("message").get<std::string>());
        }
        if (messages_.empty())
            throw Error(fmt::format("transcript '{}' holds no turns{}", path,
                                    agent ? fmt::format(" for agent '{}'", *agent) : ""));
    }

    ChatResponse complete(const ChatRequest& request) override {
        request.validate();
        std::lock_guard lock(mutex_);
        if (cursor_ >= messages_.size())
            throw ScriptExhausted(fmt::format("replay exhausted after {} turns", messages_.size()));
        ChatResponse response;
        response.content = messages_[cursor_++];
        response.backend_id = id();
        ++served_;
        return response;
    }

    std::string id() const override { return "replay:" + model_id_; }
    std::string model_id() const override { return model_id_; }
    std::size_t calls_served() const override {
        std::lock_guard lock(mutex_);
        return served_;
    }

private:
    std::string model_id_;
    std::vector<std::string> messages_;
    mutable std::mutex mutex_;
    std::size_t cursor_ = 0;
    std::size_t served_ = 0;
};

class DefaultTransport final : public HttpTransport {
public:
    HttpResult post(const std::string& url,
                    const std::vector<std::pair<std::string, std::string>>& headers,
                    const std::string& body) override {
        auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw Error(fmt::format("endpoint url '{}' has no scheme", url));
        auto path_start = url.find('/', scheme_end + 3);
        std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(base);
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        httplib::Headers hdrs;
        for (const auto& [k, v] : headers) hdrs.emplace(k, v);
        auto result = client.Post(path, hdrs, body, "application/json");
        if (!result)
            throw Error(fmt::format("transport failure: {}", httplib::to_string(result.error())));
        return HttpResult{result->status, result->body};
    }
};

class HttpBackend final : public Backend {
public:
    HttpBackend(BackendConfig config, BackendHooks hooks)
        : config_(std::move(config)),
          transport_(hooks.transport ? hooks.transport : make_default_transport()),
          clock_(hooks.clock ? hooks.clock : [] { return std::chrono::steady_clock::now(); }),
          sleeper_(hooks.sleeper ? hooks.sleeper
                                 : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
        if (config_.requests_per_minute)
            limiter_ = std::make_unique<RateLimiter>(*config_.requests_per_minute,
                                                     clock_, sleeper_);
    }

    ChatResponse complete(const ChatRequest& request) override {
        request.validate();
        const char* key = std::getenv(config_.api_key_env->c_str());
        if (key == nullptr || *key == '\0')
            throw MissingCredential(fmt::format(
                "environment variable '{}' is not set", *config_.api_key_env));

        std::string body = build_body(request);
        std::vector<std::pair<std::string, std::string>> headers{
            {"Authorization", fmt::format("Bearer {}", key)},
        };

        std::string last_failure = "no attempt made";
        for (unsigned attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0)
                sleeper_(std::chrono::milliseconds(config_.backoff_base_ms * (1u << (attempt - 1))));
            if (limiter_) limiter_->acquire();
            auto start = clock_();
            HttpResult result;
            try {
                result = transport_->post(*config_.endpoint_url, headers, body);
            } catch (const std::exception& e) {
                last_failure = e.what();
                continue;
            }
            auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                clock_() - start);
            if (result.status == 429 || result.status >= 500) {
                last_failure = fmt::format("status {}", result.status);
                continue;
            }
            {
                std::lock_guard lock(mutex_);
                ++served_;
            }
            return parse_reply(result, static_cast<std::uint64_t>(elapsed.count()));
        }
        throw TransportExhausted(fmt::format(
            "gave up after {} attempts: {}", config_.max_retries + 1, last_failure));
    }

    std::string id() const override { return "http:" + config_.model_id; }
    std::string model_id() const override { return config_.model_id; }
    std::size_t calls_served() const override {
        std::lock_guard lock(mutex_);
        return served_;
    }
    double default_temperature() const override { return config_.default_temperature; }
    bool supports_concurrent_instances() const override { return true; }

private:
    std::string build_body(const ChatRequest& request) const {
        json messages = json::array();
        for (const auto& message : request.messages)
            messages.push_back({{"role", to_string(message.role)},
                                {"content", message.content}});
        json body{
            {"model", request.model_id.empty() ? config_.model_id : request.model_id},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
        };
        if (request.max_output_tokens) body["max_tokens"] = *request.max_output_tokens;
        if (request.request_seed) body["seed"] = *request.request_seed;
        return body.dump();
    }

    ChatResponse parse_reply(const HttpResult& result, std::uint64_t latency_ms) const {
        if (result.status != 200)
            throw MalformedProviderReply(fmt::format(
                "provider replied with status {}: {}", result.status,
                result.body.substr(0, 200)));
        json reply = json::parse(result.body, nullptr, false);
        if (reply.is_discarded())
            throw MalformedProviderReply("provider reply is not valid JSON");
        if (!reply.contains("choices") || !reply["choices"].is_array() ||
            reply["choices"].empty() || !reply["choices"][0].contains("message") ||
            !reply["choices"][0]["message"].contains("content"))
            throw MalformedProviderReply("provider reply lacks choices[0].message.content");
        ChatResponse response;
        response.content = reply["choices"][0]["message"]["content"].get<std::string>();
        response.backend_id = id();
        response.latency_ms = latency_ms;
        if (reply.contains("usage") && reply["usage"].is_object()) {
            const auto& usage = reply["usage"];
            if (usage.contains("prompt_tokens") && usage.contains("completion_tokens")) {
                TokenUsage tokens;
                tokens.prompt_tokens = usage["prompt_tokens"].get<std::size_t>();
                tokens.completion_tokens = usage["completion_tokens"].get<std::size_t>();
                response.reported_usage = tokens;
            }
        }
        return response;
    }

    BackendConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    RateLimiter::Clock clock_;
    RateLimiter::Sleeper sleeper_;
    std::unique_ptr<RateLimiter> limiter_;
    mutable std::mutex mutex_;
    std::size_t served_ = 0;
};

} // namespace

std::shared_ptr<HttpTransport> make_default_transport() {
    return std::make_shared<DefaultTransport>();
}

BackendHandle make_backend(const BackendConfig& config, const BackendHooks& hooks) {
    config.validate();
    switch (config.kind) {
    case BackendKind::http:
        return std::make_shared<HttpBackend>(config, hooks);
    case BackendKind::scripted: {
        Script script = config.inline_script ? *config.inline_script
                                             : Script::from_file(*config.source_path);
        return std::make_shared<ScriptedBackend>(std::move(script), config.model_id);
    }
    case BackendKind::replay:
        return std::make_shared<ReplayBackend>(*config.source_path, config.replay_agent,
                                               config.model_id);
    }
    throw Error("unreachable backend kind");
}

ChatResponse complete(const ChatRequest& request, const BackendConfig& config) {
    return make_backend(config)->complete(request);
}

} // namespace autoform
