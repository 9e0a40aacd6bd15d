#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace autoform {

enum class Role { system, user, assistant };

std::string to_string(Role role);
Role role_from_string(const std::string& s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct ChatRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::optional<std::uint32_t> max_output_tokens;
    std::optional<std::int64_t> request_seed;

    // Enforces: messages non-empty, first role system or user,
    // temperature within [0, 2]. Throws Error on violation.
    void validate() const;
};

struct TokenUsage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct ChatResponse {
    std::string content;
    std::optional<TokenUsage> reported_usage;
    std::string backend_id;
    std::uint64_t latency_ms = 0;
};

enum class BackendKind { http, scripted, replay };

enum class ExhaustionPolicy { error, repeat_last };

struct ScriptEntry {
    std::optional<std::string> match; // substring expected in the last user message
    std::string response;
};

struct Script {
    std::vector<ScriptEntry> entries;
    ExhaustionPolicy exhaustion_policy = ExhaustionPolicy::error;

    static Script from_json_text(const std::string& text);
    static Script from_file(const std::string& path);
    std::string to_json_text() const;
};

struct BackendConfig {
    BackendKind kind = BackendKind::scripted;
    std::string model_id;                     // model the backend answers as
    std::optional<std::string> endpoint_url;  // http only
    std::optional<std::string> api_key_env;   // http only: env var holding the key
    unsigned max_retries = 2;
    unsigned backoff_base_ms = 250;
    std::optional<unsigned> requests_per_minute;
    double default_temperature = 0.0;
    std::optional<std::string> source_path;     // scripted: script file; replay: transcript file
    std::optional<Script> inline_script;        // scripted: takes precedence over source_path
    std::optional<std::string> replay_agent;    // replay: serve only this agent's turns

    // Checks the kind-specific field requirements. Throws Error on violation.
    void validate() const;
};

// Uniform chat-completion interface. Implementations are safe to share
// across threads; scripted and replay backends serialize calls internally
// so ordinal consumption is totally ordered.
class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string id() const = 0;
    virtual std::string model_id() const = 0;
    // Number of completions served so far (test hook for call accounting).
    virtual std::size_t calls_served() const = 0;
    // Sampling temperature requests should carry unless overridden.
    virtual double default_temperature() const { return 0.0; }
    // Deterministic backends must consume their sources in call order, so
    // runs over them cannot fan out across workers.
    virtual bool supports_concurrent_instances() const { return false; }
};

using BackendHandle = std::shared_ptr<Backend>;

// Transport seam for the http backend so retry and rate-limit behavior can
// be exercised without sockets.
struct HttpResult {
    int status = 0;
    std::string body;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResult post(const std::string& url,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            const std::string& body) = 0;
};

std::shared_ptr<HttpTransport> make_default_transport();

// Sliding-window limiter: at most `per_minute` acquisitions in any 60 s
// window. Clock and sleep are injectable for tests.
class RateLimiter {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    RateLimiter(unsigned per_minute, Clock clock = nullptr, Sleeper sleeper = nullptr);
    void acquire();

private:
    unsigned per_minute_;
    Clock clock_;
    Sleeper sleeper_;
    std::mutex mutex_;
    std::vector<std::chrono::steady_clock::time_point> recent_;
};

struct BackendHooks {
    std::shared_ptr<HttpTransport> transport; // http only; default talks real HTTP
    RateLimiter::Clock clock;                 // default steady_clock
    RateLimiter::Sleeper sleeper;             // default this_thread::sleep_for
};

BackendHandle make_backend(const BackendConfig& config, const BackendHooks& hooks = {});

// One-shot convenience: builds a fresh backend from `config` and completes
// `request`. Scripted/replay state does not persist across calls; hold a
// BackendHandle when ordinal consumption matters.
ChatResponse complete(const ChatRequest& request, const BackendConfig& config);

} // namespace autoform
