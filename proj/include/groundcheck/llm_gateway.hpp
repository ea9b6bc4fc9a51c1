#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace groundcheck {

struct ChatRequest {
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    int sample_index = 0;
};

struct ChatResponse {
    std::string text;
    std::size_t input_token_count = 0;
    std::size_t output_token_count = 0;
};

struct ProviderConfig {
    std::string base_url;
    std::string model_name;
    std::string api_key_env_name;
    double timeout_seconds = 60.0;
    int max_retries = 3;
    int max_concurrent_requests = 4;
    int backoff_ms = 500;  ///< first retry delay; doubles per attempt
};

/// Stable key for a request: hash of both prompt texts and the sample index.
std::string request_fingerprint(const ChatRequest& request);

/// One outbound call. Implementations throw TransportError for failures worth
/// retrying and ProviderError for everything else.
class Provider {
public:
    virtual ~Provider() = default;
    /// `attempt` is 0 for the first try of a request, 1 for the first retry, ...
    virtual ChatResponse send(const ChatRequest& request, int attempt) = 0;
};

/// Retries, backoff and the in-flight cap around a provider. Thread-safe.
class Gateway {
public:
    Gateway(std::shared_ptr<Provider> provider, const ProviderConfig& config);

    ChatResponse complete(const ChatRequest& request);

    const ProviderConfig& config() const noexcept { return config_; }
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::shared_ptr<Provider> provider_;
    ProviderConfig config_;
    std::counting_semaphore<> slots_;
    std::atomic<std::size_t> calls_{0};
};

/// Chat-completions client over HTTP(S). The API key is read from the
/// configured environment variable at construction.
class HttpProvider : public Provider {
public:
    explicit HttpProvider(const ProviderConfig& config);
    ChatResponse send(const ChatRequest& request, int attempt) override;

private:
    ProviderConfig config_;
    std::string api_key_;
    std::string origin_;  ///< scheme://host[:port]
    std::string path_;    ///< base path + "/chat/completions"
};

/// What a scripted mock replies for one attempt.
struct MockReply {
    enum class Kind { Text, Transient, Status };
    Kind kind = Kind::Text;
    std::string text;
    int status = 0;

    static MockReply ok(std::string text) { return {Kind::Text, std::move(text), 0}; }
    static MockReply transient() { return {Kind::Transient, {}, 0}; }
    static MockReply http(int status, std::string body) { return {Kind::Status, std::move(body), status}; }
};

/// Deterministic provider driven either by a JSON script or by a callback.
///
/// Script format:
///   {"default": "text",
///    "latency_ms": 0,
///    "responses": {"<fingerprint>": reply | [reply, ...]},
///    "rules": [{"contains": "s" | ["s", ...], "sample_index": 0, "replies": [reply, ...]}]}
/// A reply is a string, {"text": ...}, {"error": "transient"} or
/// {"status": 503, "body": ...}. Reply lists are indexed by attempt and the
/// last entry repeats. Fingerprints are checked first, then rules in order.
class MockProvider : public Provider {
public:
    using Script = std::function<MockReply(const ChatRequest&, int attempt)>;

    explicit MockProvider(Script script, std::chrono::milliseconds latency = std::chrono::milliseconds(0));
    static std::shared_ptr<MockProvider> from_json(const nlohmann::json& script);
    static std::shared_ptr<MockProvider> from_file(const std::string& path);

    ChatResponse send(const ChatRequest& request, int attempt) override;

    /// Concurrency probe: highest number of simultaneous send() calls seen.
    std::size_t max_in_flight() const noexcept { return max_in_flight_.load(); }
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    Script script_;
    std::chrono::milliseconds latency_;
    std::atomic<std::size_t> in_flight_{0};
    std::atomic<std::size_t> max_in_flight_{0};
    std::atomic<std::size_t> calls_{0};
};

/// Builds the configured provider: "mock" (script path) or "http".
std::shared_ptr<Provider> make_provider(std::string_view kind, const ProviderConfig& config,
                                        const std::string& mock_script_path);

// ---------------------------------------------------------------------------
// Structured output

enum class JsonShape { Hypothesis, Claims, Entities, Groundedness };

struct StructuredValue {
    JsonShape shape = JsonShape::Hypothesis;
    std::string statement;           ///< Hypothesis
    std::vector<std::string> items;  ///< Claims, Entities
    bool grounded = false;           ///< Groundedness
};

/// Parses the first ```json fenced block of `text`, or failing that the first
/// top-level JSON object, and validates it against `shape`. Throws ParseError.
StructuredValue parse_json_block(std::string_view text, JsonShape shape);

/// Byte offset where the JSON payload used by parse_json_block starts, if any.
std::optional<std::size_t> json_block_offset(std::string_view text);

inline constexpr std::string_view kReprompt = "Your previous output was not valid JSON; output only the JSON.";

struct StructuredResult {
    std::optional<StructuredValue> value;  ///< empty after two unparseable replies
    std::string raw_text;                  ///< last reply
    int attempts = 0;
};

/// Completes and parses; on a parse failure re-asks once with kReprompt
/// appended to the user text. Transport and provider errors propagate.
StructuredResult complete_structured(Gateway& gateway, const ChatRequest& request, JsonShape shape);

}  // namespace groundcheck
