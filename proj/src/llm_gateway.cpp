#include "groundcheck/llm_gateway.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <thread>

#include "groundcheck/errors.hpp"
#include "groundcheck/hashing.hpp"

namespace groundcheck {

using nlohmann::json;

namespace {

std::size_t rough_tokens(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (const unsigned char c : s) {
        const bool space = std::isspace(c) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

std::string excerpt(std::string_view body) {
    return std::string(body.substr(0, 200));
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

std::string request_fingerprint(const ChatRequest& request) {
    std::string key = request.system_text;
    key += '\x1f';
    key += request.user_text;
    key += '\x1f';
    key += std::to_string(request.sample_index);
    return sha256_hex(key);
}

// --- Gateway ---------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<Provider> provider, const ProviderConfig& config)
    : provider_(std::move(provider)), config_(config), slots_(std::max(1, config.max_concurrent_requests)) {
    if (!provider_) throw PreconditionError("gateway needs a provider");
    if (config.max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (config.max_concurrent_requests < 1) throw ConfigError("max_concurrent_requests must be >= 1");
}

ChatResponse Gateway::complete(const ChatRequest& request) {
    if (request.user_text.empty()) throw PreconditionError("chat request has empty user text");
    if (request.temperature < 0.0 || request.temperature > 2.0) throw PreconditionError("temperature outside [0, 2]");
    if (request.max_output_tokens < 1) throw PreconditionError("max_output_tokens must be positive");

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0 && config_.backoff_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms) * (1LL << std::min(attempt - 1, 16)));
        }
        slots_.acquire();
        try {
            ++calls_;
            auto response = provider_->send(request, attempt);
            slots_.release();
            return response;
        } catch (const TransportError& e) {
            slots_.release();
            last_error = e.what();
        } catch (...) {
            slots_.release();
            throw;
        }
    }
    throw TransportError("request failed after " + std::to_string(config_.max_retries + 1) +
                         " attempts: " + last_error);
}

// --- HTTP provider ---------------------------------------------------------

HttpProvider::HttpProvider(const ProviderConfig& config) : config_(config) {
    if (config.api_key_env_name.empty()) throw ConfigError("provider.api_key_env is not set");
    const char* key = std::getenv(config.api_key_env_name.c_str());
    if (key == nullptr || *key == '\0') {
        throw ConfigError("environment variable " + config.api_key_env_name + " is not set");
    }
    api_key_ = key;

    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config.base_url, m, url)) throw ConfigError("bad provider base_url: " + config.base_url);
    origin_ = m[1].str();
    std::string base = m[2].str();
    while (!base.empty() && base.back() == '/') base.pop_back();
    path_ = base + "/chat/completions";
}

ChatResponse HttpProvider::send(const ChatRequest& request, int) {
    json messages = json::array();
    if (!request.system_text.empty()) messages.push_back({{"role", "system"}, {"content", request.system_text}});
    messages.push_back({{"role", "user"}, {"content", request.user_text}});
    const json body{{"model", config_.model_name},
                    {"messages", messages},
                    {"temperature", request.temperature},
                    {"max_tokens", request.max_output_tokens}};

    httplib::Client client(origin_);
    const auto timeout = std::chrono::milliseconds(static_cast<long long>(config_.timeout_seconds * 1000));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    client.set_bearer_token_auth(api_key_);

    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) throw TransportError("HTTP request failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
        if (retryable_status(res->status)) {
            throw TransportError("HTTP " + std::to_string(res->status) + ": " + excerpt(res->body));
        }
        throw ProviderError(res->status, excerpt(res->body));
    }

    try {
        const auto reply = json::parse(res->body);
        ChatResponse out;
        out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        if (const auto u = reply.find("usage"); u != reply.end() && u->is_object()) {
            out.input_token_count = u->value("prompt_tokens", std::size_t{0});
            out.output_token_count = u->value("completion_tokens", std::size_t{0});
        }
        return out;
    } catch (const json::exception&) {
        throw ProviderError(res->status, "unreadable completion body: " + excerpt(res->body));
    }
}

// --- Mock provider ---------------------------------------------------------

MockProvider::MockProvider(Script script, std::chrono::milliseconds latency)
    : script_(std::move(script)), latency_(latency) {}

ChatResponse MockProvider::send(const ChatRequest& request, int attempt) {
    const auto now = ++in_flight_;
    auto seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    ++calls_;
    struct Leave {
        std::atomic<std::size_t>& n;
        ~Leave() { --n; }
    } leave{in_flight_};

    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
    const auto reply = script_(request, attempt);
    switch (reply.kind) {
        case MockReply::Kind::Transient:
            throw TransportError("scripted transient failure");
        case MockReply::Kind::Status:
            if (retryable_status(reply.status)) {
                throw TransportError("HTTP " + std::to_string(reply.status) + ": " + excerpt(reply.text));
            }
            throw ProviderError(reply.status, excerpt(reply.text));
        case MockReply::Kind::Text:
            break;
    }
    return {reply.text, rough_tokens(request.system_text) + rough_tokens(request.user_text), rough_tokens(reply.text)};
}

namespace {

MockReply parse_reply(const json& j) {
    if (j.is_string()) return MockReply::ok(j.get<std::string>());
    if (!j.is_object()) throw ConfigError("mock reply must be a string or an object");
    if (j.contains("text")) return MockReply::ok(j.at("text").get<std::string>());
    if (j.contains("error")) return MockReply::transient();
    if (j.contains("status")) return MockReply::http(j.at("status").get<int>(), j.value("body", std::string()));
    throw ConfigError("mock reply object needs text, error or status");
}

std::vector<MockReply> parse_replies(const json& j) {
    std::vector<MockReply> out;
    if (j.is_array()) {
        for (const auto& r : j) out.push_back(parse_reply(r));
    } else {
        out.push_back(parse_reply(j));
    }
    if (out.empty()) throw ConfigError("mock reply list is empty");
    return out;
}

struct MockRule {
    std::vector<std::string> contains;
    std::optional<int> sample_index;
    std::vector<MockReply> replies;
};

const MockReply& pick(const std::vector<MockReply>& replies, int attempt) {
    return replies[std::min<std::size_t>(static_cast<std::size_t>(attempt), replies.size() - 1)];
}

}  // namespace

std::shared_ptr<MockProvider> MockProvider::from_json(const json& script) {
    if (!script.is_object()) throw ConfigError("mock script must be a JSON object");
    try {
        std::optional<MockReply> fallback;
        if (script.contains("default") && !script.at("default").is_null()) fallback = parse_reply(script.at("default"));
        std::map<std::string, std::vector<MockReply>> by_fingerprint;
        if (script.contains("responses")) {
            for (const auto& [fp, r] : script.at("responses").items()) by_fingerprint[fp] = parse_replies(r);
        }
        std::vector<MockRule> rules;
        if (script.contains("rules")) {
            for (const auto& r : script.at("rules")) {
                MockRule rule;
                const auto& c = r.at("contains");
                if (c.is_string()) {
                    rule.contains.push_back(c.get<std::string>());
                } else {
                    for (const auto& s : c) rule.contains.push_back(s.get<std::string>());
                }
                if (r.contains("sample_index")) rule.sample_index = r.at("sample_index").get<int>();
                rule.replies = parse_replies(r.contains("replies") ? r.at("replies") : r.at("reply"));
                rules.push_back(std::move(rule));
            }
        }
        const auto latency = std::chrono::milliseconds(script.value("latency_ms", 0));

        auto fn = [fallback, by_fingerprint = std::move(by_fingerprint), rules = std::move(rules)](
                      const ChatRequest& req, int attempt) -> MockReply {
            if (!by_fingerprint.empty()) {
                if (const auto it = by_fingerprint.find(request_fingerprint(req)); it != by_fingerprint.end()) {
                    return pick(it->second, attempt);
                }
            }
            for (const auto& rule : rules) {
                if (rule.sample_index && *rule.sample_index != req.sample_index) continue;
                const bool all = std::all_of(rule.contains.begin(), rule.contains.end(), [&](const std::string& s) {
                    return req.user_text.find(s) != std::string::npos || req.system_text.find(s) != std::string::npos;
                });
                if (all) return pick(rule.replies, attempt);
            }
            if (fallback) return *fallback;
            return MockReply::http(404, "no scripted reply for request " + request_fingerprint(req));
        };
        return std::make_shared<MockProvider>(std::move(fn), latency);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad mock script: ") + e.what());
    }
}

std::shared_ptr<MockProvider> MockProvider::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock script " + path);
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("mock script " + path + " is not valid JSON: " + e.what());
    }
}

std::shared_ptr<Provider> make_provider(std::string_view kind, const ProviderConfig& config,
                                        const std::string& mock_script_path) {
    if (kind == "mock") return MockProvider::from_file(mock_script_path);
    if (kind == "http") return std::make_shared<HttpProvider>(config);
    throw ConfigError("unknown provider kind: " + std::string(kind));
}

// --- Structured output -----------------------------------------------------

namespace {

std::string lowered(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

/// Index one past the brace closing the object opened at `open`, or npos.
std::size_t match_brace(std::string_view text, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i + 1;
    }
    return std::string_view::npos;
}

struct Located {
    std::size_t offset;
    std::string_view payload;
    bool fenced;
};

std::optional<Located> locate(std::string_view text) {
    const auto low = lowered(text);
    if (const auto fence = low.find("```json"); fence != std::string::npos) {
        const auto start = fence + 7;
        const auto end = text.find("```", start);
        const auto stop = end == std::string_view::npos ? text.size() : end;
        return Located{fence, text.substr(start, stop - start), true};
    }
    for (auto open = text.find('{'); open != std::string_view::npos; open = text.find('{', open)) {
        const auto close = match_brace(text, open);
        if (close == std::string_view::npos) break;
        const auto candidate = text.substr(open, close - open);
        if (json::accept(candidate)) return Located{open, candidate, false};
        open = close;
    }
    return std::nullopt;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> string_list(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) throw ParseError(std::string("expected an array field \"") + key + "\"");
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) throw ParseError(std::string("non-string entry in \"") + key + "\"");
        auto s = trim(v.get<std::string>());
        if (!s.empty()) out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

std::optional<std::size_t> json_block_offset(std::string_view text) {
    const auto found = locate(text);
    if (!found) return std::nullopt;
    return found->offset;
}

StructuredValue parse_json_block(std::string_view text, JsonShape shape) {
    const auto found = locate(text);
    if (!found) throw ParseError("no JSON block in model output");
    json obj;
    try {
        obj = json::parse(found->payload);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("fenced JSON block does not parse: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError("JSON block is not an object");

    StructuredValue out;
    out.shape = shape;
    switch (shape) {
        case JsonShape::Hypothesis: {
            const auto it = obj.find("proposed_hypothesis");
            if (it == obj.end() || !it->is_string()) throw ParseError("expected a string \"proposed_hypothesis\"");
            out.statement = trim(it->get<std::string>());
            if (out.statement.empty()) throw ParseError("empty \"proposed_hypothesis\"");
            break;
        }
        case JsonShape::Claims:
            out.items = string_list(obj, "claims");
            break;
        case JsonShape::Entities:
            out.items = string_list(obj, "entities");
            break;
        case JsonShape::Groundedness: {
            const auto it = obj.find("groundedness");
            if (it == obj.end()) throw ParseError("expected a \"groundedness\" field");
            if (it->is_boolean()) {
                out.grounded = it->get<bool>();
            } else if (it->is_number_integer() && (*it == 0 || *it == 1)) {
                out.grounded = *it == 1;
            } else {
                throw ParseError("\"groundedness\" must be 0 or 1");
            }
            break;
        }
    }
    return out;
}

StructuredResult complete_structured(Gateway& gateway, const ChatRequest& request, JsonShape shape) {
    StructuredResult result;
    ChatRequest req = request;
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) req.user_text = request.user_text + "\n\n" + std::string(kReprompt);
        result.raw_text = gateway.complete(req).text;
        result.attempts = attempt + 1;
        try {
            result.value = parse_json_block(result.raw_text, shape);
            return result;
        } catch (const ParseError&) {
        }
    }
    return result;
}

}  // namespace groundcheck
