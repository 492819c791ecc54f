#pragma once

#include <json.hpp>

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace epicohort {

struct Message {
    std::string role;  // "system", "user", "assistant"
    std::string text;

    bool operator==(const Message&) const = default;
};

struct SamplingParams {
    double temperature = 0.0;
    std::optional<double> top_p;
    int max_tokens = 4096;
};

struct LlmRequest {
    std::vector<Message> messages;
    SamplingParams params;
};

// Stable hex fingerprint of the request messages (roles and texts).
std::string request_fingerprint(const LlmRequest& request);

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    // Throws ProviderError.
    virtual std::string complete(const LlmRequest& request) = 0;
    virtual std::string name() const = 0;
};

// Replays canned responses from a transcript. Each transcript entry is one of
//   {"fingerprint": "<hex>", "response": "..."}  matched on request_fingerprint
//   {"match": "<substring>", "response": "..."}  matched against the last
//                                                user message, reusable
//   {"response": "..."}                          consumed in ordinal order
// Lookup order is fingerprint, then match, then the next ordinal entry.
class MockLlmProvider : public LlmProvider {
public:
    struct Entry {
        std::optional<std::string> fingerprint;
        std::optional<std::string> match;
        std::string response;
    };

    explicit MockLlmProvider(std::vector<Entry> entries);
    static std::unique_ptr<MockLlmProvider> from_json(const nlohmann::json& transcript);
    static std::unique_ptr<MockLlmProvider> from_file(const std::string& path);

    std::string complete(const LlmRequest& request) override;
    std::string name() const override { return "mock"; }

    std::vector<LlmRequest> requests() const;
    std::size_t call_count() const;

private:
    mutable std::mutex mu_;
    std::vector<Entry> entries_;
    std::vector<bool> consumed_;
    std::vector<LlmRequest> requests_;
};

// Wraps a callable; convenient for scripted tests.
class FunctionLlmProvider : public LlmProvider {
public:
    using Fn = std::function<std::string(const LlmRequest&)>;
    explicit FunctionLlmProvider(Fn fn, std::string name = "function")
        : fn_(std::move(fn)), name_(std::move(name)) {}
    std::string complete(const LlmRequest& request) override;
    std::string name() const override { return name_; }

private:
    Fn fn_;
    std::string name_;
};

struct HttpProviderConfig {
    std::string model;
    std::string endpoint;        // base URL, e.g. https://api.example.com
    std::string path = "/v1/chat/completions";
    std::string credential_env;  // name of the env var holding the API key
    int timeout_seconds = 120;
};

// OpenAI-compatible chat-completions client.
class HttpLlmProvider : public LlmProvider {
public:
    explicit HttpLlmProvider(HttpProviderConfig cfg);
    std::string complete(const LlmRequest& request) override;
    std::string name() const override { return "http:" + cfg_.model; }

    static nlohmann::json build_body(const std::string& model, const LlmRequest& request);
    // Extracts choices[0].message.content; throws ProviderError otherwise.
    static std::string parse_response(const std::string& body);

private:
    HttpProviderConfig cfg_;
};

}  // namespace epicohort
