#include "epicohort/llm.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/text.hpp"

#include <httplib.h>

#include <cstdlib>

namespace epicohort {

using nlohmann::json;

std::string request_fingerprint(const LlmRequest& request) {
    std::string buf;
    for (const auto& m : request.messages) {
        buf += m.role;
        buf += '\x1f';
        buf += m.text;
        buf += '\x1e';
    }
    return text::hex64(text::fnv1a64(buf));
}

MockLlmProvider::MockLlmProvider(std::vector<Entry> entries)
    : entries_(std::move(entries)), consumed_(entries_.size(), false) {}

std::unique_ptr<MockLlmProvider> MockLlmProvider::from_json(const json& transcript) {
    const json* list = &transcript;
    if (transcript.is_object()) {
        if (!transcript.contains("responses")) throw ConfigError("transcript has no 'responses' array");
        list = &transcript["responses"];
    }
    if (!list->is_array()) throw ConfigError("transcript responses must be an array");
    std::vector<Entry> entries;
    for (const auto& item : *list) {
        Entry e;
        if (item.is_string()) {
            e.response = item.get<std::string>();
        } else if (item.is_object() && item.contains("response") && item["response"].is_string()) {
            e.response = item["response"].get<std::string>();
            if (item.contains("fingerprint")) e.fingerprint = item["fingerprint"].get<std::string>();
            if (item.contains("match")) e.match = item["match"].get<std::string>();
        } else {
            throw ConfigError("transcript entry needs a string 'response'");
        }
        entries.push_back(std::move(e));
    }
    return std::make_unique<MockLlmProvider>(std::move(entries));
}

std::unique_ptr<MockLlmProvider> MockLlmProvider::from_file(const std::string& path) {
    try {
        return from_json(json::parse(text::read_file(path)));
    } catch (const json::exception& ex) {
        throw ConfigError("transcript " + path + ": " + ex.what());
    }
}

std::string MockLlmProvider::complete(const LlmRequest& request) {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
    const std::string fp = request_fingerprint(request);
    for (const auto& e : entries_) {
        if (e.fingerprint && *e.fingerprint == fp) return e.response;
    }
    std::string last_user;
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->role == "user") {
            last_user = it->text;
            break;
        }
    }
    for (const auto& e : entries_) {
        if (!e.fingerprint && e.match && last_user.find(*e.match) != std::string::npos) return e.response;
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!entries_[i].fingerprint && !entries_[i].match && !consumed_[i]) {
            consumed_[i] = true;
            return entries_[i].response;
        }
    }
    throw ProviderError("mock transcript has no response for request " + fp, false);
}

std::vector<LlmRequest> MockLlmProvider::requests() const {
    std::lock_guard lock(mu_);
    return requests_;
}

std::size_t MockLlmProvider::call_count() const {
    std::lock_guard lock(mu_);
    return requests_.size();
}

std::string FunctionLlmProvider::complete(const LlmRequest& request) { return fn_(request); }

HttpLlmProvider::HttpLlmProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty()) throw ConfigError("http LLM provider needs an endpoint");
    if (cfg_.model.empty()) throw ConfigError("http LLM provider needs a model identifier");
}

json HttpLlmProvider::build_body(const std::string& model, const LlmRequest& request) {
    json body;
    body["model"] = model;
    body["temperature"] = request.params.temperature;
    if (request.params.top_p) body["top_p"] = *request.params.top_p;
    body["max_tokens"] = request.params.max_tokens;
    body["messages"] = json::array();
    for (const auto& m : request.messages) body["messages"].push_back({{"role", m.role}, {"content", m.text}});
    return body;
}

std::string HttpLlmProvider::parse_response(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& ex) {
        throw ProviderError(std::string("unexpected LLM response shape: ") + ex.what(), false);
    }
}

namespace {

httplib::Headers auth_headers(const std::string& env_name) {
    httplib::Headers headers;
    if (!env_name.empty()) {
        const char* key = std::getenv(env_name.c_str());
        if (!key || !*key) throw ProviderError("credential variable " + env_name + " is not set", false);
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    return headers;
}

}  // namespace

std::string HttpLlmProvider::complete(const LlmRequest& request) {
    httplib::Client client(cfg_.endpoint);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    client.set_connection_timeout(30, 0);
    const auto body = build_body(cfg_.model, request).dump();
    auto res = client.Post(cfg_.path, auth_headers(cfg_.credential_env), body, "application/json");
    if (!res) throw ProviderError("LLM request failed: " + httplib::to_string(res.error()));
    if (res->status >= 500 || res->status == 429) {
        throw ProviderError("LLM endpoint returned HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw ProviderError("LLM endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body, false);
    }
    return parse_response(res->body);
}

}  // namespace epicohort
