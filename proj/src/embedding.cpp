#include "epicohort/embedding.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/text.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>

namespace epicohort {

using nlohmann::json;

double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

void normalize_in_place(Vector& v) {
    const double n = l2_norm(v);
    if (n == 0.0) return;
    for (double& x : v) x /= n;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::string HashingEmbedder::model_id() const { return "hashing-bow-" + std::to_string(dimension_); }

Vector HashingEmbedder::embed(std::string_view input) {
    if (text::trim(input).empty()) throw ProviderError("cannot embed empty text", false);
    Vector v(dimension_, 0.0);
    auto tokens = text::word_tokens(input);
    if (tokens.empty()) tokens.emplace_back(text::trim(input));
    for (const auto& t : tokens) v[text::fnv1a64(t) % dimension_] += 1.0;
    normalize_in_place(v);
    return v;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpProviderConfig cfg, std::size_t dimension)
    : cfg_(std::move(cfg)), dimension_(dimension) {
    if (cfg_.endpoint.empty()) throw ConfigError("http embedding provider needs an endpoint");
    if (cfg_.path == "/v1/chat/completions") cfg_.path = "/v1/embeddings";
}

Vector HttpEmbeddingProvider::embed(std::string_view input) {
    if (text::trim(input).empty()) throw ProviderError("cannot embed empty text", false);
    httplib::Client client(cfg_.endpoint);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!cfg_.credential_env.empty()) {
        const char* key = std::getenv(cfg_.credential_env.c_str());
        if (!key || !*key) throw ProviderError("credential variable " + cfg_.credential_env + " is not set", false);
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    json body{{"model", cfg_.model}, {"input", std::string(input)}};
    auto res = client.Post(cfg_.path, headers, body.dump(), "application/json");
    if (!res) throw ProviderError("embedding request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw ProviderError("embedding endpoint returned HTTP " + std::to_string(res->status));
    Vector v;
    try {
        v = json::parse(res->body).at("data").at(0).at("embedding").get<Vector>();
    } catch (const json::exception& ex) {
        throw ProviderError(std::string("unexpected embedding response: ") + ex.what(), false);
    }
    if (v.size() != dimension_) {
        throw ProviderError("embedding dimension " + std::to_string(v.size()) + " != configured " +
                                std::to_string(dimension_),
                            false);
    }
    normalize_in_place(v);
    return v;
}

}  // namespace epicohort
