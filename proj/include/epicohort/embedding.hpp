#pragma once

#include "epicohort/llm.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace epicohort {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
// Cosine similarity; 0 when either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);
void normalize_in_place(Vector& v);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    // Returns an L2-normalized vector of dimension(). Throws ProviderError.
    virtual Vector embed(std::string_view text) = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string model_id() const = 0;
};

// Deterministic offline embedder: bag of lowercase word tokens hashed into a
// fixed number of buckets, L2-normalized. Pure and thread-safe.
class HashingEmbedder : public EmbeddingProvider {
public:
    static constexpr std::size_t kDefaultDimension = 256;

    explicit HashingEmbedder(std::size_t dimension = kDefaultDimension);
    Vector embed(std::string_view text) override;
    std::size_t dimension() const override { return dimension_; }
    std::string model_id() const override;

private:
    std::size_t dimension_;
};

// Reference model identifier for the remote embedding provider.
inline constexpr const char* kReferenceEmbeddingModel = "BAAI/bge-large-en-v1.5";

// OpenAI-compatible /v1/embeddings client.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(HttpProviderConfig cfg, std::size_t dimension);
    Vector embed(std::string_view text) override;
    std::size_t dimension() const override { return dimension_; }
    std::string model_id() const override { return cfg_.model; }

private:
    HttpProviderConfig cfg_;
    std::size_t dimension_;
};

}  // namespace epicohort
