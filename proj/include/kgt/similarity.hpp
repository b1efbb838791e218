#pragma once
// Embedding providers and the cosine similarity used by node finding.
// The built-in provider is a hashed bag-of-tokens vector so the whole
// pipeline runs offline and deterministically.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kgt/graph.hpp"

namespace kgt {

using EmbeddingVector = std::vector<double>;

struct SimilarityConfig {
    double theta = 0.5;        // similarity threshold
    std::size_t top_k = 5;     // result cap, best scores first
    std::string provider = "hashed";
};

class ProviderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Cosine similarity in [-1, 1]; 0 when either vector is all-zero.
// Throws std::invalid_argument on dimension mismatch.
double similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Canonical text for attr(v): "key: value" lines in sorted key order.
std::string canonical_node_text(const Node& node);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dimension() const = 0;
    virtual EmbeddingVector embed(const std::string& text) const = 0;
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const;
};

// Token-frequency vector over FNV-1a hash buckets, L2-normalized.
class HashedTokenEmbedder final : public EmbeddingProvider {
public:
    explicit HashedTokenEmbedder(std::size_t dimension = 4096) : dimension_(dimension) {}

    std::size_t dimension() const override { return dimension_; }
    EmbeddingVector embed(const std::string& text) const override;

    std::size_t bucket_of(const std::string& token) const;

private:
    std::size_t dimension_;
};

// POST {"texts": [...]} -> {"vectors": [[...]]}. The transport is injectable
// so tests run without a live endpoint; a semaphore bounds in-flight calls.
class HttpEmbedder final : public EmbeddingProvider {
public:
    struct Config {
        std::string endpoint;              // e.g. http://host:port/embed
        std::string auth_token;
        std::size_t dimension = 0;         // 0: adopt the first response's dimension
        std::size_t max_in_flight = 4;
    };

    // Returns the response body or nullopt on transport failure.
    using Poster = std::function<std::optional<std::string>(const std::string& endpoint,
                                                            const std::string& body,
                                                            const std::string& auth_token)>;

    explicit HttpEmbedder(Config config, Poster poster = nullptr);

    std::size_t dimension() const override;
    EmbeddingVector embed(const std::string& text) const override;
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const override;

private:
    struct State;
    Config config_;
    Poster poster_;
    std::shared_ptr<State> state_;
};

}  // namespace kgt
