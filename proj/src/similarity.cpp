#include "kgt/similarity.hpp"

#include <cmath>
#include <mutex>
#include <semaphore>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kgt/text_util.hpp"

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace kgt {

using nlohmann::json;

double similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("embedding dimension mismatch: " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
    }
    double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        norm_a += a[i] * a[i];
        norm_b += b[i] * b[i];
    }
    if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
    double value = dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
    return std::clamp(value, -1.0, 1.0);
}

std::string canonical_node_text(const Node& node) {
    std::ostringstream out;
    bool first = true;
    for (const auto& [key, value] : node.attributes) {  // std::map: sorted keys
        if (!first) out << '\n';
        out << key << ": " << value;
        first = false;
    }
    return out.str();
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_batch(const std::vector<std::string>& texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

std::size_t HashedTokenEmbedder::bucket_of(const std::string& token) const {
    return static_cast<std::size_t>(fnv1a64(token) % dimension_);
}

EmbeddingVector HashedTokenEmbedder::embed(const std::string& text) const {
    EmbeddingVector v(dimension_, 0.0);
    for (const auto& token : tokenize_alnum(text)) v[bucket_of(token)] += 1.0;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

struct HttpEmbedder::State {
    explicit State(std::size_t max_in_flight) : gate(static_cast<std::ptrdiff_t>(max_in_flight)) {}
    std::counting_semaphore<> gate;
    mutable std::mutex mutex;
    std::size_t discovered_dimension = 0;
};

namespace {

std::optional<std::string> default_poster(const std::string& endpoint, const std::string& body,
                                          const std::string& auth_token) {
    auto split = endpoint.find('/', endpoint.find("//") == std::string::npos
                                        ? 0
                                        : endpoint.find("//") + 2);
    std::string host = split == std::string::npos ? endpoint : endpoint.substr(0, split);
    std::string path = split == std::string::npos ? "/" : endpoint.substr(split);

    httplib::Client client(host);
    client.set_read_timeout(60, 0);
    httplib::Headers headers;
    if (!auth_token.empty()) headers.emplace("Authorization", "Bearer " + auth_token);
    auto res = client.Post(path, headers, body, "application/json");
    if (!res || res->status != 200) return std::nullopt;
    return res->body;
}

}  // namespace

HttpEmbedder::HttpEmbedder(Config config, Poster poster)
    : config_(std::move(config)),
      poster_(poster ? std::move(poster) : default_poster),
      state_(std::make_shared<State>(config_.max_in_flight == 0 ? 1 : config_.max_in_flight)) {}

std::size_t HttpEmbedder::dimension() const {
    if (config_.dimension != 0) return config_.dimension;
    std::lock_guard lock(state_->mutex);
    return state_->discovered_dimension;
}

EmbeddingVector HttpEmbedder::embed(const std::string& text) const {
    return embed_batch({text}).front();
}

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(const std::vector<std::string>& texts) const {
    json request = {{"texts", texts}};

    state_->gate.acquire();
    std::optional<std::string> body;
    try {
        body = poster_(config_.endpoint, request.dump(), config_.auth_token);
    } catch (...) {
        state_->gate.release();
        throw;
    }
    state_->gate.release();

    if (!body.has_value()) {
        throw ProviderError("embedding provider transport failure (endpoint: " + config_.endpoint + ")");
    }

    json doc;
    try {
        doc = json::parse(*body);
    } catch (const json::parse_error& e) {
        throw ProviderError(std::string("embedding provider returned malformed JSON: ") + e.what());
    }
    if (!doc.contains("vectors") || !doc.at("vectors").is_array()) {
        throw ProviderError("embedding provider response lacks 'vectors'");
    }

    std::vector<EmbeddingVector> out;
    for (const auto& vec : doc.at("vectors")) {
        out.push_back(vec.get<EmbeddingVector>());
    }
    if (out.size() != texts.size()) {
        throw ProviderError("embedding provider returned " + std::to_string(out.size()) +
                            " vectors for " + std::to_string(texts.size()) + " texts");
    }

    std::lock_guard lock(state_->mutex);
    for (const auto& v : out) {
        std::size_t expect = config_.dimension != 0 ? config_.dimension : state_->discovered_dimension;
        if (expect == 0) {
            state_->discovered_dimension = v.size();
        } else if (v.size() != expect) {
            throw ProviderError("embedding provider dimension changed: expected " +
                                std::to_string(expect) + ", got " + std::to_string(v.size()));
        }
    }
    return out;
}

}  // namespace kgt
