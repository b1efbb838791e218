#include <doctest.h>

#include <cmath>
#include <random>

#include "kgt/similarity.hpp"

using namespace kgt;

TEST_CASE("embed is deterministic and handles empty text") {
    HashedTokenEmbedder provider;
    auto a = provider.embed("graph wavelets on manifolds");
    auto b = provider.embed("graph wavelets on manifolds");
    CHECK(a == b);

    auto zero = provider.embed("");
    CHECK(zero.size() == provider.dimension());
    for (double x : zero) CHECK(x == 0.0);
}

TEST_CASE("embed: disjoint token sets with verified disjoint buckets score zero") {
    HashedTokenEmbedder provider;
    std::string left = "alpha beta gamma";
    std::string right = "delta epsilon zeta";
    // The derivation needs genuinely disjoint buckets, not just disjoint tokens.
    std::set<std::size_t> left_buckets, right_buckets;
    for (const auto& t : {"alpha", "beta", "gamma"}) left_buckets.insert(provider.bucket_of(t));
    for (const auto& t : {"delta", "epsilon", "zeta"}) right_buckets.insert(provider.bucket_of(t));
    for (auto b : right_buckets) REQUIRE(left_buckets.count(b) == 0);

    CHECK(similarity(provider.embed(left), provider.embed(right)) == 0.0);
}

TEST_CASE("similarity: identity, orthogonal, hand-computed") {
    HashedTokenEmbedder provider;
    auto x = provider.embed("spectral graph theory");
    CHECK(similarity(x, x) == doctest::Approx(1.0).epsilon(1e-9));

    CHECK(similarity({1.0, 0.0}, {0.0, 1.0}) == 0.0);

    double r = std::sqrt(2.0) / 2.0;
    CHECK(similarity({1.0, 0.0}, {r, r}) == doctest::Approx(0.7071).epsilon(1e-4));
}

TEST_CASE("similarity: zero vector yields zero; mismatched dimensions throw") {
    CHECK(similarity({0.0, 0.0}, {1.0, 2.0}) == 0.0);
    CHECK_THROWS_AS(similarity({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("property: symmetry, scale invariance, range") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t dim = 1 + rng() % 8;
        EmbeddingVector a(dim), b(dim);
        for (auto& x : a) x = dist(rng);
        for (auto& x : b) x = dist(rng);

        double ab = similarity(a, b);
        CHECK(ab == similarity(b, a));  // exact symmetry
        CHECK(ab >= -1.0);
        CHECK(ab <= 1.0);

        double c = 0.25 + (rng() % 100) / 10.0;
        EmbeddingVector scaled = a;
        for (auto& x : scaled) x *= c;
        CHECK(similarity(scaled, b) == doctest::Approx(ab).epsilon(1e-9));
    }
}

TEST_CASE("canonical node text: sorted keys, key: value lines") {
    Node n{"p1", "paper", {{"year", "2020"}, {"title", "Flows"}}};
    CHECK(canonical_node_text(n) == "title: Flows\nyear: 2020");
    CHECK(canonical_node_text({"x", "paper", {}}).empty());
}

TEST_CASE("http embedder parses vectors and enforces the contract") {
    auto respond = [](const std::string& body_json) {
        return [body_json](const std::string&, const std::string&,
                           const std::string&) -> std::optional<std::string> { return body_json; };
    };

    HttpEmbedder::Config config;
    config.endpoint = "http://embed.local/v1";

    HttpEmbedder ok(config, respond(R"({"vectors": [[1.0, 0.0], [0.0, 2.0]]})"));
    auto vectors = ok.embed_batch({"a", "b"});
    REQUIRE(vectors.size() == 2);
    CHECK(vectors[0] == EmbeddingVector{1.0, 0.0});
    CHECK(ok.dimension() == 2);  // adopted from the first response

    HttpEmbedder wrong_count(config, respond(R"({"vectors": [[1.0]]})"));
    CHECK_THROWS_AS(wrong_count.embed_batch({"a", "b"}), ProviderError);

    HttpEmbedder down(config,
                      [](const std::string&, const std::string&,
                         const std::string&) -> std::optional<std::string> { return std::nullopt; });
    CHECK_THROWS_AS(down.embed("a"), ProviderError);

    HttpEmbedder garbage(config, respond("not json"));
    CHECK_THROWS_AS(garbage.embed("a"), ProviderError);
}
