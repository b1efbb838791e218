#include <doctest.h>

#include <atomic>

#include "kgt/providers.hpp"

using namespace kgt;
using nlohmann::json;

namespace {

std::string chat_body(const std::string& content, int prompt_tokens, int completion_tokens) {
    json doc = {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})},
                {"usage",
                 {{"prompt_tokens", prompt_tokens}, {"completion_tokens", completion_tokens}}}};
    return doc.dump();
}

}  // namespace

TEST_CASE("http chat provider parses content and token usage") {
    ChatConfig config;
    config.endpoint = "http://chat.local/v1/chat/completions";
    config.initial_backoff = std::chrono::milliseconds(0);

    std::string seen_body;
    HttpChatProvider provider(config, [&](const std::string& endpoint, const std::string& body,
                                          const std::string&) -> std::optional<HttpResponse> {
        seen_body = body;
        CHECK(endpoint == "http://chat.local/v1/chat/completions");
        return HttpResponse{200, chat_body("forty two", 120, 7)};
    });

    auto completion = provider.complete("what is the answer?");
    CHECK(completion.text == "forty two");
    CHECK(completion.usage.input == 120);
    CHECK(completion.usage.output == 7);

    auto request = json::parse(seen_body);
    CHECK(request.at("model") == "gpt-4");
    CHECK(request.at("temperature") == 0.0);
    CHECK(request.at("messages")[0].at("content") == "what is the answer?");
}

TEST_CASE("http chat provider retries transport failures with backoff, then succeeds") {
    ChatConfig config;
    config.endpoint = "http://chat.local/v1";
    config.transport_retries = 3;
    config.initial_backoff = std::chrono::milliseconds(1);

    std::atomic<int> calls{0};
    HttpChatProvider provider(config, [&](const std::string&, const std::string&,
                                          const std::string&) -> std::optional<HttpResponse> {
        if (++calls < 3) return std::nullopt;
        return HttpResponse{200, chat_body("ok", 1, 1)};
    });
    CHECK(provider.complete("x").text == "ok");
    CHECK(calls == 3);
}

TEST_CASE("http chat provider surfaces permanent failures") {
    ChatConfig config;
    config.endpoint = "http://chat.local/v1";
    config.transport_retries = 2;
    config.initial_backoff = std::chrono::milliseconds(0);

    HttpChatProvider dead(config, [](const std::string&, const std::string&,
                                     const std::string&) -> std::optional<HttpResponse> {
        return std::nullopt;
    });
    CHECK_THROWS_AS(dead.complete("x"), ProviderError);

    HttpChatProvider denied(config, [](const std::string&, const std::string&,
                                       const std::string&) -> std::optional<HttpResponse> {
        return HttpResponse{401, "unauthorized"};
    });
    CHECK_THROWS_WITH_AS(denied.complete("x"), doctest::Contains("401"), ProviderError);

    HttpChatProvider garbled(config, [](const std::string&, const std::string&,
                                        const std::string&) -> std::optional<HttpResponse> {
        return HttpResponse{200, "not json"};
    });
    CHECK_THROWS_AS(garbled.complete("x"), ProviderError);
}

TEST_CASE("http chat provider sends the bearer token when configured") {
    ChatConfig config;
    config.endpoint = "http://chat.local/v1";
    config.auth_token = "secret-token";
    std::string seen_token;
    HttpChatProvider provider(config, [&](const std::string&, const std::string&,
                                          const std::string& token) -> std::optional<HttpResponse> {
        seen_token = token;
        return HttpResponse{200, chat_body("ok", 1, 1)};
    });
    provider.complete("x");
    CHECK(seen_token == "secret-token");
}

TEST_CASE("scripted provider replays its script and then repeats the last response") {
    ScriptedChatProvider provider({"first", "second"});
    CHECK(provider.complete("p1").text == "first");
    CHECK(provider.complete("p2").text == "second");
    CHECK(provider.complete("p3").text == "second");
    CHECK(provider.call_count() == 3);
    CHECK(provider.prompts() == std::vector<std::string>{"p1", "p2", "p3"});

    CHECK_THROWS_AS(ScriptedChatProvider({}), std::invalid_argument);
}

TEST_CASE("echo answer provider returns exactly the context section") {
    std::string prompt =
        "Answer the question using only the retrieved graph context below.\n\nContext:\n"
        "[(author) A1]\nname: Mira Chen\n\nQuestion: who?\nAnswer:";
    EchoAnswerProvider provider;
    CHECK(provider.complete(prompt).text == "[(author) A1]\nname: Mira Chen");

    // No markers: fall back to echoing the whole prompt.
    CHECK(provider.complete("plain").text == "plain");
}
