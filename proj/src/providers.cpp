#include "kgt/providers.hpp"

#include <thread>

#include <nlohmann/json.hpp>

#include "kgt/text_util.hpp"

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace kgt {

using nlohmann::json;

namespace {

std::optional<HttpResponse> default_poster(const std::string& endpoint, const std::string& body,
                                           const std::string& auth_token) {
    auto scheme_end = endpoint.find("//");
    auto path_start = endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 2);
    std::string host = path_start == std::string::npos ? endpoint : endpoint.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);

    httplib::Client client(host);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!auth_token.empty()) headers.emplace("Authorization", "Bearer " + auth_token);
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) return std::nullopt;
    return HttpResponse{res->status, res->body};
}

}  // namespace

HttpChatProvider::HttpChatProvider(ChatConfig config, Poster poster)
    : config_(std::move(config)), poster_(poster ? std::move(poster) : default_poster) {}

Completion HttpChatProvider::complete(const std::string& prompt) {
    json request = {{"model", config_.model},
                    {"temperature", config_.temperature},
                    {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
    const std::string body = request.dump();

    std::optional<HttpResponse> response;
    auto backoff = config_.initial_backoff;
    int attempts = std::max(1, config_.transport_retries);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        response = poster_(config_.endpoint, body, config_.auth_token);
        if (response.has_value() && response->status == 200) break;
        if (attempt < attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    if (!response.has_value()) {
        throw ProviderError("chat provider transport failure after " + std::to_string(attempts) +
                            " attempts (endpoint: " + config_.endpoint + ")");
    }
    if (response->status != 200) {
        throw ProviderError("chat provider returned HTTP " + std::to_string(response->status) + ": " +
                            response->body.substr(0, 200));
    }

    json doc;
    try {
        doc = json::parse(response->body);
    } catch (const json::parse_error& e) {
        throw ProviderError(std::string("chat provider returned malformed JSON: ") + e.what());
    }

    Completion out;
    try {
        out.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("chat provider response lacks choices[0].message.content: ") +
                            e.what());
    }
    if (doc.contains("usage")) {
        const auto& usage = doc.at("usage");
        out.usage.input = usage.value("prompt_tokens", std::int64_t{0});
        out.usage.output = usage.value("completion_tokens", std::int64_t{0});
    }
    return out;
}

ScriptedChatProvider::ScriptedChatProvider(std::vector<std::string> responses)
    : responses_(std::move(responses)) {
    if (responses_.empty()) throw std::invalid_argument("scripted provider needs at least one response");
}

Completion ScriptedChatProvider::complete(const std::string& prompt) {
    std::lock_guard lock(mutex_);
    prompts_.push_back(prompt);
    const std::string& text = responses_[std::min(next_, responses_.size() - 1)];
    ++next_;
    Completion out;
    out.text = text;
    out.usage.input = static_cast<std::int64_t>(estimate_tokens(prompt));
    out.usage.output = static_cast<std::int64_t>(estimate_tokens(text));
    return out;
}

int ScriptedChatProvider::call_count() const {
    std::lock_guard lock(mutex_);
    return static_cast<int>(prompts_.size());
}

std::vector<std::string> ScriptedChatProvider::prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
}

std::string EchoAnswerProvider::extract_context(const std::string& prompt) {
    static const std::string begin_marker = "Context:\n";
    static const std::string end_marker = "\n\nQuestion:";
    auto begin = prompt.find(begin_marker);
    if (begin == std::string::npos) return prompt;
    begin += begin_marker.size();
    auto end = prompt.find(end_marker, begin);
    if (end == std::string::npos) return prompt.substr(begin);
    return prompt.substr(begin, end - begin);
}

Completion EchoAnswerProvider::complete(const std::string& prompt) {
    Completion out;
    out.text = extract_context(prompt);
    out.usage.input = static_cast<std::int64_t>(estimate_tokens(prompt));
    out.usage.output = static_cast<std::int64_t>(estimate_tokens(out.text));
    return out;
}

}  // namespace kgt
