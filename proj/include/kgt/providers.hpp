#pragma once
// Text-completion providers: the external chat-completion client plus the
// offline implementations (scripted, echo) that keep the pipeline testable
// without a model endpoint.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kgt/similarity.hpp"  // ProviderError

namespace kgt {

struct TokenUsage {
    std::int64_t input = 0;
    std::int64_t output = 0;

    TokenUsage& operator+=(const TokenUsage& other) {
        input += other.input;
        output += other.output;
        return *this;
    }
    std::int64_t total() const { return input + output; }
};

struct Completion {
    std::string text;
    TokenUsage usage;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual Completion complete(const std::string& prompt) = 0;
};

struct ChatConfig {
    std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
    std::string model = "gpt-4";
    double temperature = 0.0;
    std::string auth_token;
    int transport_retries = 3;                        // attempts, not extra tries
    std::chrono::milliseconds initial_backoff{1000};  // doubles per retry
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

// POST of {"model", "temperature", "messages"} to an OpenAI-style endpoint;
// reads choices[0].message.content and usage token counts. Transport errors
// are retried with exponential backoff before surfacing as ProviderError.
class HttpChatProvider final : public ChatProvider {
public:
    // nullopt models a transport-level failure (no response at all).
    using Poster = std::function<std::optional<HttpResponse>(const std::string& endpoint,
                                                             const std::string& body,
                                                             const std::string& auth_token)>;

    explicit HttpChatProvider(ChatConfig config, Poster poster = nullptr);

    Completion complete(const std::string& prompt) override;

private:
    ChatConfig config_;
    Poster poster_;
};

// Replays a fixed response sequence; the last response repeats once the
// script is exhausted. Records every prompt it saw. Thread-safe.
class ScriptedChatProvider final : public ChatProvider {
public:
    explicit ScriptedChatProvider(std::vector<std::string> responses);

    Completion complete(const std::string& prompt) override;

    int call_count() const;
    std::vector<std::string> prompts() const;

private:
    mutable std::mutex mutex_;
    std::vector<std::string> responses_;
    std::vector<std::string> prompts_;
    std::size_t next_ = 0;
};

// Returns the retrieved-context section of an answer prompt verbatim, making
// end-to-end answers a deterministic function of the graph walk.
class EchoAnswerProvider final : public ChatProvider {
public:
    Completion complete(const std::string& prompt) override;

    // The markers the answer prompt puts around the context block.
    static std::string extract_context(const std::string& prompt);
};

}  // namespace kgt
