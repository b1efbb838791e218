#include "kgt/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace kgt {

using nlohmann::json;

namespace {

std::string env_or_empty(const std::string& name) {
    if (name.empty()) return "";
    const char* value = std::getenv(name.c_str());
    return value == nullptr ? "" : value;
}

template <typename T>
T get_field(const json& doc, const std::string& key, T fallback) {
    if (!doc.contains(key)) return fallback;
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field '" + key + "' has the wrong type");
    }
}

}  // namespace

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig config;

    config.graph_path = get_field<std::string>(doc, "graph", "");
    if (doc.contains("planner")) {
        const auto& p = doc.at("planner");
        config.planner.kind = get_field<std::string>(p, "kind", "template");
        config.planner.script_path = get_field<std::string>(p, "script", "");
    }
    if (doc.contains("answerer")) {
        const auto& a = doc.at("answerer");
        config.answerer.kind = get_field<std::string>(a, "kind", "echo");
        config.answerer.script_path = get_field<std::string>(a, "script", "");
    }
    config.model = get_field<std::string>(doc, "model", config.model);
    config.temperature = get_field<double>(doc, "temperature", config.temperature);
    config.endpoint = get_field<std::string>(doc, "endpoint", "");
    config.auth_token_env = get_field<std::string>(doc, "auth_token_env", "");

    if (doc.contains("embedding")) {
        const auto& e = doc.at("embedding");
        config.embedding.provider = get_field<std::string>(e, "provider", "hashed");
        config.embedding.dimension = get_field<std::size_t>(e, "dimension", config.embedding.dimension);
        config.embedding.endpoint = get_field<std::string>(e, "endpoint", "");
        config.embedding.auth_token_env = get_field<std::string>(e, "auth_token_env", "");
    }

    config.settings.theta = get_field<double>(doc, "theta", config.settings.theta);
    config.settings.top_k = get_field<std::size_t>(doc, "top_k", config.settings.top_k);
    config.settings.max_hops = get_field<int>(doc, "max_hops", config.settings.max_hops);
    config.settings.step_result_cap =
        get_field<std::size_t>(doc, "step_result_cap", config.settings.step_result_cap);
    config.settings.max_retries = get_field<int>(doc, "max_retries", config.settings.max_retries);
    config.settings.context_window =
        get_field<std::size_t>(doc, "context_window", config.settings.context_window);

    if (doc.contains("pricing")) {
        const auto& p = doc.at("pricing");
        config.pricing.input_rate = get_field<double>(p, "input_rate", config.pricing.input_rate);
        config.pricing.output_rate = get_field<double>(p, "output_rate", config.pricing.output_rate);
    }
    if (doc.contains("judge")) {
        const auto& j = doc.at("judge");
        config.judge.enabled = get_field<bool>(j, "enabled", false);
        config.judge.prompt_template_path = get_field<std::string>(j, "prompt_template", "");
    }
    config.parallelism = get_field<int>(doc, "parallelism", config.parallelism);
    config.reasoning_floor = get_field<double>(doc, "reasoning_floor", config.reasoning_floor);
    config.results_path = get_field<std::string>(doc, "results_path", config.results_path);
    config.summary_path = get_field<std::string>(doc, "summary_path", config.summary_path);
    config.few_shot_path = get_field<std::string>(doc, "few_shot", "");

    validate_config(config);
    return config;
}

void validate_config(const RunConfig& config) {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError("config field '" + field + "': " + why);
    };
    if (config.settings.theta < -1.0 || config.settings.theta > 1.0) fail("theta", "must lie in [-1, 1]");
    if (config.settings.top_k < 1) fail("top_k", "must be >= 1");
    if (config.settings.max_hops < 1) fail("max_hops", "must be >= 1");
    if (config.settings.step_result_cap < 1) fail("step_result_cap", "must be >= 1");
    if (config.settings.max_retries < 0) fail("max_retries", "must be >= 0");
    if (config.settings.context_window < 1) fail("context_window", "must be >= 1");
    if (config.pricing.input_rate < 0.0) fail("pricing.input_rate", "must be >= 0");
    if (config.pricing.output_rate < 0.0) fail("pricing.output_rate", "must be >= 0");
    if (config.parallelism < 1) fail("parallelism", "must be >= 1");

    if (config.planner.kind != "template" && config.planner.kind != "external" &&
        config.planner.kind != "mock") {
        fail("planner.kind", "must be one of template | external | mock, got '" + config.planner.kind +
                                 "'");
    }
    if (config.answerer.kind != "echo" && config.answerer.kind != "external" &&
        config.answerer.kind != "mock") {
        fail("answerer.kind", "must be one of echo | external | mock, got '" + config.answerer.kind +
                                  "'");
    }
    if (config.planner.kind == "mock" && config.planner.script_path.empty()) {
        fail("planner.script", "required when planner.kind is 'mock'");
    }
    if (config.answerer.kind == "mock" && config.answerer.script_path.empty()) {
        fail("answerer.script", "required when answerer.kind is 'mock'");
    }
    if ((config.planner.kind == "external" || config.answerer.kind == "external") &&
        config.endpoint.empty()) {
        fail("endpoint", "required when a provider kind is 'external'");
    }
    if (config.embedding.provider != "hashed" && config.embedding.provider != "external") {
        fail("embedding.provider", "must be 'hashed' or 'external'");
    }
    if (config.embedding.provider == "external" && config.embedding.endpoint.empty()) {
        fail("embedding.endpoint", "required when embedding.provider is 'external'");
    }
    if (config.embedding.provider == "hashed" && config.embedding.dimension < 1) {
        fail("embedding.dimension", "must be >= 1");
    }

    if (config.judge.enabled) {
        if (config.judge.prompt_template_path.empty()) {
            fail("judge.prompt_template", "required when judging is enabled");
        }
        if (config.endpoint.empty()) {
            fail("endpoint", "required when judging is enabled (the judge uses the chat client)");
        }
    }

    auto require_exists = [&fail](const std::string& field, const std::string& path) {
        if (!path.empty() && !std::filesystem::exists(path)) {
            fail(field, "file does not exist: '" + path + "'");
        }
    };
    require_exists("planner.script", config.planner.script_path);
    require_exists("answerer.script", config.answerer.script_path);
    require_exists("few_shot", config.few_shot_path);
    require_exists("graph", config.graph_path);
    require_exists("judge.prompt_template", config.judge.prompt_template_path);
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    return parse_config(doc);
}

std::vector<std::pair<std::string, std::string>> load_few_shot_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open few-shot file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("few-shot file '" + path + "': " + e.what());
    }
    if (!doc.is_array()) throw ConfigError("few-shot file must be a JSON array");

    std::vector<std::pair<std::string, std::string>> examples;
    for (const auto& entry : doc) {
        if (!entry.contains("query") || !entry.contains("plan")) {
            throw ConfigError("few-shot entries require 'query' and 'plan'");
        }
        examples.emplace_back(entry.at("query").get<std::string>(), entry.at("plan").dump(2));
    }
    return examples;
}

std::vector<std::string> load_mock_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock script '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("mock script '" + path + "': " + e.what());
    }
    if (!doc.contains("responses") || !doc.at("responses").is_array() || doc.at("responses").empty()) {
        throw ConfigError("mock script requires a non-empty 'responses' array");
    }
    return doc.at("responses").get<std::vector<std::string>>();
}

std::unique_ptr<PlanProvider> make_plan_provider(const RunConfig& config, const GraphSchema& schema) {
    if (config.planner.kind == "template") {
        return std::make_unique<TemplatePlanner>(schema, config.settings.max_hops);
    }
    if (config.planner.kind == "mock") {
        return std::make_unique<ScriptedPlanProvider>(load_mock_script(config.planner.script_path));
    }
    ChatConfig chat;
    chat.endpoint = config.endpoint;
    chat.model = config.model;
    chat.temperature = config.temperature;
    chat.auth_token = env_or_empty(config.auth_token_env);
    return std::make_unique<ChatPlanProvider>(std::make_shared<HttpChatProvider>(chat));
}

std::shared_ptr<ChatProvider> make_answer_provider(const RunConfig& config) {
    if (config.answerer.kind == "echo") return std::make_shared<EchoAnswerProvider>();
    if (config.answerer.kind == "mock") {
        return std::make_shared<ScriptedChatProvider>(load_mock_script(config.answerer.script_path));
    }
    ChatConfig chat;
    chat.endpoint = config.endpoint;
    chat.model = config.model;
    chat.temperature = config.temperature;
    chat.auth_token = env_or_empty(config.auth_token_env);
    return std::make_shared<HttpChatProvider>(chat);
}

std::unique_ptr<EmbeddingProvider> make_embedder(const RunConfig& config) {
    if (config.embedding.provider == "hashed") {
        return std::make_unique<HashedTokenEmbedder>(config.embedding.dimension);
    }
    HttpEmbedder::Config http;
    http.endpoint = config.embedding.endpoint;
    http.auth_token = env_or_empty(config.embedding.auth_token_env);
    http.dimension = config.embedding.dimension;
    return std::make_unique<HttpEmbedder>(http);
}

std::shared_ptr<AnswerJudge> make_judge(const RunConfig& config) {
    if (!config.judge.enabled) return nullptr;
    std::ifstream in(config.judge.prompt_template_path);
    if (!in) {
        throw ConfigError("cannot open judge prompt template '" + config.judge.prompt_template_path +
                          "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();

    ChatConfig chat;
    chat.endpoint = config.endpoint;
    chat.model = config.model;
    chat.temperature = config.temperature;
    chat.auth_token = env_or_empty(config.auth_token_env);
    return std::make_shared<ChatJudge>(std::make_shared<HttpChatProvider>(chat), buf.str());
}

}  // namespace kgt
