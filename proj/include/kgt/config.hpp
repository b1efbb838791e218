#pragma once
// Run configuration: a single JSON file carrying the full parameter set,
// with environment-variable lookup reserved for secrets. Flag overrides are
// applied by the CLI after loading.

#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "kgt/eval.hpp"
#include "kgt/executor.hpp"
#include "kgt/planner.hpp"

namespace kgt {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProviderSelection {
    std::string kind;         // planner: template | external | mock; answerer: echo | external | mock
    std::string script_path;  // for mock: JSON file {"responses": [str, ...]}
};

struct EmbeddingSelection {
    std::string provider = "hashed";  // hashed | external
    std::size_t dimension = 4096;
    std::string endpoint;
    std::string auth_token_env;
};

// Optional answer judging; nothing ships enabled. When enabled the judge uses
// the chat-completion client with a prompt template loaded from a data file.
struct JudgeSelection {
    bool enabled = false;
    std::string prompt_template_path;
};

struct RunConfig {
    std::string graph_path;
    ProviderSelection planner{"template", ""};
    ProviderSelection answerer{"echo", ""};
    std::string model = "gpt-4";
    double temperature = 0.0;
    std::string endpoint;
    std::string auth_token_env;  // name of the env var holding the API token
    EmbeddingSelection embedding;
    RunSettings settings;
    PricingTable pricing;
    JudgeSelection judge;
    int parallelism = 1;
    double reasoning_floor = 0.2;
    std::string results_path = "results.jsonl";
    std::string summary_path = "summary.json";
    std::string few_shot_path;
};

// Throws ConfigError naming the offending field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config_file(const std::string& path);
void validate_config(const RunConfig& config);

// Few-shot file: JSON array of {"query": str, "plan": object}.
std::vector<std::pair<std::string, std::string>> load_few_shot_file(const std::string& path);

// Mock script file: {"responses": [str, ...]}.
std::vector<std::string> load_mock_script(const std::string& path);

std::unique_ptr<PlanProvider> make_plan_provider(const RunConfig& config, const GraphSchema& schema);
std::shared_ptr<ChatProvider> make_answer_provider(const RunConfig& config);
std::unique_ptr<EmbeddingProvider> make_embedder(const RunConfig& config);

// Null unless judging is enabled in the config.
std::shared_ptr<AnswerJudge> make_judge(const RunConfig& config);

}  // namespace kgt
