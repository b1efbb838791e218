#pragma once
// Metrics and the batch evaluation harness: ROUGE-L, inference-cost
// accounting, baseline ratios, and error-class tallies.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgt/executor.hpp"

namespace kgt {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Word-level longest common subsequence over lowercased alphanumeric tokens;
// all zeros when either side has no words.
RougeScore rouge_l(const std::string& candidate, const std::string& reference);

struct PricingTable {
    double input_rate = 30.0;   // dollars per million input tokens
    double output_rate = 60.0;  // dollars per million output tokens
};

// input_rate * (input / 1M) + output_rate * (output / 1M), in dollars.
double inference_cost(std::int64_t input_tokens, std::int64_t output_tokens,
                      const PricingTable& pricing);

struct QuestionRecord {
    std::string id;
    std::string question;
    std::string reference;
    std::string answer;
    RougeScore rouge;
    double cost = 0.0;
    double wall_time_ms = 0.0;
    std::string error_class = "none";
    TokenUsage usage;
    std::optional<double> judge_score;  // only when a judge is plugged in
    RunRecord run;

    nlohmann::json to_json() const;
};

struct EvalSummary {
    std::vector<QuestionRecord> records;

    bool defined() const { return !records.empty(); }
    double mean_rouge_f1() const;
    double mean_cost() const;
    double mean_wall_time_ms() const;
    // Excludes "none"; the remaining probabilities sum to <= 1.
    std::map<std::string, double> error_probabilities() const;
    // "Completed but ROUGE-L below the floor" — the mechanical stand-in for
    // semantically wrong plans; explicitly approximate.
    double approx_reasoning_error_probability(double floor) const;
    std::optional<double> mean_judge_score() const;

    nlohmann::json to_json(double reasoning_floor) const;
};

struct RatioMetrics {
    double cost_reduction_factor = 0.0;  // baseline mean cost / ours mean cost
    double speedup = 0.0;                // baseline mean time / ours mean time
};

// Requires identical question-id sets and nonzero denominators.
RatioMetrics ratio_metrics(const EvalSummary& baseline, const EvalSummary& ours);

struct Question {
    std::string id;
    std::string question;
    std::string answer;  // reference
};

// JSONL of {"id", "question", "answer"}.
std::vector<Question> parse_questions_jsonl(const std::string& text);
std::vector<Question> load_questions_file(const std::string& path);

// Optional answer judge hook (disabled by default; nothing shipped enables it).
class AnswerJudge {
public:
    virtual ~AnswerJudge() = default;
    virtual double judge(const std::string& question, const std::string& reference,
                         const std::string& answer) = 0;
};

// Chat-backed judge: fills {question}/{reference}/{answer} into a prompt
// template and parses the leading number of the reply as a 0-100 score.
class ChatJudge final : public AnswerJudge {
public:
    ChatJudge(std::shared_ptr<ChatProvider> chat, std::string prompt_template);
    double judge(const std::string& question, const std::string& reference,
                 const std::string& answer) override;

private:
    std::shared_ptr<ChatProvider> chat_;
    std::string template_;
};

struct BatchConfig {
    RunSettings settings;
    PricingTable pricing;
    int parallelism = 1;
    double reasoning_floor = 0.2;  // ROUGE-L f1 below this counts as approximate reasoning error
    std::vector<std::pair<std::string, std::string>> few_shot;
    std::shared_ptr<AnswerJudge> judge;  // null: judging disabled
    std::string results_path;            // written as JSONL when non-empty
    std::string summary_path;            // written as a JSON document when non-empty
};

// Runs run_query per question (parallel up to config.parallelism), scores
// each against its reference, and tallies error classes. Per-question
// failures become their error class; the batch never aborts.
EvalSummary run_batch(const KnowledgeGraph& graph, PlanProvider& planner, ChatProvider& answerer,
                      const EmbeddingProvider& embedder, const std::vector<Question>& questions,
                      const BatchConfig& config);

}  // namespace kgt
