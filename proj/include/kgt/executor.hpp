#pragma once
// Executes a verified plan step by step, chains each step's node set into
// the next, renders the final retrieval context, and produces the answer
// with one more provider call.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgt/actions.hpp"
#include "kgt/planner.hpp"
#include "kgt/providers.hpp"

namespace kgt {

struct RunSettings {
    double theta = 0.5;
    std::size_t top_k = 5;
    int max_hops = kDefaultMaxHops;
    std::size_t step_result_cap = kDefaultStepResultCap;
    int max_retries = 3;
    std::size_t context_window = 8192;  // tokens, estimated
};

enum class RunStatus { complete, execution_break, context_window_exceeded };
std::string to_string(RunStatus status);

struct StepRecord {
    std::string step_id;
    std::string action;
    std::string resolved_params;
    std::size_t result_size = 0;
    bool truncated = false;
    double duration_ms = 0.0;  // volatile timing field
};

struct ExecutionTrace {
    std::vector<StepRecord> steps;
    std::map<std::string, NodeSet> results;  // per-step outputs, for chaining and tests
    std::vector<std::string> context_blocks;  // one rendered block per final node
    std::string final_context;                // present iff status == complete
    RunStatus status = RunStatus::complete;
    std::string break_reason;
};

struct AnswerRecord {
    std::string answer;
    ExecutionTrace trace;
    TokenUsage token_usage;  // the answer call only
};

class ContextWindowExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One block per node: "[(type) id]" then "key: value" lines in sorted key
// order; blocks ordered by ascending node id.
std::vector<std::string> render_context_blocks(const KnowledgeGraph& graph, const NodeSet& nodes);
std::string join_context(const std::vector<std::string>& blocks);
std::string build_answer_prompt(const std::string& query, const std::string& context_text);

// Empty intermediate results propagate; structural failures (possible only
// for unverified plans) end the trace with execution_break.
ExecutionTrace execute_plan(const KnowledgeGraph& graph, const TraversalPlan& plan,
                            const EmbeddingProvider& embedder, const RunSettings& settings);

// Drops whole node blocks from the end until the prompt fits the context
// window; throws ContextWindowExceeded when even the empty-context prompt
// does not fit. Requires trace.status == complete.
AnswerRecord generate_answer(ChatProvider& provider, const std::string& query,
                             const ExecutionTrace& trace, const RunSettings& settings);

struct RunRecord {
    std::string query;
    std::string answer;
    std::string error_class = "none";  // none | hallucination-blocked-at-verification |
                                       // planning-exhausted | execution-break |
                                       // context-window-exceeded
    std::string error_detail;
    std::optional<TraversalPlan> plan;
    int attempts = 0;
    int verification_rejections = 0;
    int provider_calls = 0;
    ExecutionTrace trace;
    TokenUsage planning_usage;
    TokenUsage answer_usage;
    TokenUsage total_usage;
    // Volatile timing fields; everything else is deterministic.
    double plan_ms = 0.0;
    double execute_ms = 0.0;
    double answer_ms = 0.0;
    double wall_time_ms = 0.0;

    nlohmann::json to_json() const;
};

// plan_with_verification -> execute_plan -> generate_answer, with failures
// classified into the record instead of thrown.
RunRecord run_query(const KnowledgeGraph& graph, PlanProvider& planner, ChatProvider& answerer,
                    const EmbeddingProvider& embedder, const std::string& query,
                    const RunSettings& settings,
                    const std::vector<std::pair<std::string, std::string>>& few_shot = {});

}  // namespace kgt
