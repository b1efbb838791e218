#pragma once
// Traversal-plan generation: prompt assembly, plan providers (chat-backed,
// scripted, and a rule-based template planner for offline runs), and the
// verify-regenerate retry loop.

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgt/graph.hpp"
#include "kgt/plan.hpp"
#include "kgt/providers.hpp"
#include "kgt/verifier.hpp"

namespace kgt {

struct PromptBundle {
    std::string query;
    std::string graph_description;  // every node type with attribute keys, every edge record
    std::string action_docs;        // covers exactly the action catalog
    std::vector<std::pair<std::string, std::string>> few_shot_examples;  // (query, plan document)
    std::optional<std::string> retry_feedback;
};

// Text rendering of the schema for the planning prompt: one line per node
// type (with attribute keys) and one per edge-type record.
std::string describe_schema(const GraphSchema& schema);

// Fixed explanation of the three traversal actions and their parameters.
std::string default_action_docs();

// Deterministic prompt with fixed section order: preamble, action docs,
// graph description, few-shot examples, retry feedback (if any), query,
// output-format instruction.
std::string build_prompt(const PromptBundle& bundle);

class PlanProvider {
public:
    virtual ~PlanProvider() = default;
    // Receives both the structured bundle and the rendered prompt; chat-backed
    // providers use the prompt, rule-based ones the bundle.
    virtual Completion plan(const PromptBundle& bundle, const std::string& prompt) = 0;
};

class ChatPlanProvider final : public PlanProvider {
public:
    explicit ChatPlanProvider(std::shared_ptr<ChatProvider> chat) : chat_(std::move(chat)) {}
    Completion plan(const PromptBundle&, const std::string& prompt) override {
        return chat_->complete(prompt);
    }

private:
    std::shared_ptr<ChatProvider> chat_;
};

class ScriptedPlanProvider final : public PlanProvider {
public:
    explicit ScriptedPlanProvider(std::vector<std::string> responses)
        : scripted_(std::make_shared<ScriptedChatProvider>(std::move(responses))) {}

    Completion plan(const PromptBundle&, const std::string& prompt) override {
        return scripted_->complete(prompt);
    }

    int call_count() const { return scripted_->call_count(); }
    std::vector<std::string> prompts() const { return scripted_->prompts(); }

private:
    std::shared_ptr<ScriptedChatProvider> scripted_;
};

// Rule-based plan synthesis for a small query taxonomy, keyed off quoted
// hints plus node-type and edge-type mentions in the query. Keeps the whole
// pipeline runnable with no model endpoint.
class TemplatePlanner final : public PlanProvider {
public:
    explicit TemplatePlanner(GraphSchema schema, int default_max_hops = kDefaultMaxHops)
        : schema_(std::move(schema)), default_max_hops_(default_max_hops) {}

    Completion plan(const PromptBundle& bundle, const std::string& prompt) override;

    // Exposed for tests: the synthesized plan before serialization.
    TraversalPlan synthesize(const std::string& query) const;

private:
    GraphSchema schema_;
    int default_max_hops_;
};

struct PlannerOutcome {
    TraversalPlan plan;
    VerificationReport report;
    int attempts = 0;
    TokenUsage token_usage;            // summed across attempts
    int verification_rejections = 0;   // attempts rejected by the verifier
};

class PlanningExhausted : public std::runtime_error {
public:
    PlanningExhausted(std::string message, int attempts, std::optional<VerificationReport> final_report,
                      TokenUsage usage)
        : std::runtime_error(std::move(message)),
          attempts(attempts),
          final_report(std::move(final_report)),
          token_usage(usage) {}

    int attempts;
    std::optional<VerificationReport> final_report;  // absent when the last attempt failed to parse
    TokenUsage token_usage;
};

struct PlannerConfig {
    int max_retries = 3;  // regeneration attempts beyond the first
    int max_hops = kDefaultMaxHops;
    std::vector<std::pair<std::string, std::string>> few_shot_examples;
    std::vector<std::string> action_catalog = default_action_catalog();
};

struct GeneratedPlan {
    TraversalPlan plan;
    TokenUsage usage;
};

// One provider call, parsed through parse_plan. PlanFormatError propagates so
// the retry loop can feed the parse failure back.
GeneratedPlan generate_plan(PlanProvider& provider, const PromptBundle& bundle);

// Loop: build prompt (with the previous attempt's fatal findings as the only
// carried-over context), generate, parse, verify. Throws PlanningExhausted
// after max_retries + 1 failed attempts.
PlannerOutcome plan_with_verification(PlanProvider& provider, const std::string& query,
                                      const GraphSchema& schema, const PlannerConfig& config);

}  // namespace kgt
