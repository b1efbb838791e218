#include "kgt/executor.hpp"

#include <chrono>
#include <sstream>

#include "kgt/text_util.hpp"

namespace kgt {

using nlohmann::json;

namespace {

constexpr const char* kEmptyContextSentinel = "(no graph context retrieved)";

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::string describe_params(const PlanStep& step, const std::map<std::string, NodeSet>& results,
                            const RunSettings& settings) {
    std::ostringstream out;
    if (const auto* p = std::get_if<FindNodeParams>(&step.params)) {
        out << "hint='" << p->hint << "' node_type=" << p->node_type;
    } else if (const auto* p = std::get_if<FetchNeighborsParams>(&step.params)) {
        auto it = results.find(p->source.step_id);
        out << "source=" << p->source.step_id << "("
            << (it == results.end() ? 0 : it->second.members.size()) << " nodes) "
            << (p->param.kind == ParamKind::edge_type ? "edge-type" : "node-type") << "="
            << p->param.name;
        if (p->param.kind == ParamKind::node_type) {
            out << " max_hops=" << p->max_hops.value_or(settings.max_hops);
        }
    } else if (const auto* p = std::get_if<FindCommonNodesParams>(&step.params)) {
        out << "inputs=[";
        for (std::size_t i = 0; i < p->inputs.size(); ++i) {
            if (i > 0) out << ", ";
            out << p->inputs[i].first.step_id << ":" << p->inputs[i].second;
        }
        out << "]";
    } else {
        out << "unknown action params";
    }
    return out.str();
}

}  // namespace

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::complete: return "complete";
        case RunStatus::execution_break: return "execution-break";
        case RunStatus::context_window_exceeded: return "context-window-exceeded";
    }
    return "unknown";
}

std::vector<std::string> render_context_blocks(const KnowledgeGraph& graph, const NodeSet& nodes) {
    std::vector<std::string> blocks;
    for (const NodeId& id : nodes.members) {  // std::set: ascending id
        const Node& n = graph.node(id);
        std::ostringstream block;
        block << "[(" << n.node_type << ") " << n.id << "]";
        for (const auto& [key, value] : n.attributes) block << "\n" << key << ": " << value;
        blocks.push_back(block.str());
    }
    return blocks;
}

std::string join_context(const std::vector<std::string>& blocks) {
    if (blocks.empty()) return kEmptyContextSentinel;
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += blocks[i];
    }
    return out;
}

std::string build_answer_prompt(const std::string& query, const std::string& context_text) {
    return "Answer the question using only the retrieved graph context below. If the context does "
           "not contain the answer, say so.\n\nContext:\n" +
           context_text + "\n\nQuestion: " + query + "\nAnswer:";
}

ExecutionTrace execute_plan(const KnowledgeGraph& graph, const TraversalPlan& plan,
                            const EmbeddingProvider& embedder, const RunSettings& settings) {
    ExecutionTrace trace;

    for (const auto& step : plan.steps) {
        auto start = std::chrono::steady_clock::now();
        StepRecord record;
        record.step_id = step.id;
        record.action = step.action;
        record.resolved_params = describe_params(step, trace.results, settings);

        NodeSet result;
        try {
            if (const auto* p = std::get_if<FindNodeParams>(&step.params)) {
                SimilarityConfig sim{settings.theta, settings.top_k};
                result = find_node(graph, {p->hint}, p->node_type, embedder, sim,
                                   settings.step_result_cap);
            } else if (const auto* p = std::get_if<FetchNeighborsParams>(&step.params)) {
                const NodeSet& sources = trace.results.at(p->source.step_id);
                if (sources.members.empty()) {
                    result = NodeSet{};  // empty propagation, no action call
                } else {
                    result = fetch_neighbors(graph, sources, p->param,
                                             p->max_hops.value_or(settings.max_hops),
                                             settings.step_result_cap);
                }
            } else if (const auto* p = std::get_if<FindCommonNodesParams>(&step.params)) {
                std::vector<std::pair<NodeSet, std::string>> inputs;
                for (const auto& [ref, edge_type] : p->inputs) {
                    inputs.emplace_back(trace.results.at(ref.step_id), edge_type);
                }
                result = find_common_nodes(graph, inputs, settings.step_result_cap);
            } else {
                throw std::invalid_argument("unknown action '" + step.action + "'");
            }
        } catch (const std::exception& e) {
            // Reachable only for plans that skipped verification (dry runs).
            record.duration_ms = elapsed_ms(start);
            trace.steps.push_back(std::move(record));
            trace.status = RunStatus::execution_break;
            trace.break_reason = "step '" + step.id + "': " + e.what();
            return trace;
        }

        result.provenance = step.id;
        record.result_size = result.members.size();
        record.truncated = result.truncated;
        record.duration_ms = elapsed_ms(start);
        trace.steps.push_back(std::move(record));
        trace.results[step.id] = std::move(result);
    }

    trace.status = RunStatus::complete;
    const NodeSet& last = trace.results.at(plan.steps.back().id);
    trace.context_blocks = render_context_blocks(graph, last);
    trace.final_context = join_context(trace.context_blocks);
    return trace;
}

AnswerRecord generate_answer(ChatProvider& provider, const std::string& query,
                             const ExecutionTrace& trace, const RunSettings& settings) {
    if (trace.status != RunStatus::complete) {
        throw std::logic_error("generate_answer requires a complete trace");
    }

    std::vector<std::string> blocks = trace.context_blocks;
    std::string prompt = build_answer_prompt(query, join_context(blocks));
    while (estimate_tokens(prompt) > settings.context_window) {
        if (blocks.empty()) {
            throw ContextWindowExceeded(
                "answer prompt exceeds the context window (" + std::to_string(settings.context_window) +
                " tokens) even with no context; estimated " + std::to_string(estimate_tokens(prompt)));
        }
        blocks.pop_back();
        prompt = build_answer_prompt(query, join_context(blocks));
    }

    AnswerRecord record;
    record.trace = trace;
    Completion completion = provider.complete(prompt);
    record.answer = completion.text;
    record.token_usage = completion.usage;
    return record;
}

json RunRecord::to_json() const {
    json steps = json::array();
    for (const auto& s : trace.steps) {
        steps.push_back({{"id", s.step_id},
                         {"action", s.action},
                         {"resolved_params", s.resolved_params},
                         {"result_size", s.result_size},
                         {"truncated", s.truncated},
                         {"duration_ms", s.duration_ms}});
    }
    json doc = {{"query", query},
                {"answer", answer},
                {"error_class", error_class},
                {"attempts", attempts},
                {"verification_rejections", verification_rejections},
                {"provider_calls", provider_calls},
                {"status", to_string(trace.status)},
                {"final_context", trace.final_context},
                {"steps", steps},
                {"token_usage",
                 {{"planning_input", planning_usage.input},
                  {"planning_output", planning_usage.output},
                  {"answer_input", answer_usage.input},
                  {"answer_output", answer_usage.output},
                  {"input", total_usage.input},
                  {"output", total_usage.output}}},
                {"timing",
                 {{"plan_ms", plan_ms},
                  {"execute_ms", execute_ms},
                  {"answer_ms", answer_ms},
                  {"wall_time_ms", wall_time_ms}}}};
    if (!error_detail.empty()) doc["error_detail"] = error_detail;
    if (plan.has_value()) doc["plan"] = plan_to_json(*plan);
    return doc;
}

RunRecord run_query(const KnowledgeGraph& graph, PlanProvider& planner, ChatProvider& answerer,
                    const EmbeddingProvider& embedder, const std::string& query,
                    const RunSettings& settings,
                    const std::vector<std::pair<std::string, std::string>>& few_shot) {
    RunRecord record;
    record.query = query;

    PlannerConfig planner_config;
    planner_config.max_retries = settings.max_retries;
    planner_config.max_hops = settings.max_hops;
    planner_config.few_shot_examples = few_shot;

    auto plan_start = std::chrono::steady_clock::now();
    PlannerOutcome outcome;
    try {
        outcome = plan_with_verification(planner, query, graph.schema(), planner_config);
    } catch (const PlanningExhausted& e) {
        record.plan_ms = elapsed_ms(plan_start);
        record.wall_time_ms = record.plan_ms;
        record.attempts = e.attempts;
        record.provider_calls = e.attempts;
        record.planning_usage = e.token_usage;
        record.total_usage = e.token_usage;
        record.error_class = "planning-exhausted";
        record.error_detail = e.what();
        return record;
    } catch (const ProviderError& e) {
        record.plan_ms = elapsed_ms(plan_start);
        record.wall_time_ms = record.plan_ms;
        record.error_class = "planning-exhausted";
        record.error_detail = std::string("provider failure: ") + e.what();
        return record;
    }
    record.plan_ms = elapsed_ms(plan_start);
    record.plan = outcome.plan;
    record.attempts = outcome.attempts;
    record.verification_rejections = outcome.verification_rejections;
    record.provider_calls = outcome.attempts;
    record.planning_usage = outcome.token_usage;

    auto exec_start = std::chrono::steady_clock::now();
    record.trace = execute_plan(graph, outcome.plan, embedder, settings);
    record.execute_ms = elapsed_ms(exec_start);
    if (record.trace.status == RunStatus::execution_break) {
        record.error_class = "execution-break";
        record.error_detail = record.trace.break_reason;
        record.total_usage = record.planning_usage;
        record.wall_time_ms = record.plan_ms + record.execute_ms;
        return record;
    }

    auto answer_start = std::chrono::steady_clock::now();
    try {
        AnswerRecord answer = generate_answer(answerer, query, record.trace, settings);
        record.answer = answer.answer;
        record.answer_usage = answer.token_usage;
        record.provider_calls += 1;
    } catch (const ContextWindowExceeded& e) {
        record.answer_ms = elapsed_ms(answer_start);
        record.trace.status = RunStatus::context_window_exceeded;
        record.trace.final_context.clear();  // present iff status == complete
        record.error_class = "context-window-exceeded";
        record.error_detail = e.what();
        record.total_usage = record.planning_usage;
        record.wall_time_ms = record.plan_ms + record.execute_ms + record.answer_ms;
        return record;
    } catch (const ProviderError& e) {
        record.answer_ms = elapsed_ms(answer_start);
        record.error_class = "execution-break";
        record.error_detail = std::string("answer provider failure: ") + e.what();
        record.total_usage = record.planning_usage;
        record.wall_time_ms = record.plan_ms + record.execute_ms + record.answer_ms;
        return record;
    }
    record.answer_ms = elapsed_ms(answer_start);

    // An answer was produced, but when the verifier had to reject attempts
    // along the way a hallucinated plan occurred and was caught; the class
    // records the occurrence the way the error table counts it.
    if (record.verification_rejections > 0) {
        record.error_class = "hallucination-blocked-at-verification";
    }
    record.total_usage = record.planning_usage;
    record.total_usage += record.answer_usage;
    record.wall_time_ms = record.plan_ms + record.execute_ms + record.answer_ms;
    return record;
}

}  // namespace kgt
