#include "kgt/planner.hpp"

#include <algorithm>
#include <sstream>

#include "kgt/text_util.hpp"

namespace kgt {

std::string describe_schema(const GraphSchema& schema) {
    std::ostringstream out;
    out << "Node types:\n";
    for (const auto& [type, keys] : schema.node_types) {
        out << "- " << type << ": attributes [";
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (i > 0) out << ", ";
            out << keys[i];
        }
        out << "]\n";
    }
    out << "Edge types:\n";
    std::vector<EdgeTypeRecord> records = schema.edge_types;
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return std::tie(a.name, a.source, a.target) < std::tie(b.name, b.source, b.target);
    });
    for (const auto& r : records) {
        out << "- " << r.name << ": " << r.source << " -> " << r.target
            << (r.bidirectional ? " (bidirectional)" : " (directed)") << "\n";
    }
    return out.str();
}

std::string default_action_docs() {
    return
        "find_node(hint, node_type): locate starting nodes of the given type whose attributes "
        "match the hint text. Every plan begins with this action.\n"
        "fetch_neighbors(source, param, max_hops?): from the nodes produced by an earlier step "
        "(source = that step's id), traverse the graph. If param.kind is \"edge-type\", fetch the "
        "immediate neighbors connected by edges of param.name (one hop). If param.kind is "
        "\"node-type\", follow edges of any type until nodes of type param.name are reached, up "
        "to max_hops hops.\n"
        "find_common_nodes(inputs): given two or more (source step id, edge type) pairs, return "
        "the nodes that are neighbors of every input set along its edge type (the shared "
        "neighbors).\n";
}

std::string build_prompt(const PromptBundle& bundle) {
    std::ostringstream out;
    out << "You plan traversals over a typed knowledge graph. Produce a traversal plan that "
           "retrieves the information needed to answer the query, using only the actions below.\n\n";
    out << "## Actions\n" << bundle.action_docs << "\n";
    out << "## Graph\n" << bundle.graph_description << "\n";
    if (!bundle.few_shot_examples.empty()) {
        out << "## Examples\n";
        for (const auto& [query, plan_doc] : bundle.few_shot_examples) {
            out << "Query: " << query << "\nPlan:\n" << plan_doc << "\n\n";
        }
    }
    if (bundle.retry_feedback.has_value()) {
        out << "## Feedback on your previous plan\nThe previous plan failed verification. Fix "
               "exactly these problems and return a corrected plan:\n"
            << *bundle.retry_feedback << "\n\n";
    }
    out << "## Query\n" << bundle.query << "\n\n";
    out << "## Output format\n"
           "Reply with a single JSON document, nothing else:\n"
           "{\"query\": str, \"rationale\": str, \"steps\": [{\"id\": str, \"action\": str, "
           "\"params\": {...}}]}\n"
           "Params by action: find_node {\"hint\", \"node_type\"}; fetch_neighbors {\"source\", "
           "\"param\": {\"kind\": \"edge-type\"|\"node-type\", \"name\"}, \"max_hops\"?}; "
           "find_common_nodes {\"inputs\": [{\"source\", \"edge_type\"}]}. The first step must be "
           "find_node; sources may only reference earlier steps.\n";
    return out.str();
}

namespace {

struct TokenWithOffset {
    std::string text;
    std::size_t offset;
};

std::vector<TokenWithOffset> tokenize_with_offsets(const std::string& text) {
    std::vector<TokenWithOffset> tokens;
    std::string current;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        unsigned char c = i < text.size() ? static_cast<unsigned char>(text[i]) : ' ';
        if (i < text.size() && std::isalnum(c)) {
            if (current.empty()) start = i;
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back({std::move(current), start});
            current.clear();
        }
    }
    return tokens;
}

// Loose word equality: singular/plural and -d forms collapse, so a query
// saying "cited" or "cites" still matches the edge type "cites".
bool token_matches(const std::string& a, const std::string& b) {
    if (a == b) return true;
    if (a.size() == b.size() + 1 && (a.back() == 's' || a.back() == 'd') && a.compare(0, b.size(), b) == 0)
        return true;
    if (b.size() == a.size() + 1 && (b.back() == 's' || b.back() == 'd') && b.compare(0, a.size(), a) == 0)
        return true;
    return false;
}

// First position (char offset) where the name's token sequence appears in the
// query tokens, or nullopt.
std::optional<std::size_t> find_mention(const std::vector<TokenWithOffset>& query_tokens,
                                        const std::string& name) {
    auto name_tokens = tokenize_alnum(name);
    if (name_tokens.empty() || query_tokens.size() < name_tokens.size()) return std::nullopt;
    for (std::size_t i = 0; i + name_tokens.size() <= query_tokens.size(); ++i) {
        bool all = true;
        for (std::size_t j = 0; j < name_tokens.size(); ++j) {
            if (!token_matches(query_tokens[i + j].text, name_tokens[j])) {
                all = false;
                break;
            }
        }
        if (all) return query_tokens[i].offset;
    }
    return std::nullopt;
}

struct QuotedHint {
    std::string text;
    std::size_t offset;
};

std::vector<QuotedHint> extract_quoted(const std::string& query) {
    std::vector<QuotedHint> hints;
    for (char quote : {'\'', '"'}) {
        std::size_t pos = 0;
        while (true) {
            auto open = query.find(quote, pos);
            if (open == std::string::npos) break;
            auto close = query.find(quote, open + 1);
            if (close == std::string::npos) break;
            std::string inner = query.substr(open + 1, close - open - 1);
            if (!inner.empty()) hints.push_back({inner, open});
            pos = close + 1;
        }
        if (!hints.empty()) break;  // don't mix quote styles
    }
    std::sort(hints.begin(), hints.end(),
              [](const QuotedHint& a, const QuotedHint& b) { return a.offset < b.offset; });
    return hints;
}

std::size_t distance(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

}  // namespace

TraversalPlan TemplatePlanner::synthesize(const std::string& query) const {
    auto tokens = tokenize_with_offsets(query);
    auto hints = extract_quoted(query);

    // Node-type and edge-type mentions with their first offsets.
    std::vector<std::pair<std::string, std::size_t>> type_mentions;
    for (const auto& [type, keys] : schema_.node_types) {
        if (auto at = find_mention(tokens, type)) type_mentions.emplace_back(type, *at);
    }
    std::sort(type_mentions.begin(), type_mentions.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });

    std::vector<std::pair<std::string, std::size_t>> edge_mentions;
    std::set<std::string> edge_names;
    for (const auto& r : schema_.edge_types) edge_names.insert(r.name);
    for (const auto& name : edge_names) {
        if (auto at = find_mention(tokens, name)) edge_mentions.emplace_back(name, *at);
    }
    std::sort(edge_mentions.begin(), edge_mentions.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });

    // Anchor type: the node-type mention closest to the first quoted hint.
    std::string anchor;
    if (!type_mentions.empty()) {
        if (hints.empty()) {
            anchor = type_mentions.front().first;
        } else {
            std::size_t hint_at = hints.front().offset;
            std::size_t best = SIZE_MAX;
            for (const auto& [type, at] : type_mentions) {
                if (distance(at, hint_at) < best) {
                    best = distance(at, hint_at);
                    anchor = type;
                }
            }
        }
    } else if (!schema_.node_types.empty()) {
        anchor = schema_.node_types.begin()->first;
    }

    TraversalPlan plan;
    plan.query = query;
    auto step_id = [](std::size_t n) { return "s" + std::to_string(n); };

    if (hints.size() >= 2 && !edge_mentions.empty()) {
        // Shared-neighbor pattern: one anchor per hint, intersect along the
        // mentioned edge type.
        plan.rationale = "template: common neighbors of the quoted entities";
        FindCommonNodesParams common;
        for (std::size_t i = 0; i < hints.size(); ++i) {
            PlanStep find{step_id(i + 1), kActionFindNode, FindNodeParams{hints[i].text, anchor}};
            plan.steps.push_back(std::move(find));
            common.inputs.push_back({StepRef{step_id(i + 1)}, edge_mentions.front().first});
        }
        plan.steps.push_back({step_id(hints.size() + 1), kActionFindCommonNodes, std::move(common)});
        return plan;
    }

    if (hints.size() == 1 && !edge_mentions.empty()) {
        plan.rationale = "template: one-hop traversal along the mentioned edge type";
        plan.steps.push_back({step_id(1), kActionFindNode, FindNodeParams{hints.front().text, anchor}});
        FetchNeighborsParams fetch;
        fetch.source = StepRef{step_id(1)};
        fetch.param = {ParamKind::edge_type, edge_mentions.front().first};
        plan.steps.push_back({step_id(2), kActionFetchNeighbors, std::move(fetch)});
        return plan;
    }

    if (hints.size() == 1 && type_mentions.size() >= 2) {
        // Multi-hop toward the earliest-mentioned non-anchor type.
        std::string target;
        for (const auto& [type, at] : type_mentions) {
            if (type != anchor) {
                target = type;
                break;
            }
        }
        plan.rationale = "template: multi-hop traversal to the target node type";
        plan.steps.push_back({step_id(1), kActionFindNode, FindNodeParams{hints.front().text, anchor}});
        FetchNeighborsParams fetch;
        fetch.source = StepRef{step_id(1)};
        fetch.param = {ParamKind::node_type, target};
        fetch.max_hops = default_max_hops_;
        plan.steps.push_back({step_id(2), kActionFetchNeighbors, std::move(fetch)});
        return plan;
    }

    plan.rationale = "template: direct node lookup";
    std::string hint = hints.empty() ? query : hints.front().text;
    plan.steps.push_back({step_id(1), kActionFindNode, FindNodeParams{hint, anchor}});
    return plan;
}

Completion TemplatePlanner::plan(const PromptBundle& bundle, const std::string& prompt) {
    Completion out;
    out.text = serialize_plan(synthesize(bundle.query));
    out.usage.input = static_cast<std::int64_t>(estimate_tokens(prompt));
    out.usage.output = static_cast<std::int64_t>(estimate_tokens(out.text));
    return out;
}

GeneratedPlan generate_plan(PlanProvider& provider, const PromptBundle& bundle) {
    Completion completion = provider.plan(bundle, build_prompt(bundle));
    return {parse_plan(completion.text), completion.usage};
}

PlannerOutcome plan_with_verification(PlanProvider& provider, const std::string& query,
                                      const GraphSchema& schema, const PlannerConfig& config) {
    if (config.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");

    PromptBundle bundle;
    bundle.query = query;
    bundle.graph_description = describe_schema(schema);
    bundle.action_docs = default_action_docs();
    bundle.few_shot_examples = config.few_shot_examples;

    TokenUsage total;
    int rejections = 0;
    std::optional<VerificationReport> last_report;
    std::string last_failure;

    const int max_attempts = config.max_retries + 1;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        // Only the previous attempt's failure rides along; never a transcript.
        bundle.retry_feedback =
            attempt == 1 ? std::nullopt : std::optional<std::string>(last_failure);

        Completion completion = provider.plan(bundle, build_prompt(bundle));
        total += completion.usage;

        TraversalPlan plan;
        try {
            plan = parse_plan(completion.text);
        } catch (const PlanFormatError& e) {
            last_failure = e.what();
            last_report.reset();
            continue;
        }

        VerificationReport report =
            verify_plan(plan, schema, config.action_catalog, {config.max_hops});
        if (report.pass) {
            return {std::move(plan), std::move(report), attempt, total, rejections};
        }
        ++rejections;
        last_failure = feedback_for_retry(report);
        last_report = std::move(report);
    }

    throw PlanningExhausted("planning exhausted after " + std::to_string(max_attempts) +
                                " attempts; last failure:\n" + last_failure,
                            max_attempts, std::move(last_report), total);
}

}  // namespace kgt
