#include "kgt/verifier.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace kgt {

using nlohmann::json;

std::string to_string(FindingRule rule) {
    switch (rule) {
        case FindingRule::unknown_action: return "unknown-action";
        case FindingRule::bad_params: return "bad-params";
        case FindingRule::unknown_node_type: return "unknown-node-type";
        case FindingRule::unknown_edge_type: return "unknown-edge-type";
        case FindingRule::edge_not_connected_to_source_type:
            return "edge-not-connected-to-source-type";
        case FindingRule::target_type_unreachable: return "target-type-unreachable";
        case FindingRule::common_nodes_type_mismatch: return "common-nodes-type-mismatch";
    }
    return "unknown";
}

std::string to_string(Severity severity) {
    return severity == Severity::fatal ? "fatal" : "warning";
}

json VerificationReport::to_json() const {
    json findings_doc = json::array();
    for (const auto& f : findings) {
        findings_doc.push_back({{"step_id", f.step_id},
                                {"severity", to_string(f.severity)},
                                {"rule", to_string(f.rule)},
                                {"message", f.message}});
    }
    json type_state_doc = json::object();
    for (const auto& [step_id, types] : type_state) {
        type_state_doc[step_id] = std::vector<std::string>(types.begin(), types.end());
    }
    return {{"verdict", pass ? "pass" : "fail"},
            {"findings", findings_doc},
            {"type_state", type_state_doc}};
}

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += sep;
        out += items[i];
    }
    return out;
}

std::string join(const std::set<std::string>& items, const std::string& sep) {
    return join(std::vector<std::string>(items.begin(), items.end()), sep);
}

// Edge-type names usable from any of the given source types, honoring the
// bidirectional flag. Used for "valid alternatives" in messages.
std::set<std::string> edges_leaving(const GraphSchema& schema, const std::set<std::string>& sources) {
    std::set<std::string> names;
    for (const auto& r : schema.edge_types) {
        if (sources.count(r.source) > 0 || (r.bidirectional && sources.count(r.target) > 0)) {
            names.insert(r.name);
        }
    }
    return names;
}

// Target node types reached by following the named edge type from any of the
// given source types.
std::set<std::string> targets_of_edge(const GraphSchema& schema, const std::string& edge_name,
                                      const std::set<std::string>& sources) {
    std::set<std::string> targets;
    for (const auto* r : schema.records_named(edge_name)) {
        if (sources.count(r->source) > 0) targets.insert(r->target);
        if (r->bidirectional && sources.count(r->target) > 0) targets.insert(r->source);
    }
    return targets;
}

// BFS over the type-level graph; returns the minimum hop count from any
// source type to the target type, or -1 when unreachable within max_hops.
int type_distance(const GraphSchema& schema, const std::set<std::string>& sources,
                  const std::string& target, int max_hops) {
    // Source types always expand (|p| >= 1 means even a target-typed source
    // needs at least one hop); the target type itself never re-expands,
    // mirroring the instance-level stop rule.
    std::set<std::string> visited = sources;
    std::set<std::string> frontier = sources;
    for (int depth = 1; depth <= max_hops; ++depth) {
        std::set<std::string> next;
        for (const auto& r : schema.edge_types) {
            if (frontier.count(r.source) > 0) next.insert(r.target);
            if (r.bidirectional && frontier.count(r.target) > 0) next.insert(r.source);
        }
        if (next.count(target) > 0) return depth;
        std::set<std::string> fresh;
        for (const auto& t : next) {
            if (visited.insert(t).second && t != target) fresh.insert(t);
        }
        frontier = std::move(fresh);
        if (frontier.empty()) break;
    }
    return -1;
}

struct StepChecker {
    const GraphSchema& schema;
    const VerifyOptions& options;
    VerificationReport& report;
    TypeState& types;

    void fatal(const std::string& step_id, FindingRule rule, std::string message) {
        report.findings.push_back({step_id, Severity::fatal, rule, std::move(message)});
    }
    void warn(const std::string& step_id, FindingRule rule, std::string message) {
        report.findings.push_back({step_id, Severity::warning, rule, std::move(message)});
    }

    // Output types of an already-verified step; empty when that step failed,
    // in which case downstream checks are suppressed to keep feedback focused.
    std::set<std::string> source_types(const StepRef& ref) const {
        auto it = types.find(ref.step_id);
        return it == types.end() ? std::set<std::string>{} : it->second;
    }

    void check_find_node(const PlanStep& step, const FindNodeParams& p) {
        if (p.hint.empty() || p.node_type.empty()) {
            fatal(step.id, FindingRule::bad_params,
                  "step '" + step.id + "': find_node requires a non-empty hint and node_type");
            return;
        }
        if (!schema.has_node_type(p.node_type)) {
            std::vector<std::string> known;
            for (const auto& [t, keys] : schema.node_types) known.push_back(t);
            fatal(step.id, FindingRule::unknown_node_type,
                  "step '" + step.id + "': node type '" + p.node_type +
                      "' is not in the schema; declared node types: " + join(known, ", "));
            return;
        }
        types[step.id] = {p.node_type};
    }

    void check_fetch_neighbors(const PlanStep& step, const FetchNeighborsParams& p) {
        auto sources = source_types(p.source);
        if (sources.empty()) return;  // upstream step already failed

        int max_hops = p.max_hops.value_or(options.default_max_hops);
        if (max_hops < 1) {
            fatal(step.id, FindingRule::bad_params,
                  "step '" + step.id + "': max_hops must be >= 1, got " + std::to_string(max_hops));
            return;
        }

        if (p.param.kind == ParamKind::edge_type) {
            if (!schema.has_edge_type(p.param.name)) {
                fatal(step.id, FindingRule::unknown_edge_type,
                      "step '" + step.id + "': edge type '" + p.param.name +
                          "' is not in the schema; edge types leaving {" + join(sources, ", ") +
                          "}: " + join(edges_leaving(schema, sources), ", "));
                return;
            }
            auto targets = targets_of_edge(schema, p.param.name, sources);
            if (targets.empty()) {
                fatal(step.id, FindingRule::edge_not_connected_to_source_type,
                      "step '" + step.id + "': edge type '" + p.param.name +
                          "' does not leave any of the possible source types {" + join(sources, ", ") +
                          "}; valid edge types there: " + join(edges_leaving(schema, sources), ", "));
                return;
            }
            types[step.id] = std::move(targets);
            return;
        }

        // node-type param: type-level reachability within max_hops
        if (!schema.has_node_type(p.param.name)) {
            std::vector<std::string> known;
            for (const auto& [t, keys] : schema.node_types) known.push_back(t);
            fatal(step.id, FindingRule::unknown_node_type,
                  "step '" + step.id + "': node type '" + p.param.name +
                      "' is not in the schema; declared node types: " + join(known, ", "));
            return;
        }
        int distance = type_distance(schema, sources, p.param.name, max_hops);
        if (distance < 0) {
            fatal(step.id, FindingRule::target_type_unreachable,
                  "step '" + step.id + "': node type '" + p.param.name +
                      "' is not reachable from the possible source types {" + join(sources, ", ") +
                      "} within " + std::to_string(max_hops) + " hops");
            return;
        }
        if (distance == max_hops) {
            warn(step.id, FindingRule::target_type_unreachable,
                 "step '" + step.id + "': node type '" + p.param.name +
                     "' is only reachable at exactly the max_hops bound (" + std::to_string(max_hops) +
                     "); the plan is fragile to hop-budget changes");
        }
        types[step.id] = {p.param.name};
    }

    void check_find_common_nodes(const PlanStep& step, const FindCommonNodesParams& p) {
        if (p.inputs.size() < 2) {
            fatal(step.id, FindingRule::bad_params,
                  "step '" + step.id + "': find_common_nodes requires at least 2 inputs");
            return;
        }
        std::set<std::string> intersection;
        bool first = true;
        for (const auto& [ref, edge_type] : p.inputs) {
            auto sources = source_types(ref);
            if (sources.empty()) return;  // upstream step already failed
            if (!schema.has_edge_type(edge_type)) {
                fatal(step.id, FindingRule::unknown_edge_type,
                      "step '" + step.id + "': edge type '" + edge_type +
                          "' is not in the schema; edge types leaving {" + join(sources, ", ") +
                          "}: " + join(edges_leaving(schema, sources), ", "));
                return;
            }
            auto targets = targets_of_edge(schema, edge_type, sources);
            if (targets.empty()) {
                fatal(step.id, FindingRule::edge_not_connected_to_source_type,
                      "step '" + step.id + "': edge type '" + edge_type +
                          "' does not leave any of the possible source types {" + join(sources, ", ") +
                          "}; valid edge types there: " + join(edges_leaving(schema, sources), ", "));
                return;
            }
            if (first) {
                intersection = std::move(targets);
                first = false;
            } else {
                std::set<std::string> kept;
                std::set_intersection(intersection.begin(), intersection.end(), targets.begin(),
                                      targets.end(), std::inserter(kept, kept.begin()));
                intersection = std::move(kept);
            }
        }
        if (intersection.empty()) {
            fatal(step.id, FindingRule::common_nodes_type_mismatch,
                  "step '" + step.id +
                      "': the inputs' neighbor types have an empty intersection; no node type can "
                      "be a common neighbor of all inputs");
            return;
        }
        types[step.id] = std::move(intersection);
    }
};

}  // namespace

VerificationReport verify_plan(const TraversalPlan& plan, const GraphSchema& schema,
                               const std::vector<std::string>& action_catalog,
                               const VerifyOptions& options) {
    VerificationReport report;
    StepChecker checker{schema, options, report, report.type_state};

    for (const auto& step : plan.steps) {
        // Validation step 1: action compatibility against the catalog.
        bool catalogued = std::find(action_catalog.begin(), action_catalog.end(), step.action) !=
                          action_catalog.end();
        if (!catalogued || std::holds_alternative<UnknownActionParams>(step.params)) {
            checker.fatal(step.id, FindingRule::unknown_action,
                          "step '" + step.id + "': action '" + step.action +
                              "' is not in the pre-defined action set {" + join(action_catalog, ", ") +
                              "}");
            continue;
        }

        // Validation step 2: schema compatibility via type propagation.
        if (const auto* p = std::get_if<FindNodeParams>(&step.params)) {
            checker.check_find_node(step, *p);
        } else if (const auto* p = std::get_if<FetchNeighborsParams>(&step.params)) {
            checker.check_fetch_neighbors(step, *p);
        } else if (const auto* p = std::get_if<FindCommonNodesParams>(&step.params)) {
            checker.check_find_common_nodes(step, *p);
        }
    }

    report.pass = std::none_of(report.findings.begin(), report.findings.end(),
                               [](const VerificationFinding& f) { return f.severity == Severity::fatal; });
    return report;
}

std::string feedback_for_retry(const VerificationReport& report) {
    if (report.pass) {
        throw std::logic_error("feedback_for_retry called on a passing report");
    }
    std::ostringstream out;
    bool first = true;
    for (const auto& f : report.findings) {
        if (f.severity != Severity::fatal) continue;
        if (!first) out << '\n';
        out << "step " << f.step_id << " [" << to_string(f.rule) << "]: " << f.message;
        first = false;
    }
    return out.str();
}

}  // namespace kgt
