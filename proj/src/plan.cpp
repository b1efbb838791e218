#include "kgt/plan.hpp"

#include <algorithm>
#include <set>

namespace kgt {

using nlohmann::json;

const std::vector<std::string>& default_action_catalog() {
    static const std::vector<std::string> catalog = {kActionFindNode, kActionFetchNeighbors,
                                                     kActionFindCommonNodes};
    return catalog;
}

namespace {

std::string require_string(const json& doc, const char* key, const std::string& where) {
    if (!doc.contains(key) || !doc.at(key).is_string()) {
        throw PlanFormatError(where + ": missing string field '" + key + "'");
    }
    return doc.at(key).get<std::string>();
}

TraversalParam parse_traversal_param(const json& doc, const std::string& where) {
    if (!doc.is_object()) throw PlanFormatError(where + ": 'param' must be an object");
    std::string kind = require_string(doc, "kind", where);
    TraversalParam param;
    if (kind == "edge-type") {
        param.kind = ParamKind::edge_type;
    } else if (kind == "node-type") {
        param.kind = ParamKind::node_type;
    } else {
        throw PlanFormatError(where + ": param kind must be 'edge-type' or 'node-type', got '" + kind +
                              "'");
    }
    param.name = require_string(doc, "name", where);
    if (param.name.empty()) throw PlanFormatError(where + ": param name must be non-empty");
    return param;
}

PlanStep parse_step(const json& doc) {
    if (!doc.is_object()) throw PlanFormatError("plan step must be an object");
    PlanStep step;
    step.id = require_string(doc, "id", "plan step");
    if (step.id.empty()) throw PlanFormatError("plan step has an empty id");
    const std::string where = "step '" + step.id + "'";
    step.action = require_string(doc, "action", where);
    json params = doc.value("params", json::object());
    if (!params.is_object()) throw PlanFormatError(where + ": 'params' must be an object");

    if (step.action == kActionFindNode) {
        FindNodeParams p;
        p.hint = require_string(params, "hint", where);
        p.node_type = require_string(params, "node_type", where);
        if (p.hint.empty()) throw PlanFormatError(where + ": hint must be non-empty");
        if (p.node_type.empty()) throw PlanFormatError(where + ": node_type must be non-empty");
        step.params = std::move(p);
    } else if (step.action == kActionFetchNeighbors) {
        FetchNeighborsParams p;
        p.source.step_id = require_string(params, "source", where);
        if (!params.contains("param")) throw PlanFormatError(where + ": missing 'param'");
        p.param = parse_traversal_param(params.at("param"), where);
        if (params.contains("max_hops")) {
            if (!params.at("max_hops").is_number_integer()) {
                throw PlanFormatError(where + ": max_hops must be an integer");
            }
            p.max_hops = params.at("max_hops").get<int>();
            if (*p.max_hops < 1) throw PlanFormatError(where + ": max_hops must be >= 1");
        }
        step.params = std::move(p);
    } else if (step.action == kActionFindCommonNodes) {
        FindCommonNodesParams p;
        if (!params.contains("inputs") || !params.at("inputs").is_array()) {
            throw PlanFormatError(where + ": missing 'inputs' array");
        }
        for (const auto& input : params.at("inputs")) {
            std::pair<StepRef, std::string> entry;
            entry.first.step_id = require_string(input, "source", where);
            entry.second = require_string(input, "edge_type", where);
            p.inputs.push_back(std::move(entry));
        }
        if (p.inputs.size() < 2) {
            throw PlanFormatError(where + ": find_common_nodes requires at least 2 inputs");
        }
        step.params = std::move(p);
    } else {
        // Unknown actions survive parsing; the verifier reports them.
        step.params = UnknownActionParams{params};
    }
    return step;
}

}  // namespace

void validate_plan_structure(const TraversalPlan& plan) {
    if (plan.steps.empty()) throw PlanFormatError("plan must contain at least one step");
    if (plan.steps.front().action != kActionFindNode) {
        throw PlanFormatError("first step must be find_node, got '" + plan.steps.front().action +
                              "' at step '" + plan.steps.front().id + "'");
    }

    std::set<std::string> earlier;
    for (const auto& step : plan.steps) {
        if (step.id.empty()) throw PlanFormatError("plan step has an empty id");
        if (earlier.count(step.id) > 0) throw PlanFormatError("duplicate step id '" + step.id + "'");

        auto check_ref = [&](const StepRef& ref) {
            if (ref.step_id == step.id) {
                throw PlanFormatError("step '" + step.id + "' references itself");
            }
            if (earlier.count(ref.step_id) == 0) {
                throw PlanFormatError("step '" + step.id + "' references '" + ref.step_id +
                                      "', which is not an earlier step");
            }
        };
        if (const auto* p = std::get_if<FetchNeighborsParams>(&step.params)) {
            check_ref(p->source);
        } else if (const auto* p = std::get_if<FindCommonNodesParams>(&step.params)) {
            for (const auto& [ref, edge_type] : p->inputs) check_ref(ref);
        }
        earlier.insert(step.id);
    }
}

TraversalPlan plan_from_json(const json& doc) {
    if (!doc.is_object()) throw PlanFormatError("plan document must be a JSON object");
    TraversalPlan plan;
    plan.query = require_string(doc, "query", "plan document");
    if (doc.contains("rationale") && !doc.at("rationale").is_null()) {
        if (!doc.at("rationale").is_string()) {
            throw PlanFormatError("plan 'rationale' must be a string");
        }
        plan.rationale = doc.at("rationale").get<std::string>();
    }
    if (!doc.contains("steps") || !doc.at("steps").is_array()) {
        throw PlanFormatError("plan document requires a 'steps' array");
    }
    for (const auto& step_doc : doc.at("steps")) plan.steps.push_back(parse_step(step_doc));
    validate_plan_structure(plan);
    return plan;
}

namespace {

// First balanced top-level JSON object containing a "steps" array, scanning
// past prose, fences, and non-plan objects.
std::optional<json> extract_plan_document(const std::string& text) {
    for (std::size_t start = text.find('{'); start != std::string::npos;
         start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    json doc = json::parse(text.substr(start, i - start + 1), nullptr, false);
                    if (doc.is_object() && doc.contains("steps") && doc.at("steps").is_array()) {
                        return doc;
                    }
                    break;  // balanced but not a plan document; try the next '{'
                }
            }
        }
    }
    return std::nullopt;
}

}  // namespace

TraversalPlan parse_plan(const std::string& text) {
    auto doc = extract_plan_document(text);
    if (!doc.has_value()) {
        throw PlanFormatError(
            "no plan document found: reply must contain a JSON object with a 'steps' array");
    }
    return plan_from_json(*doc);
}

json plan_to_json(const TraversalPlan& plan) {
    json steps = json::array();
    for (const auto& step : plan.steps) {
        json params;
        if (const auto* p = std::get_if<FindNodeParams>(&step.params)) {
            params = {{"hint", p->hint}, {"node_type", p->node_type}};
        } else if (const auto* p = std::get_if<FetchNeighborsParams>(&step.params)) {
            params = {{"source", p->source.step_id},
                      {"param",
                       {{"kind", p->param.kind == ParamKind::edge_type ? "edge-type" : "node-type"},
                        {"name", p->param.name}}}};
            if (p->max_hops.has_value()) params["max_hops"] = *p->max_hops;
        } else if (const auto* p = std::get_if<FindCommonNodesParams>(&step.params)) {
            json inputs = json::array();
            for (const auto& [ref, edge_type] : p->inputs) {
                inputs.push_back({{"source", ref.step_id}, {"edge_type", edge_type}});
            }
            params = {{"inputs", inputs}};
        } else {
            params = std::get<UnknownActionParams>(step.params).raw;
        }
        steps.push_back({{"id", step.id}, {"action", step.action}, {"params", params}});
    }
    json doc = {{"query", plan.query}, {"steps", steps}};
    if (plan.rationale.has_value()) doc["rationale"] = *plan.rationale;
    return doc;
}

std::string serialize_plan(const TraversalPlan& plan) { return plan_to_json(plan).dump(2); }

}  // namespace kgt
