#pragma once
// The traversal-plan language: step records, lenient parsing of planner
// output, canonical serialization, and structural validation.
//
// Wire format:
//   {"query": str, "rationale": str?, "steps": [
//       {"id": str, "action": str, "params": {...}}]}
// find_node params:          {"hint": str, "node_type": str}
// fetch_neighbors params:    {"source": str, "param": {"kind": "edge-type"|"node-type",
//                             "name": str}, "max_hops": int?}
// find_common_nodes params:  {"inputs": [{"source": str, "edge_type": str}, ...]}

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgt/actions.hpp"

namespace kgt {

inline constexpr const char* kActionFindNode = "find_node";
inline constexpr const char* kActionFetchNeighbors = "fetch_neighbors";
inline constexpr const char* kActionFindCommonNodes = "find_common_nodes";

// The pre-defined action catalog the verifier checks against.
const std::vector<std::string>& default_action_catalog();

struct StepRef {
    std::string step_id;  // must name an earlier step
};

struct FindNodeParams {
    std::string hint;
    std::string node_type;
};

struct FetchNeighborsParams {
    StepRef source;
    TraversalParam param;
    std::optional<int> max_hops;
};

struct FindCommonNodesParams {
    std::vector<std::pair<StepRef, std::string>> inputs;  // (source step, edge type)
};

// Kept verbatim for actions outside the catalog so the verifier can report
// them instead of the parser rejecting the whole plan.
struct UnknownActionParams {
    nlohmann::json raw;
};

struct PlanStep {
    std::string id;
    std::string action;
    std::variant<FindNodeParams, FetchNeighborsParams, FindCommonNodesParams, UnknownActionParams> params;
};

struct TraversalPlan {
    std::string query;
    std::optional<std::string> rationale;
    std::vector<PlanStep> steps;
};

// Carries planner-readable feedback for the regeneration loop.
class PlanFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Extracts the first well-formed plan document from free-form planner output
// (prose and code fences tolerated) and validates every structural invariant.
TraversalPlan parse_plan(const std::string& text);

// Canonical document; structurally equal plans serialize byte-identically and
// parse_plan(serialize_plan(p)) reproduces p field for field.
std::string serialize_plan(const TraversalPlan& plan);
nlohmann::json plan_to_json(const TraversalPlan& plan);
TraversalPlan plan_from_json(const nlohmann::json& doc);

// Throws PlanFormatError naming the broken invariant and step.
void validate_plan_structure(const TraversalPlan& plan);

}  // namespace kgt
