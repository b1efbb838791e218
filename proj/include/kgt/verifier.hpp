#pragma once
// Static verification of a parsed plan against the action catalog and graph
// schema. Purely schema-level: instance data is never consulted, so a
// semantically wrong but structurally valid plan passes (and should).

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgt/graph.hpp"
#include "kgt/plan.hpp"

namespace kgt {

enum class Severity { fatal, warning };

enum class FindingRule {
    unknown_action,
    bad_params,
    unknown_node_type,
    unknown_edge_type,
    edge_not_connected_to_source_type,
    target_type_unreachable,
    common_nodes_type_mismatch,
};

std::string to_string(FindingRule rule);
std::string to_string(Severity severity);

struct VerificationFinding {
    std::string step_id;
    Severity severity = Severity::fatal;
    FindingRule rule = FindingRule::unknown_action;
    std::string message;  // names the offending identifier and valid alternatives
};

// Per-step set of possible output node types, as propagated by the verifier.
using TypeState = std::map<std::string, std::set<std::string>>;

struct VerificationReport {
    bool pass = false;  // true iff no fatal finding
    std::vector<VerificationFinding> findings;
    TypeState type_state;

    nlohmann::json to_json() const;
};

struct VerifyOptions {
    int default_max_hops = kDefaultMaxHops;  // bound for node-type reachability
};

VerificationReport verify_plan(const TraversalPlan& plan, const GraphSchema& schema,
                               const std::vector<std::string>& action_catalog = default_action_catalog(),
                               const VerifyOptions& options = {});

// Compact retry feedback: one line per fatal finding, plan order, nothing
// else. Throws std::logic_error on a passing report.
std::string feedback_for_retry(const VerificationReport& report);

}  // namespace kgt
