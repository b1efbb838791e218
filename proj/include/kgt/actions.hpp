#pragma once
// The three traversal actions, each a pure function of an immutable graph.

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kgt/graph.hpp"
#include "kgt/similarity.hpp"

namespace kgt {

struct NodeFindingHint {
    std::string text;
};

enum class ParamKind { edge_type, node_type };

struct TraversalParam {
    ParamKind kind = ParamKind::edge_type;
    std::string name;
};

inline constexpr std::size_t kDefaultStepResultCap = 200;
inline constexpr int kDefaultMaxHops = 3;

struct NodeSet {
    std::set<NodeId> members;
    std::string provenance;        // producing step id, filled by the executor
    bool below_threshold = false;  // no candidate reached theta; best scorer returned
    bool no_candidates = false;    // the graph has no node of the requested type
    bool truncated = false;        // result cap applied (ascending-id prefix kept)
};

// Nodes of the given type whose canonical text scores >= theta against the
// hint, best scores first, capped at top_k. Falls back to the single best
// scorer (flagged) when nothing reaches theta.
NodeSet find_node(const KnowledgeGraph& graph, const NodeFindingHint& hint,
                  const std::string& node_type, const EmbeddingProvider& provider,
                  const SimilarityConfig& config, std::size_t result_cap = kDefaultStepResultCap);

// Edge-type param: one-hop union of neighbors over the sources.
// Node-type param: nodes of the target type reachable in 1..max_hops hops,
// stopping each branch at the first target-type node; sources excluded.
NodeSet fetch_neighbors(const KnowledgeGraph& graph, const NodeSet& sources,
                        const TraversalParam& param, int max_hops = kDefaultMaxHops,
                        std::size_t result_cap = kDefaultStepResultCap);

// Intersection over inputs of the union-of-neighbors along each input's
// edge type. Requires at least two inputs.
NodeSet find_common_nodes(const KnowledgeGraph& graph,
                          const std::vector<std::pair<NodeSet, std::string>>& inputs,
                          std::size_t result_cap = kDefaultStepResultCap);

}  // namespace kgt
