#include "kgt/actions.hpp"

#include <algorithm>
#include <deque>

namespace kgt {

namespace {

void apply_result_cap(NodeSet& set, std::size_t result_cap) {
    if (result_cap == 0 || set.members.size() <= result_cap) return;
    auto it = set.members.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(result_cap));
    set.members.erase(it, set.members.end());
    set.truncated = true;
}

}  // namespace

NodeSet find_node(const KnowledgeGraph& graph, const NodeFindingHint& hint,
                  const std::string& node_type, const EmbeddingProvider& provider,
                  const SimilarityConfig& config, std::size_t result_cap) {
    if (hint.text.empty()) throw std::invalid_argument("node finding hint must be non-empty");
    if (config.top_k < 1) throw std::invalid_argument("top_k must be >= 1");
    if (config.theta < -1.0 || config.theta > 1.0) {
        throw std::invalid_argument("theta must lie in [-1, 1]");
    }

    const std::vector<NodeId>& candidates = graph.nodes_of_type(node_type);  // throws on unknown type
    NodeSet result;
    if (candidates.empty()) {
        result.no_candidates = true;
        return result;
    }

    EmbeddingVector hint_vec = provider.embed(hint.text);

    // Score every candidate; descending score, ascending id on ties.
    std::vector<std::pair<double, NodeId>> scored;
    scored.reserve(candidates.size());
    for (const NodeId& id : candidates) {
        double score = similarity(hint_vec, provider.embed(canonical_node_text(graph.node(id))));
        scored.emplace_back(score, id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    for (const auto& [score, id] : scored) {
        if (score < config.theta) break;
        if (result.members.size() >= config.top_k) break;
        result.members.insert(id);
    }
    if (result.members.empty()) {
        result.members.insert(scored.front().second);
        result.below_threshold = true;
    }
    apply_result_cap(result, result_cap);
    return result;
}

NodeSet fetch_neighbors(const KnowledgeGraph& graph, const NodeSet& sources,
                        const TraversalParam& param, int max_hops, std::size_t result_cap) {
    if (sources.members.empty()) throw std::invalid_argument("fetch_neighbors requires non-empty sources");

    NodeSet result;
    if (param.kind == ParamKind::edge_type) {
        if (!graph.schema().has_edge_type(param.name)) {
            throw std::invalid_argument("unknown edge type '" + param.name + "'");
        }
        for (const NodeId& v : sources.members) {
            auto ns = graph.neighbors(v, param.name);
            result.members.insert(ns.begin(), ns.end());
        }
        apply_result_cap(result, result_cap);
        return result;
    }

    // Node-type case: bounded multi-source BFS. Sources always expand;
    // any later node of the target type is a terminal and never expands.
    if (!graph.schema().has_node_type(param.name)) {
        throw std::invalid_argument("unknown node type '" + param.name + "'");
    }
    if (max_hops < 1) throw std::invalid_argument("max_hops must be >= 1");

    std::set<NodeId> visited(sources.members.begin(), sources.members.end());
    std::deque<NodeId> frontier(sources.members.begin(), sources.members.end());
    for (int depth = 1; depth <= max_hops && !frontier.empty(); ++depth) {
        std::deque<NodeId> next;
        for (const NodeId& v : frontier) {
            for (const NodeId& u : graph.neighbors_any(v)) {
                if (!visited.insert(u).second) continue;
                if (graph.node(u).node_type == param.name) {
                    result.members.insert(u);  // terminal: collected, not expanded
                } else {
                    next.push_back(u);
                }
            }
        }
        frontier = std::move(next);
    }
    for (const NodeId& v : sources.members) result.members.erase(v);
    apply_result_cap(result, result_cap);
    return result;
}

NodeSet find_common_nodes(const KnowledgeGraph& graph,
                          const std::vector<std::pair<NodeSet, std::string>>& inputs,
                          std::size_t result_cap) {
    if (inputs.size() < 2) {
        throw std::invalid_argument("find_common_nodes requires at least 2 inputs, got " +
                                    std::to_string(inputs.size()));
    }

    for (const auto& [sources, edge_type] : inputs) {
        if (!graph.schema().has_edge_type(edge_type)) {
            throw std::invalid_argument("unknown edge type '" + edge_type + "'");
        }
    }

    NodeSet result;
    bool first = true;
    for (const auto& [sources, edge_type] : inputs) {
        std::set<NodeId> reached;
        for (const NodeId& v : sources.members) {
            auto ns = graph.neighbors(v, edge_type);
            reached.insert(ns.begin(), ns.end());
        }
        if (first) {
            result.members = std::move(reached);
            first = false;
        } else {
            std::set<NodeId> kept;
            std::set_intersection(result.members.begin(), result.members.end(), reached.begin(),
                                  reached.end(), std::inserter(kept, kept.begin()));
            result.members = std::move(kept);
        }
        if (result.members.empty()) break;  // intersection can only shrink
    }
    apply_result_cap(result, result_cap);
    return result;
}

}  // namespace kgt
