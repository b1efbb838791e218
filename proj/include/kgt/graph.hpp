#pragma once
// Typed, attributed, directed multigraph with a declared or inferred schema.
// Immutable after load; all traversal actions read through the adjacency
// index built here.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace kgt {

using NodeId = std::string;

struct Node {
    NodeId id;
    std::string node_type;
    std::map<std::string, std::string> attributes;  // key -> text value
};

struct Edge {
    NodeId source;
    NodeId target;
    std::string edge_type;
};

struct EdgeTypeRecord {
    std::string name;
    std::string source;  // node type
    std::string target;  // node type
    bool bidirectional = true;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Catalog of node types (with observed attribute keys) and edge-type records.
// This is the verifier's ground truth.
struct GraphSchema {
    std::map<std::string, std::vector<std::string>> node_types;  // type -> sorted attr keys
    std::vector<EdgeTypeRecord> edge_types;                      // sorted by (name, source, target)

    bool has_node_type(const std::string& t) const { return node_types.count(t) > 0; }
    bool has_edge_type(const std::string& name) const;

    // Unique per (name, source, target); nullptr when absent.
    const EdgeTypeRecord* find_record(const std::string& name, const std::string& source,
                                      const std::string& target) const;
    std::vector<const EdgeTypeRecord*> records_named(const std::string& name) const;

    // Throws SchemaViolation on undeclared endpoints or duplicate triples.
    void validate() const;

    nlohmann::json to_json() const;
    static GraphSchema from_json(const nlohmann::json& doc);
};

// node_types = distinct observed types (attr keys unioned per type);
// edge_types = distinct (type, source type, target type) triples, bidirectional
// by default. Throws SchemaViolation on dangling edge references.
GraphSchema infer_schema(const std::vector<Node>& nodes, const std::vector<Edge>& edges);

class KnowledgeGraph {
public:
    // Builds indexes and validates every instance invariant. A provided schema
    // wins over inference and the instance is validated against it.
    static KnowledgeGraph build(std::vector<Node> nodes, std::vector<Edge> edges,
                                std::optional<GraphSchema> schema = std::nullopt);

    // Graph file format: {"schema"?: {...}, "nodes": [...], "edges": [...]}.
    static KnowledgeGraph load(const nlohmann::json& doc);
    static KnowledgeGraph load_text(const std::string& text);
    static KnowledgeGraph load_file(const std::string& path);

    nlohmann::json to_json() const;

    const GraphSchema& schema() const { return schema_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::unordered_map<NodeId, Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    bool has_node(const NodeId& id) const { return nodes_.count(id) > 0; }
    const Node& node(const NodeId& id) const;

    // Node ids of a type, ascending. The type must be declared in the schema.
    const std::vector<NodeId>& nodes_of_type(const std::string& node_type) const;

    // All u sharing an edge of the given type with v: out-edges always,
    // in-edges when the matching schema record is bidirectional.
    std::set<NodeId> neighbors(const NodeId& v, const std::string& edge_type) const;

    // Union of neighbors over every edge type; the multi-hop frontier.
    std::set<NodeId> neighbors_any(const NodeId& v) const;

    // Rebuilds the adjacency index from the edge list and compares.
    bool adjacency_consistent() const;

private:
    KnowledgeGraph() = default;
    void build_indexes();
    void validate_against_schema() const;

    std::unordered_map<NodeId, Node> nodes_;
    std::vector<Edge> edges_;
    GraphSchema schema_;

    using AdjacencyIndex = std::unordered_map<NodeId, std::map<std::string, std::set<NodeId>>>;
    AdjacencyIndex out_;  // v -> edge type -> targets
    AdjacencyIndex in_;   // v -> edge type -> sources
    std::map<std::string, std::vector<NodeId>> by_type_;
};

// Converts the benchmark on-disk layout (a map of node id -> {"type", "features",
// "neighbors": {relation: [ids]}}) into the native graph document.
nlohmann::json adapt_grbench(const nlohmann::json& doc);

}  // namespace kgt
