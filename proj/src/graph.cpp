#include "kgt/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace kgt {

using nlohmann::json;

bool GraphSchema::has_edge_type(const std::string& name) const {
    return std::any_of(edge_types.begin(), edge_types.end(),
                       [&](const EdgeTypeRecord& r) { return r.name == name; });
}

const EdgeTypeRecord* GraphSchema::find_record(const std::string& name, const std::string& source,
                                               const std::string& target) const {
    for (const auto& r : edge_types) {
        if (r.name == name && r.source == source && r.target == target) return &r;
    }
    return nullptr;
}

std::vector<const EdgeTypeRecord*> GraphSchema::records_named(const std::string& name) const {
    std::vector<const EdgeTypeRecord*> out;
    for (const auto& r : edge_types) {
        if (r.name == name) out.push_back(&r);
    }
    return out;
}

void GraphSchema::validate() const {
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& r : edge_types) {
        if (!has_node_type(r.source)) {
            throw SchemaViolation("edge type '" + r.name + "' references undeclared source node type '" +
                                  r.source + "'");
        }
        if (!has_node_type(r.target)) {
            throw SchemaViolation("edge type '" + r.name + "' references undeclared target node type '" +
                                  r.target + "'");
        }
        auto triple = std::make_tuple(r.name, r.source, r.target);
        if (!seen.insert(triple).second) {
            throw SchemaViolation("duplicate edge type record (" + r.name + ", " + r.source + ", " +
                                  r.target + ")");
        }
    }
}

json GraphSchema::to_json() const {
    json node_types_doc = json::object();
    for (const auto& [type, keys] : node_types) node_types_doc[type] = keys;
    json edge_types_doc = json::array();
    for (const auto& r : edge_types) {
        edge_types_doc.push_back({{"name", r.name},
                                  {"source", r.source},
                                  {"target", r.target},
                                  {"bidirectional", r.bidirectional}});
    }
    return {{"node_types", node_types_doc}, {"edge_types", edge_types_doc}};
}

GraphSchema GraphSchema::from_json(const json& doc) {
    GraphSchema schema;
    if (!doc.is_object()) throw ParseError("schema must be an object");
    for (const auto& [type, keys] : doc.at("node_types").items()) {
        std::vector<std::string> attr_keys = keys.get<std::vector<std::string>>();
        std::sort(attr_keys.begin(), attr_keys.end());
        attr_keys.erase(std::unique(attr_keys.begin(), attr_keys.end()), attr_keys.end());
        schema.node_types[type] = std::move(attr_keys);
    }
    for (const auto& rec : doc.at("edge_types")) {
        EdgeTypeRecord r;
        r.name = rec.at("name").get<std::string>();
        r.source = rec.at("source").get<std::string>();
        r.target = rec.at("target").get<std::string>();
        r.bidirectional = rec.value("bidirectional", true);
        schema.edge_types.push_back(std::move(r));
    }
    std::sort(schema.edge_types.begin(), schema.edge_types.end(), [](const auto& a, const auto& b) {
        return std::tie(a.name, a.source, a.target) < std::tie(b.name, b.source, b.target);
    });
    schema.validate();
    return schema;
}

GraphSchema infer_schema(const std::vector<Node>& nodes, const std::vector<Edge>& edges) {
    GraphSchema schema;
    std::unordered_map<NodeId, const Node*> by_id;
    for (const auto& n : nodes) by_id[n.id] = &n;

    std::map<std::string, std::set<std::string>> keys_by_type;
    for (const auto& n : nodes) {
        auto& keys = keys_by_type[n.node_type];
        for (const auto& [k, v] : n.attributes) keys.insert(k);
    }
    for (const auto& [type, keys] : keys_by_type) {
        schema.node_types[type] = std::vector<std::string>(keys.begin(), keys.end());
    }

    std::set<std::tuple<std::string, std::string, std::string>> triples;
    for (const auto& e : edges) {
        auto src = by_id.find(e.source);
        auto tgt = by_id.find(e.target);
        if (src == by_id.end()) {
            throw SchemaViolation("edge '" + e.edge_type + "' references missing node '" + e.source + "'");
        }
        if (tgt == by_id.end()) {
            throw SchemaViolation("edge '" + e.edge_type + "' references missing node '" + e.target + "'");
        }
        triples.insert({e.edge_type, src->second->node_type, tgt->second->node_type});
    }
    for (const auto& [name, source, target] : triples) {
        schema.edge_types.push_back({name, source, target, true});
    }
    return schema;
}

const Node& KnowledgeGraph::node(const NodeId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw std::invalid_argument("unknown node '" + id + "'");
    return it->second;
}

const std::vector<NodeId>& KnowledgeGraph::nodes_of_type(const std::string& node_type) const {
    if (!schema_.has_node_type(node_type)) {
        throw std::invalid_argument("unknown node type '" + node_type + "'");
    }
    static const std::vector<NodeId> empty;
    auto it = by_type_.find(node_type);
    return it == by_type_.end() ? empty : it->second;
}

std::set<NodeId> KnowledgeGraph::neighbors(const NodeId& v, const std::string& edge_type) const {
    auto node_it = nodes_.find(v);
    if (node_it == nodes_.end()) throw std::invalid_argument("unknown node '" + v + "'");
    if (!schema_.has_edge_type(edge_type)) {
        throw std::invalid_argument("unknown edge type '" + edge_type + "'");
    }

    std::set<NodeId> result;
    if (auto out_it = out_.find(v); out_it != out_.end()) {
        if (auto type_it = out_it->second.find(edge_type); type_it != out_it->second.end()) {
            result = type_it->second;
        }
    }
    if (auto in_it = in_.find(v); in_it != in_.end()) {
        if (auto type_it = in_it->second.find(edge_type); type_it != in_it->second.end()) {
            const std::string& target_type = node_it->second.node_type;
            for (const NodeId& u : type_it->second) {
                const EdgeTypeRecord* rec =
                    schema_.find_record(edge_type, nodes_.at(u).node_type, target_type);
                if (rec != nullptr && rec->bidirectional) result.insert(u);
            }
        }
    }
    return result;
}

std::set<NodeId> KnowledgeGraph::neighbors_any(const NodeId& v) const {
    auto node_it = nodes_.find(v);
    if (node_it == nodes_.end()) throw std::invalid_argument("unknown node '" + v + "'");

    std::set<NodeId> result;
    if (auto out_it = out_.find(v); out_it != out_.end()) {
        for (const auto& [type, targets] : out_it->second) result.insert(targets.begin(), targets.end());
    }
    if (auto in_it = in_.find(v); in_it != in_.end()) {
        const std::string& target_type = node_it->second.node_type;
        for (const auto& [type, sources] : in_it->second) {
            for (const NodeId& u : sources) {
                const EdgeTypeRecord* rec = schema_.find_record(type, nodes_.at(u).node_type, target_type);
                if (rec != nullptr && rec->bidirectional) result.insert(u);
            }
        }
    }
    return result;
}

void KnowledgeGraph::build_indexes() {
    out_.clear();
    in_.clear();
    by_type_.clear();
    for (const auto& e : edges_) {
        out_[e.source][e.edge_type].insert(e.target);
        in_[e.target][e.edge_type].insert(e.source);
    }
    for (const auto& [id, n] : nodes_) by_type_[n.node_type].push_back(id);
    for (auto& [type, ids] : by_type_) std::sort(ids.begin(), ids.end());
}

bool KnowledgeGraph::adjacency_consistent() const {
    AdjacencyIndex out, in;
    for (const auto& e : edges_) {
        out[e.source][e.edge_type].insert(e.target);
        in[e.target][e.edge_type].insert(e.source);
    }
    return out == out_ && in == in_;
}

void KnowledgeGraph::validate_against_schema() const {
    schema_.validate();
    for (const auto& [id, n] : nodes_) {
        if (id.empty()) throw SchemaViolation("node with empty id");
        if (!schema_.has_node_type(n.node_type)) {
            throw SchemaViolation("node '" + id + "' has undeclared type '" + n.node_type + "'");
        }
        for (const auto& [k, v] : n.attributes) {
            if (k.empty()) throw SchemaViolation("node '" + id + "' has an empty attribute key");
        }
    }
    for (const auto& e : edges_) {
        auto src = nodes_.find(e.source);
        auto tgt = nodes_.find(e.target);
        if (src == nodes_.end()) {
            throw SchemaViolation("edge '" + e.edge_type + "' references missing node '" + e.source + "'");
        }
        if (tgt == nodes_.end()) {
            throw SchemaViolation("edge '" + e.edge_type + "' references missing node '" + e.target + "'");
        }
        const EdgeTypeRecord* rec =
            schema_.find_record(e.edge_type, src->second.node_type, tgt->second.node_type);
        if (rec == nullptr) {
            throw SchemaViolation("edge (" + e.source + " -[" + e.edge_type + "]-> " + e.target +
                                  ") has no schema record for (" + e.edge_type + ", " +
                                  src->second.node_type + ", " + tgt->second.node_type + ")");
        }
    }
}

KnowledgeGraph KnowledgeGraph::build(std::vector<Node> nodes, std::vector<Edge> edges,
                                     std::optional<GraphSchema> schema) {
    KnowledgeGraph g;
    for (auto& n : nodes) {
        if (n.id.empty()) throw SchemaViolation("node with empty id");
        if (g.nodes_.count(n.id) > 0) throw SchemaViolation("duplicate node id '" + n.id + "'");
        g.nodes_[n.id] = std::move(n);
    }

    // Parallel edges of the same type collapse; different types may coexist.
    std::set<std::tuple<NodeId, NodeId, std::string>> seen;
    for (auto& e : edges) {
        if (seen.insert({e.source, e.target, e.edge_type}).second) {
            g.edges_.push_back(std::move(e));
        }
    }

    if (schema.has_value()) {
        g.schema_ = std::move(*schema);
    } else {
        std::vector<Node> node_list;
        node_list.reserve(g.nodes_.size());
        for (const auto& [id, n] : g.nodes_) node_list.push_back(n);
        g.schema_ = infer_schema(node_list, g.edges_);
    }
    g.validate_against_schema();
    g.build_indexes();
    return g;
}

KnowledgeGraph KnowledgeGraph::load(const json& doc) {
    if (!doc.is_object()) throw ParseError("graph document must be a JSON object");
    if (!doc.contains("nodes") || !doc.contains("edges")) {
        throw ParseError("graph document requires 'nodes' and 'edges' keys");
    }

    std::vector<Node> nodes;
    for (const auto& rec : doc.at("nodes")) {
        Node n;
        n.id = rec.at("id").get<std::string>();
        n.node_type = rec.at("type").get<std::string>();
        if (rec.contains("attributes")) {
            for (const auto& [k, v] : rec.at("attributes").items()) {
                n.attributes[k] = v.get<std::string>();
            }
        }
        nodes.push_back(std::move(n));
    }

    std::vector<Edge> edges;
    for (const auto& rec : doc.at("edges")) {
        edges.push_back({rec.at("source").get<std::string>(), rec.at("target").get<std::string>(),
                         rec.at("type").get<std::string>()});
    }

    std::optional<GraphSchema> schema;
    if (doc.contains("schema") && !doc.at("schema").is_null()) {
        schema = GraphSchema::from_json(doc.at("schema"));
    }
    return build(std::move(nodes), std::move(edges), std::move(schema));
}

KnowledgeGraph KnowledgeGraph::load_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed graph file: ") + e.what());
    }
    return load(doc);
}

KnowledgeGraph KnowledgeGraph::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open graph file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_text(buf.str());
}

json KnowledgeGraph::to_json() const {
    json nodes_doc = json::array();
    std::vector<NodeId> ids;
    ids.reserve(nodes_.size());
    for (const auto& [id, n] : nodes_) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    for (const NodeId& id : ids) {
        const Node& n = nodes_.at(id);
        json attrs = json::object();
        for (const auto& [k, v] : n.attributes) attrs[k] = v;
        nodes_doc.push_back({{"id", n.id}, {"type", n.node_type}, {"attributes", attrs}});
    }

    std::vector<Edge> sorted_edges = edges_;
    std::sort(sorted_edges.begin(), sorted_edges.end(), [](const Edge& a, const Edge& b) {
        return std::tie(a.source, a.edge_type, a.target) < std::tie(b.source, b.edge_type, b.target);
    });
    json edges_doc = json::array();
    for (const auto& e : sorted_edges) {
        edges_doc.push_back({{"source", e.source}, {"target", e.target}, {"type", e.edge_type}});
    }
    return {{"schema", schema_.to_json()}, {"nodes", nodes_doc}, {"edges", edges_doc}};
}

json adapt_grbench(const json& doc) {
    const json* node_map = &doc;
    if (doc.is_object() && doc.contains("nodes") && doc.at("nodes").is_object()) {
        node_map = &doc.at("nodes");
    }
    if (!node_map->is_object()) {
        throw ParseError("benchmark layout: expected an object mapping node id to node record");
    }

    json nodes = json::array();
    json edges = json::array();
    for (const auto& [id, rec] : node_map->items()) {
        json node = {{"id", id}};
        node["type"] = rec.contains("type") ? rec.at("type").get<std::string>() : "node";
        json attrs = json::object();
        if (rec.contains("features") && rec.at("features").is_object()) {
            for (const auto& [k, v] : rec.at("features").items()) {
                attrs[k] = v.is_string() ? v.get<std::string>() : v.dump();
            }
        }
        node["attributes"] = attrs;
        nodes.push_back(std::move(node));

        if (rec.contains("neighbors") && rec.at("neighbors").is_object()) {
            for (const auto& [relation, targets] : rec.at("neighbors").items()) {
                if (!targets.is_array()) continue;
                for (const auto& t : targets) {
                    std::string target = t.is_string() ? t.get<std::string>() : t.dump();
                    edges.push_back({{"source", id}, {"target", target}, {"type", relation}});
                }
            }
        }
    }
    return {{"nodes", nodes}, {"edges", edges}};
}

}  // namespace kgt
