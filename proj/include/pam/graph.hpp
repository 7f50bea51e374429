#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pam/errors.hpp"

namespace pam {

using NodeId = uint32_t;
using RelationId = uint32_t;

// One directed typed edge (s, r, o).
struct Triple {
    NodeId head = 0;
    RelationId relation = 0;
    NodeId tail = 0;

    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        uint64_t a = (static_cast<uint64_t>(t.head) << 32) | t.tail;
        uint64_t h = a * 0x9e3779b97f4a7c15ull;
        h ^= (static_cast<uint64_t>(t.relation) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
        return static_cast<std::size_t>(h);
    }
};

// Name <-> id table with first-appearance ordering.
class Vocabulary {
public:
    uint32_t add(const std::string& name) {
        auto it = ids_.find(name);
        if (it != ids_.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(names_.size());
        names_.push_back(name);
        ids_.emplace(name, id);
        return id;
    }

    std::optional<uint32_t> find(const std::string& name) const {
        auto it = ids_.find(name);
        if (it == ids_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& name(uint32_t id) const { return names_.at(id); }
    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }
    bool empty() const { return names_.empty(); }

    bool operator==(const Vocabulary& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, uint32_t> ids_;
};

// A multi-relational graph: N nodes, R relation types, directed typed edges.
// Vocabularies are optional (graphs from indexed formats have none); when
// present their sizes equal the stored counts.
struct KnowledgeGraph {
    uint32_t node_count = 0;
    uint32_t relation_count = 0;
    std::vector<Triple> triples;
    bool directed = true;
    std::vector<uint32_t> node_labels;  // one label id per node; empty when unlabeled
    std::size_t duplicates_dropped = 0;

    Vocabulary nodes;      // optional
    Vocabulary relations;  // optional

    bool has_node_labels() const { return !node_labels.empty(); }
};

// Drops duplicate triples (first occurrence kept, order preserved) and, for
// undirected graphs, stores each edge with head <= tail. Returns the number
// of duplicates removed.
inline std::size_t normalize_triples(std::vector<Triple>& triples, bool directed) {
    if (!directed) {
        for (auto& t : triples) {
            if (t.head > t.tail) std::swap(t.head, t.tail);
        }
    }
    std::unordered_set<Triple, TripleHash> seen;
    seen.reserve(triples.size() * 2);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        if (seen.insert(triples[i]).second) {
            triples[kept++] = triples[i];
        }
    }
    std::size_t dropped = triples.size() - kept;
    triples.resize(kept);
    return dropped;
}

// Builds a graph from raw triples, validating ids and normalizing.
inline KnowledgeGraph make_graph(uint32_t node_count, uint32_t relation_count,
                                 std::vector<Triple> triples, bool directed = true) {
    for (const auto& t : triples) {
        if (t.head >= node_count || t.tail >= node_count) {
            throw ArgumentError("triple references node " +
                                std::to_string(std::max(t.head, t.tail)) + " outside [0, " +
                                std::to_string(node_count) + ")");
        }
        if (t.relation >= relation_count) {
            throw ArgumentError("triple references relation " + std::to_string(t.relation) +
                                " outside [0, " + std::to_string(relation_count) + ")");
        }
    }
    KnowledgeGraph g;
    g.node_count = node_count;
    g.relation_count = relation_count;
    g.directed = directed;
    g.duplicates_dropped = normalize_triples(triples, directed);
    g.triples = std::move(triples);
    return g;
}

// A labeled set of graphs sharing relation / node-label / class vocabularies.
struct GraphCollection {
    std::vector<KnowledgeGraph> graphs;
    std::vector<uint32_t> graph_labels;  // class id per graph
    Vocabulary relation_vocab;           // shared; matches graphs' relation ids
    Vocabulary node_label_vocab;         // shared node-label vocabulary
    Vocabulary class_vocab;              // class-id names

    std::size_t size() const { return graphs.size(); }
};

}  // namespace pam
