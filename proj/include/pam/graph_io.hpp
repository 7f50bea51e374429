#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pam/errors.hpp"
#include "pam/graph.hpp"
#include "pam/primes.hpp"

namespace pam {

enum class VocabPolicy {
    build,   // fresh vocabularies, first-appearance order
    reuse,   // resolve against an existing vocabulary; unknown names are errors
    extend,  // resolve against an existing vocabulary; unknown names get new ids
};

namespace detail {

inline std::ifstream open_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

inline void chomp(std::string& line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
}

inline std::vector<std::string_view> split_tabs(const std::string& line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.emplace_back(line.data() + start, line.size() - start);
            break;
        }
        fields.emplace_back(line.data() + start, pos - start);
        start = pos + 1;
    }
    return fields;
}

inline long parse_int_field(const std::string& token, const std::string& what, std::size_t line_no) {
    try {
        std::size_t used = 0;
        long v = std::stol(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw ParseError(what + ", line " + std::to_string(line_no) + ": not an integer: '" + token + "'");
    }
}

}  // namespace detail

// Loads `head<TAB>relation<TAB>tail` triples. With policy build, fresh
// vocabularies are created in first-appearance order; reuse and extend
// resolve names against vocab_source's vocabularies (reuse treats unknown
// names as lookup errors, extend appends them). Duplicate triples are
// dropped and counted; triple order is preserved.
inline KnowledgeGraph load_triples(const std::filesystem::path& path,
                                   VocabPolicy policy = VocabPolicy::build,
                                   const KnowledgeGraph* vocab_source = nullptr) {
    if (policy != VocabPolicy::build && vocab_source == nullptr) {
        throw ArgumentError("vocab policy reuse/extend requires an existing graph");
    }
    std::ifstream in = detail::open_text(path);

    KnowledgeGraph g;
    if (vocab_source) {
        g.nodes = vocab_source->nodes;
        g.relations = vocab_source->relations;
    }

    auto resolve = [&](Vocabulary& vocab, const std::string& name, std::size_t line_no) -> uint32_t {
        if (policy == VocabPolicy::reuse) {
            auto id = vocab.find(name);
            if (!id) {
                throw LookupError("line " + std::to_string(line_no) + ": unknown name '" + name +
                                  "' under reuse vocabulary policy");
            }
            return *id;
        }
        return vocab.add(name);
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::chomp(line);
        if (line.empty()) continue;
        auto fields = detail::split_tabs(line);
        if (fields.size() != 3) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                             std::to_string(fields.size()));
        }
        Triple t;
        t.head = resolve(g.nodes, std::string(fields[0]), line_no);
        t.relation = resolve(g.relations, std::string(fields[1]), line_no);
        t.tail = resolve(g.nodes, std::string(fields[2]), line_no);
        g.triples.push_back(t);
    }

    g.node_count = static_cast<uint32_t>(g.nodes.size());
    g.relation_count = static_cast<uint32_t>(g.relations.size());
    g.duplicates_dropped = normalize_triples(g.triples, g.directed);
    return g;
}

// Writes the graph back out as triple TSV. Requires name vocabularies.
inline void save_triples(const KnowledgeGraph& g, const std::filesystem::path& path) {
    if (g.node_count > 0 && (g.nodes.size() != g.node_count || g.relations.size() != g.relation_count)) {
        throw StateError("graph has no name vocabularies; cannot serialize to triple TSV");
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& t : g.triples) {
        out << g.nodes.name(t.head) << '\t' << g.relations.name(t.relation) << '\t' << g.nodes.name(t.tail)
            << '\n';
    }
}

// ---------------------------------------------------------------------------
// TUDataset plain-text layout: DS_A.txt ("i, j", 1-indexed global node ids),
// DS_graph_indicator.txt, DS_graph_labels.txt, DS_edge_labels.txt, plus
// optional DS_node_labels.txt. Undirected edges appear in both orientations
// in DS_A.txt and are kept as two directed triples.
// ---------------------------------------------------------------------------

inline GraphCollection load_tudataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());

    std::string prefix;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.size() > 6 && name.ends_with("_A.txt")) {
            prefix = name.substr(0, name.size() - 6);
            break;
        }
    }
    if (prefix.empty()) throw IoError("no <DS>_A.txt edge file in " + dir.string());

    auto file = [&](const std::string& suffix) { return dir / (prefix + suffix); };
    auto require = [&](const std::string& suffix) {
        fs::path p = file(suffix);
        if (!fs::exists(p)) throw IoError("missing mandatory file " + p.string());
        return p;
    };

    auto read_int_lines = [](const fs::path& p, const std::string& what) {
        std::ifstream in = detail::open_text(p);
        std::vector<long> values;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            detail::chomp(line);
            if (line.empty()) continue;
            values.push_back(detail::parse_int_field(line, what, line_no));
        }
        return values;
    };

    fs::path a_path = require("_A.txt");
    std::vector<long> indicator = read_int_lines(require("_graph_indicator.txt"), "graph indicator");
    std::vector<long> graph_label_values = read_int_lines(require("_graph_labels.txt"), "graph labels");
    std::vector<long> edge_label_values = read_int_lines(require("_edge_labels.txt"), "edge labels");

    std::vector<long> node_label_values;
    bool has_node_labels = fs::exists(file("_node_labels.txt"));
    if (has_node_labels) {
        node_label_values = read_int_lines(file("_node_labels.txt"), "node labels");
        if (node_label_values.size() != indicator.size()) {
            throw ConsistencyError("node label count " + std::to_string(node_label_values.size()) +
                                   " != node count " + std::to_string(indicator.size()));
        }
    }

    std::size_t n_graphs = graph_label_values.size();
    std::size_t n_nodes = indicator.size();

    // Global node id (1-indexed) -> (graph index, local 0-based id).
    std::vector<uint32_t> graph_of(n_nodes);
    std::vector<uint32_t> local_id(n_nodes);
    std::vector<uint32_t> nodes_per_graph(n_graphs, 0);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        long gid = indicator[i];
        if (gid < 1 || static_cast<std::size_t>(gid) > n_graphs) {
            throw ConsistencyError("graph indicator entry " + std::to_string(gid) + " outside [1, " +
                                   std::to_string(n_graphs) + "]");
        }
        graph_of[i] = static_cast<uint32_t>(gid - 1);
        local_id[i] = nodes_per_graph[gid - 1]++;
    }

    GraphCollection c;
    c.graphs.resize(n_graphs);
    for (std::size_t gi = 0; gi < n_graphs; ++gi) {
        c.graphs[gi].node_count = nodes_per_graph[gi];
        c.graphs[gi].directed = true;
        if (has_node_labels) c.graphs[gi].node_labels.resize(nodes_per_graph[gi]);
    }
    if (has_node_labels) {
        for (std::size_t i = 0; i < n_nodes; ++i) {
            uint32_t label = c.node_label_vocab.add(std::to_string(node_label_values[i]));
            c.graphs[graph_of[i]].node_labels[local_id[i]] = label;
        }
    }

    // Edges.
    std::ifstream a_in = detail::open_text(a_path);
    std::string line;
    std::size_t line_no = 0;
    std::size_t edge_index = 0;
    while (std::getline(a_in, line)) {
        ++line_no;
        detail::chomp(line);
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError("edge list line " + std::to_string(line_no) + ": expected 'i, j'");
        }
        auto trim = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t");
            std::size_t e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        long u = detail::parse_int_field(trim(line.substr(0, comma)), "edge list", line_no);
        long v = detail::parse_int_field(trim(line.substr(comma + 1)), "edge list", line_no);
        if (u < 1 || v < 1 || static_cast<std::size_t>(u) > n_nodes || static_cast<std::size_t>(v) > n_nodes) {
            throw ConsistencyError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                   ") references a node outside [1, " + std::to_string(n_nodes) + "]");
        }
        uint32_t gu = graph_of[u - 1];
        uint32_t gv = graph_of[v - 1];
        if (gu != gv) {
            throw ConsistencyError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                   ") crosses graphs " + std::to_string(gu + 1) + " and " +
                                   std::to_string(gv + 1));
        }
        if (edge_index >= edge_label_values.size()) {
            throw ConsistencyError("edge list has more lines than the edge label file");
        }
        uint32_t relation = c.relation_vocab.add(std::to_string(edge_label_values[edge_index]));
        ++edge_index;
        c.graphs[gu].triples.push_back(Triple{local_id[u - 1], relation, local_id[v - 1]});
    }
    if (edge_index != edge_label_values.size()) {
        throw ConsistencyError("edge label file has " + std::to_string(edge_label_values.size()) +
                               " entries for " + std::to_string(edge_index) + " edges");
    }

    uint32_t relation_count = static_cast<uint32_t>(c.relation_vocab.size());
    for (auto& g : c.graphs) {
        g.relation_count = relation_count;
        g.duplicates_dropped = normalize_triples(g.triples, true);
    }

    c.graph_labels.reserve(n_graphs);
    for (long v : graph_label_values) {
        c.graph_labels.push_back(c.class_vocab.add(std::to_string(v)));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Mapping file: `relation-name<TAB>prime`, one line per relation id.
// ---------------------------------------------------------------------------

struct MappingFile {
    RelationMapping mapping;
    std::vector<std::string> names;
};

inline void save_mapping(const RelationMapping& mapping, const std::vector<std::string>& names,
                         const std::filesystem::path& path) {
    if (names.size() != mapping.size()) {
        throw ArgumentError("mapping has " + std::to_string(mapping.size()) + " relations but " +
                            std::to_string(names.size()) + " names were given");
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::size_t r = 0; r < mapping.size(); ++r) {
        out << names[r] << '\t' << mapping.primes()[r] << '\n';
    }
}

inline MappingFile load_mapping(const std::filesystem::path& path) {
    std::ifstream in = detail::open_text(path);
    std::vector<std::string> names;
    std::vector<uint64_t> primes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::chomp(line);
        if (line.empty()) continue;
        auto fields = detail::split_tabs(line);
        if (fields.size() != 2) {
            throw ParseError("mapping line " + std::to_string(line_no) + ": expected 'name<TAB>prime'");
        }
        names.emplace_back(fields[0]);
        long p = detail::parse_int_field(std::string(fields[1]), "mapping", line_no);
        if (p < 2) throw ParseError("mapping line " + std::to_string(line_no) + ": invalid prime " + std::to_string(p));
        primes.push_back(static_cast<uint64_t>(p));
    }
    bool skip_two = std::find(primes.begin(), primes.end(), 2ull) == primes.end();
    MappingFile mf;
    mf.mapping = RelationMapping::build(primes.size(), skip_two, &primes);
    mf.names = std::move(names);
    return mf;
}

}  // namespace pam
