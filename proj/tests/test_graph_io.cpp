#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include <pam/graph_io.hpp>

#include "testutil.hpp"

using Catch::Matchers::ContainsSubstring;

TEST_CASE("triple files parse with first-appearance vocabularies") {
    testutil::TempDir dir("io");
    testutil::write_file(dir.file("g.tsv"), "A\tr1\tB\nA\tr2\tC\nC\tr3\tB\n");
    auto g = pam::load_triples(dir.file("g.tsv"));
    REQUIRE(g.node_count == 3);
    REQUIRE(g.relation_count == 3);
    REQUIRE(g.triples.size() == 3);
    REQUIRE(g.nodes.name(0) == "A");
    REQUIRE(g.nodes.name(1) == "B");
    REQUIRE(g.nodes.name(2) == "C");
    REQUIRE(g.relations.name(2) == "r3");
    REQUIRE(g.triples[0] == pam::Triple{0, 0, 1});
    REQUIRE(g.triples[2] == pam::Triple{2, 2, 1});
}

TEST_CASE("empty file gives the empty graph") {
    testutil::TempDir dir("io");
    testutil::write_file(dir.file("empty.tsv"), "");
    auto g = pam::load_triples(dir.file("empty.tsv"));
    REQUIRE(g.node_count == 0);
    REQUIRE(g.relation_count == 0);
    REQUIRE(g.triples.empty());
}

TEST_CASE("malformed lines report their line number") {
    testutil::TempDir dir("io");
    testutil::write_file(dir.file("bad.tsv"), "A\tr\tB\nA\tonly-two\nC\tr\tD\n");
    REQUIRE_THROWS_MATCHES(pam::load_triples(dir.file("bad.tsv")), pam::ParseError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("2")));
    REQUIRE_THROWS_AS(pam::load_triples(dir.file("nonexistent.tsv")), pam::IoError);
}

TEST_CASE("duplicate triples are dropped and counted") {
    testutil::TempDir dir("io");
    testutil::write_file(dir.file("dup.tsv"), "A\tr\tB\nC\tr\tD\nA\tr\tB\n");
    auto g = pam::load_triples(dir.file("dup.tsv"));
    REQUIRE(g.triples.size() == 2);
    REQUIRE(g.duplicates_dropped == 1);
    REQUIRE(g.triples[0] == pam::Triple{0, 0, 1});
    REQUIRE(g.triples[1] == pam::Triple{2, 0, 3});
}

TEST_CASE("vocabulary reuse rejects unknown names") {
    testutil::TempDir dir("io");
    testutil::write_file(dir.file("train.tsv"), "A\tr\tB\nB\tr\tC\n");
    testutil::write_file(dir.file("ok.tsv"), "C\tr\tA\n");
    testutil::write_file(dir.file("oov.tsv"), "A\tr\tZEBRA\n");

    auto train = pam::load_triples(dir.file("train.tsv"));
    auto ok = pam::load_triples(dir.file("ok.tsv"), pam::VocabPolicy::reuse, &train);
    REQUIRE(ok.node_count == train.node_count);
    REQUIRE(ok.triples[0] == pam::Triple{2, 0, 0});

    REQUIRE_THROWS_MATCHES(pam::load_triples(dir.file("oov.tsv"), pam::VocabPolicy::reuse, &train),
                           pam::LookupError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("ZEBRA")));
    REQUIRE_THROWS_AS(pam::load_triples(dir.file("ok.tsv"), pam::VocabPolicy::reuse, nullptr),
                      pam::ArgumentError);
}

TEST_CASE("vocabulary extension appends new names") {
    testutil::TempDir dir("io");
    testutil::write_file(dir.file("train.tsv"), "A\tr\tB\n");
    testutil::write_file(dir.file("test.tsv"), "B\ts\tNEW\n");
    auto train = pam::load_triples(dir.file("train.tsv"));
    auto test = pam::load_triples(dir.file("test.tsv"), pam::VocabPolicy::extend, &train);
    REQUIRE(test.node_count == 3);
    REQUIRE(test.relation_count == 2);
    REQUIRE(test.nodes.name(2) == "NEW");
    REQUIRE(test.triples[0] == pam::Triple{1, 1, 2});
}

TEST_CASE("triple round-trip preserves the graph") {
    testutil::TempDir dir("io");
    testutil::write_file(dir.file("g.tsv"), testutil::five_node_tsv());
    auto g = pam::load_triples(dir.file("g.tsv"));
    pam::save_triples(g, dir.file("copy.tsv"));
    auto g2 = pam::load_triples(dir.file("copy.tsv"));
    REQUIRE(g2.node_count == g.node_count);
    REQUIRE(g2.relation_count == g.relation_count);
    REQUIRE(g2.triples == g.triples);
    REQUIRE(g2.nodes == g.nodes);
    REQUIRE(g2.relations == g.relations);

    auto again = pam::load_triples(dir.file("g.tsv"));
    REQUIRE(again.triples == g.triples);  // deterministic id assignment

    pam::KnowledgeGraph bare = testutil::five_node_graph();
    REQUIRE_THROWS_AS(pam::save_triples(bare, dir.file("bare.tsv")), pam::StateError);
}

namespace {

// Two graphs: a 3-node path and a 2-cycle, with node and edge labels.
void write_tudataset(const testutil::TempDir& dir, const std::string& ds) {
    testutil::write_file(dir.file(ds + "_A.txt"), "1, 2\n2, 3\n4, 5\n5, 4\n");
    testutil::write_file(dir.file(ds + "_graph_indicator.txt"), "1\n1\n1\n2\n2\n");
    testutil::write_file(dir.file(ds + "_graph_labels.txt"), "1\n-1\n");
    testutil::write_file(dir.file(ds + "_edge_labels.txt"), "0\n1\n0\n0\n");
    testutil::write_file(dir.file(ds + "_node_labels.txt"), "0\n1\n0\n2\n1\n");
}

}  // namespace

TEST_CASE("tudataset directories load into a collection") {
    testutil::TempDir dir("tud");
    write_tudataset(dir, "TOY");
    auto c = pam::load_tudataset(dir.str());

    REQUIRE(c.size() == 2);
    REQUIRE(c.graphs[0].node_count == 3);
    REQUIRE(c.graphs[1].node_count == 2);
    REQUIRE(c.graphs[0].node_count + c.graphs[1].node_count == 5);

    REQUIRE(c.graphs[0].triples ==
            std::vector<pam::Triple>{{0, 0, 1}, {1, 1, 2}});
    REQUIRE(c.graphs[1].triples ==
            std::vector<pam::Triple>{{0, 0, 1}, {1, 0, 0}});
    REQUIRE(c.relation_vocab.size() == 2);
    REQUIRE(c.graphs[0].relation_count == 2);
    REQUIRE(c.graphs[1].relation_count == 2);

    REQUIRE(c.graphs[0].node_labels == std::vector<uint32_t>{0, 1, 0});
    REQUIRE(c.graphs[1].node_labels == std::vector<uint32_t>{2, 1});
    REQUIRE(c.graph_labels == std::vector<uint32_t>{0, 1});
    REQUIRE(c.class_vocab.name(0) == "1");
    REQUIRE(c.class_vocab.name(1) == "-1");
}

TEST_CASE("tudataset validation catches broken inputs") {
    SECTION("missing mandatory file is named") {
        testutil::TempDir dir("tud");
        write_tudataset(dir, "TOY");
        std::filesystem::remove(dir.file("TOY_graph_labels.txt"));
        REQUIRE_THROWS_MATCHES(pam::load_tudataset(dir.str()), pam::IoError,
                               Catch::Matchers::MessageMatches(
                                   ContainsSubstring("TOY_graph_labels.txt")));
    }
    SECTION("edge across graphs") {
        testutil::TempDir dir("tud");
        write_tudataset(dir, "TOY");
        testutil::write_file(dir.file("TOY_A.txt"), "1, 2\n2, 4\n4, 5\n5, 4\n");
        REQUIRE_THROWS_AS(pam::load_tudataset(dir.str()), pam::ConsistencyError);
    }
    SECTION("node id outside indicator range") {
        testutil::TempDir dir("tud");
        write_tudataset(dir, "TOY");
        testutil::write_file(dir.file("TOY_A.txt"), "1, 2\n2, 3\n4, 9\n5, 4\n");
        REQUIRE_THROWS_AS(pam::load_tudataset(dir.str()), pam::ConsistencyError);
    }
    SECTION("label count mismatch") {
        testutil::TempDir dir("tud");
        write_tudataset(dir, "TOY");
        testutil::write_file(dir.file("TOY_edge_labels.txt"), "0\n1\n0\n");
        REQUIRE_THROWS_AS(pam::load_tudataset(dir.str()), pam::ConsistencyError);
    }
    SECTION("node labels optional") {
        testutil::TempDir dir("tud");
        write_tudataset(dir, "TOY");
        std::filesystem::remove(dir.file("TOY_node_labels.txt"));
        auto c = pam::load_tudataset(dir.str());
        REQUIRE_FALSE(c.graphs[0].has_node_labels());
    }
    SECTION("empty directory") {
        testutil::TempDir dir("tud");
        REQUIRE_THROWS_AS(pam::load_tudataset(dir.str()), pam::IoError);
    }
}

TEST_CASE("undirected graphs canonicalize and dedupe") {
    std::vector<pam::Triple> t{{2, 0, 1}, {1, 0, 2}, {0, 1, 2}};
    auto g = pam::make_graph(3, 2, t, false);
    REQUIRE(g.triples.size() == 2);  // (1,0,2) twice after orientation
    REQUIRE(g.triples[0] == pam::Triple{1, 0, 2});
    REQUIRE(g.triples[1] == pam::Triple{0, 1, 2});
    REQUIRE(g.duplicates_dropped == 1);

    REQUIRE_THROWS_AS(pam::make_graph(2, 1, std::vector<pam::Triple>{{0, 0, 5}}),
                      pam::ArgumentError);
    REQUIRE_THROWS_AS(pam::make_graph(2, 1, std::vector<pam::Triple>{{0, 3, 1}}),
                      pam::ArgumentError);
}
