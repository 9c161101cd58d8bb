#include "doctest.h"
#include "oracles.hpp"

#include "sisk/error.hpp"
#include "sisk/graph.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sisk;

namespace {

LoadedGraph parse(const std::string& text) {
    std::istringstream in(text);
    return read_edge_list(in, "test");
}

Graph star(std::size_t leaves) {
    std::vector<Edge> e;
    for (NodeId v = 1; v <= leaves; ++v) e.emplace_back(0, v);
    return Graph::from_edges(leaves + 1, e);
}

bool is_simple_regular(const Graph& g, std::size_t d) {
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        if (g.degree(v) != d) return false;
        const auto nb = g.neighbors(v);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            if (nb[i] == v) return false;
            if (i > 0 && nb[i] == nb[i - 1]) return false;
            if (!g.has_edge(nb[i], v)) return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("edge list: path of two edges") {
    auto lg = parse("a b\nb c\n");
    CHECK(lg.graph.num_nodes() == 3);
    CHECK(lg.graph.num_edges() == 2);
    CHECK(lg.graph.degree(1) == 2);
    CHECK(lg.graph.label(0) == "a");
    CHECK(lg.graph.label(2) == "c");
}

TEST_CASE("edge list: self-loop only") {
    auto lg = parse("a a\n");
    CHECK(lg.graph.num_nodes() == 1);
    CHECK(lg.graph.num_edges() == 0);
    CHECK(lg.dropped_self_loops == 1);
}

TEST_CASE("edge list: reversed duplicate") {
    auto lg = parse("0 1\n1 0\n");
    CHECK(lg.graph.num_edges() == 1);
    CHECK(lg.dropped_duplicates == 1);
}

TEST_CASE("edge list: comments and blank lines") {
    auto lg = parse("# header\n\nx y\n  # indented comment\ny z\n");
    CHECK(lg.graph.num_nodes() == 3);
    CHECK(lg.graph.num_edges() == 2);
}

TEST_CASE("edge list: malformed line reports its number") {
    try {
        parse("a b\nc\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse("a b c\n"), ParseError);
}

TEST_CASE("edge list: missing file") {
    CHECK_THROWS_AS(load_edge_list("/nonexistent/dir/graph.txt"), InputError);
}

TEST_CASE("edge list: save and reload gives the same graph") {
    const Graph g = generate_random_regular(60, 3, 4);
    const auto path = std::filesystem::temp_directory_path() / "sisk_roundtrip.txt";
    save_edge_list(g, path);
    const auto back = load_edge_list(path).graph;
    std::filesystem::remove(path);
    REQUIRE(back.num_nodes() == g.num_nodes());
    REQUIRE(back.num_edges() == g.num_edges());
    for (auto [u, v] : g.edges()) {
        // labels of the reloaded graph are the original ids
        const auto& labels = back.labels();
        const auto iu = std::find(labels.begin(), labels.end(), std::to_string(u)) - labels.begin();
        const auto iv = std::find(labels.begin(), labels.end(), std::to_string(v)) - labels.begin();
        CHECK(back.has_edge(static_cast<NodeId>(iu), static_cast<NodeId>(iv)));
    }
}

TEST_CASE("labelled graph keeps labels through write") {
    auto lg = parse("alpha beta\nbeta gamma\n");
    std::ostringstream out;
    write_edge_list(lg.graph, out);
    auto again = parse(out.str());
    CHECK(again.graph.num_edges() == 2);
    CHECK(again.graph.label(0) == "alpha");
}

TEST_CASE("random regular: forced complete graph K4") {
    const Graph g = generate_random_regular(4, 3, 1);
    CHECK(g.num_edges() == 6);
    for (NodeId u = 0; u < 4; ++u)
        for (NodeId v = 0; v < 4; ++v)
            if (u != v) CHECK(g.has_edge(u, v));
}

TEST_CASE("random regular: parity and degree errors") {
    CHECK_THROWS_AS(generate_random_regular(5, 3, 1), InputError);
    CHECK_THROWS_AS(generate_random_regular(4, 4, 1), InputError);
}

TEST_CASE("random regular: large graph is simple and 3-regular") {
    const Graph g = generate_random_regular(50000, 3, 1);
    CHECK(g.num_nodes() == 50000);
    CHECK(g.num_edges() == 75000);
    CHECK(is_simple_regular(g, 3));
}

TEST_CASE("random regular: randomized sizes and degrees") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const std::size_t d = 2 + seed % 5;
        std::size_t n = 10 + 7 * seed;
        if ((n * d) % 2) ++n;
        const Graph g = generate_random_regular(n, d, seed);
        CHECK(is_simple_regular(g, d));
    }
}

TEST_CASE("random regular: deterministic in the seed") {
    const Graph a = generate_random_regular(500, 4, 9);
    const Graph b = generate_random_regular(500, 4, 9);
    const Graph c = generate_random_regular(500, 4, 10);
    CHECK(a.edges() == b.edges());
    CHECK(a.content_hash() == b.content_hash());
    CHECK(a.edges() != c.edges());
}

TEST_CASE("G(n,p): edge count near expectation") {
    const Graph g = generate_gnp(2000, 0.002, 3);
    const double expected = 0.002 * 2000.0 * 1999.0 / 2.0;
    CHECK(std::abs(static_cast<double>(g.num_edges()) - expected) < 5.0 * std::sqrt(expected));
    CHECK(generate_gnp(50, 0.0, 1).num_edges() == 0);
    CHECK(generate_gnp(50, 1.0, 1).num_edges() == 50 * 49 / 2);
}

TEST_CASE("spectral radius: small graphs") {
    CHECK(spectral_radius(generate_random_regular(4, 3, 1)) == doctest::Approx(3.0).epsilon(1e-10));
    std::vector<Edge> e{{0, 1}};
    CHECK(spectral_radius(Graph::from_edges(2, e)) == doctest::Approx(1.0).epsilon(1e-10));
    const Graph s = star(4);
    CHECK(spectral_radius(s) == doctest::Approx(oracle::dense_spectral_radius(s)).epsilon(1e-9));
    CHECK(spectral_radius(s) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("spectral radius: disconnected graph takes the global maximum") {
    // a triangle (lambda 2) next to a star with 9 leaves (lambda 3)
    std::vector<Edge> e{{0, 1}, {1, 2}, {0, 2}};
    for (NodeId v = 4; v < 13; ++v) e.emplace_back(3, v);
    const Graph g = Graph::from_edges(13, e);
    CHECK(spectral_radius(g) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("spectral radius: between mean and max degree, matches dense solve") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const Graph g = generate_gnp(120, 0.04, seed);
        if (g.num_edges() == 0) continue;
        const double lambda = spectral_radius(g);
        const double mean_deg = 2.0 * g.num_edges() / static_cast<double>(g.num_nodes());
        CHECK(lambda >= mean_deg - 1e-9);
        CHECK(lambda <= static_cast<double>(g.max_degree()) + 1e-9);
        CHECK(lambda == doctest::Approx(oracle::dense_spectral_radius(g)).epsilon(1e-8));
    }
    CHECK_THROWS_AS(spectral_radius(Graph{}), InputError);
}

TEST_CASE("mean excess degree") {
    CHECK(mean_excess_degree(generate_random_regular(100, 3, 2)) == doctest::Approx(2.0));
    std::vector<Edge> edge{{0, 1}};
    CHECK(mean_excess_degree(Graph::from_edges(2, edge)) == doctest::Approx(0.0));
    std::vector<Edge> path{{0, 1}, {1, 2}};
    CHECK(mean_excess_degree(Graph::from_edges(3, path)) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("directed edge index is a bijection with involutive reverse") {
    const Graph g = generate_gnp(80, 0.08, 5);
    const DirectedEdgeIndex idx(g);
    REQUIRE(idx.size() == 2 * g.num_edges());
    std::vector<int> seen(idx.size(), 0);
    for (NodeId j = 0; j < g.num_nodes(); ++j) {
        for (NodeId k : g.neighbors(j)) {
            const auto e = idx.find(j, k);
            REQUIRE(e.has_value());
            ++seen[*e];
            CHECK(idx.source(*e) == j);
            CHECK(idx.target(*e) == k);
            CHECK(idx.reverse(idx.reverse(*e)) == *e);
            CHECK(idx.source(idx.reverse(*e)) == k);
        }
    }
    for (int s : seen) CHECK(s == 1);
    CHECK_FALSE(idx.find(0, 0).has_value());
}
