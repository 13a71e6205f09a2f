#include "doctest.h"

#include <cmath>
#include <numeric>

#include "spsnet/topology.hpp"

using namespace spsnet;

namespace {

void check_census_invariants(const TreeTopology& t) {
    CHECK(t.lambda.at(0) == 1);
    CHECK(std::accumulate(t.lambda.begin(), t.lambda.end(), 0LL) == t.size());
    for (std::size_t l = 0; l < t.lambda.size(); ++l) CHECK(t.lambda_bar[l] <= t.lambda[l]);
    for (int i = 0; i < t.size(); ++i)
        if (t.parent[static_cast<std::size_t>(i)] >= 0)
            CHECK(t.level[static_cast<std::size_t>(i)] == t.level[static_cast<std::size_t>(t.parent[static_cast<std::size_t>(i)])] + 1);
}

}  // namespace

TEST_CASE("communication radius") {
    CHECK(comm_radius(100) == doctest::Approx(std::sqrt(std::log2(100.0) / 200.0)));
    CHECK(comm_radius(100) == doctest::Approx(0.18226).epsilon(1e-4));
    CHECK(comm_radius(2) == doctest::Approx(0.5));
    for (int n = 3; n < 10000; ++n) CHECK(comm_radius(n + 1) < comm_radius(n));
}

TEST_CASE("graph basics") {
    Graph g(4);
    g.add_edge(0, 1);
    g.add_edge(1, 0);
    g.add_edge(2, 3);
    CHECK(g.edge_count() == 2);
    CHECK(g.adjacent(1, 0));
    CHECK_FALSE(g.adjacent(0, 2));
    CHECK_THROWS(g.add_edge(2, 2));
    CHECK_FALSE(is_connected(g));
    CHECK_THROWS_AS(diameter(g), TopologyError);
    CHECK_THROWS_AS(spanning_tree(g, 0), TopologyError);
    g.add_edge(1, 2);
    CHECK(is_connected(g));
    CHECK(bfs_distances(g, 0) == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("random geometric graphs") {
    SUBCASE("connected, geometric and reproducible") {
        Rng a(5), b(5);
        const Graph g = random_geometric(100, a);
        const Graph h = random_geometric(100, b);
        CHECK(is_connected(g));
        CHECK(g.edges() == h.edges());
        REQUIRE(g.positions.size() == 100);
        CHECK(g.positions[17] == h.positions[17]);
        const double r = *g.d_comm;
        for (int i = 0; i < 100; ++i)
            for (int j = i + 1; j < 100; ++j)
                CHECK(g.adjacent(i, j) == ((g.positions[static_cast<std::size_t>(i)] - g.positions[static_cast<std::size_t>(j)]).norm() <= r));
    }
    SUBCASE("retry budget is enforced") {
        int failures = 0;
        for (std::uint64_t s = 0; s < 50; ++s) {
            Rng rng(s);
            try {
                random_geometric(2, rng, 1);
            } catch (const TopologyError&) {
                ++failures;
            }
        }
        CHECK(failures > 0);
        CHECK(failures < 50);
    }
    SUBCASE("attempt counter") {
        Rng rng(9);
        int attempts = 0;
        random_geometric(100, rng, 100, &attempts);
        CHECK(attempts >= 1);
    }
}

TEST_CASE("spanning trees and census") {
    SUBCASE("path rooted at an end") {
        const TreeTopology t = spanning_tree(path_graph(3), 0);
        CHECK(t.L == 2);
        CHECK(t.lambda == std::vector<long long>{1, 1, 1});
        CHECK(t.lambda_bar == std::vector<long long>{0, 0, 1});
        check_census_invariants(t);
    }
    SUBCASE("star rooted at the hub") {
        const TreeTopology t = spanning_tree(star_graph(9), 0);
        CHECK(t.L == 1);
        CHECK(t.lambda == std::vector<long long>{1, 8});
    }
    SUBCASE("level counts 1, 2, 4 with one sonless node at level 2") {
        Graph g(10);
        for (auto [a, b] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}, {2, 6}, {3, 7}, {4, 8}, {5, 9}})
            g.add_edge(a, b);
        const TreeTopology t = spanning_tree(g, 0);
        CHECK(t.lambda[0] == 1);
        CHECK(t.lambda[1] == 2);
        CHECK(t.lambda[2] == 4);
        CHECK(t.lambda_bar[2] == 1);
        check_census_invariants(t);
    }
    SUBCASE("random trees satisfy the census invariants") {
        for (std::uint64_t s = 0; s < 20; ++s) {
            Rng rng(s);
            const Graph g = random_geometric(60, rng);
            const TreeTopology t = spanning_tree(g, center_root(g, rng));
            check_census_invariants(t);
            CHECK_NOTHROW(t.validate());
            // BFS tree: levels are hop distances
            CHECK(bfs_distances(g, t.root) == t.level);
        }
    }
}

TEST_CASE("center root keeps the tree shallow") {
    const Graph p = path_graph(9);
    Rng rng(1);
    const int root = center_root(p, rng);
    CHECK(root == 4);
    CHECK(spanning_tree(p, root).L == 4);
}

TEST_CASE("complete binary trees") {
    const TreeTopology t3 = complete_binary_tree(3);
    CHECK(t3.size() == 15);
    check_census_invariants(t3);
    CHECK(complete_binary_tree(0).size() == 1);
    const TreeTopology t5 = complete_binary_tree(5);
    CHECK(t5.lambda[5] == 32);
    CHECK(t5.lambda_bar[5] == 32);
    for (int l = 0; l < 5; ++l) {
        CHECK(t5.lambda[static_cast<std::size_t>(l)] == (1LL << l));
        CHECK(t5.lambda_bar[static_cast<std::size_t>(l)] == 0);
    }
    for (int L = 1; L <= 6; ++L) CHECK(diameter(complete_binary_tree(L).as_graph()) == 2 * L);
}

TEST_CASE("clustered networks") {
    SUBCASE("sizes sum to N and every cluster is nonempty") {
        Rng rng(3);
        const ClusteredTopology c = clustered(10, 2, rng);
        CHECK(c.sizes[0] + c.sizes[1] == 10);
        CHECK(c.sizes[0] >= 1);
        CHECK(c.sizes[1] >= 1);
        const Graph g = c.as_graph();
        for (int i = 0; i < 10; ++i)
            if (!c.is_head(i)) CHECK(g.adjacent(i, c.head[static_cast<std::size_t>(c.assign[static_cast<std::size_t>(i)])]));
        CHECK(g.adjacent(c.head[0], c.head[1]));
    }
    SUBCASE("n_c = N makes every node a head") {
        Rng rng(4);
        const ClusteredTopology c = clustered(7, 7, rng);
        for (int i = 0; i < 7; ++i) CHECK(c.is_head(i));
    }
    SUBCASE("n_c > N is rejected") {
        Rng rng(4);
        CHECK_THROWS(clustered(5, 6, rng));
    }
    SUBCASE("a given cluster has mean size N / n_c") {
        double mean = 0.0;
        for (std::uint64_t s = 0; s < 100; ++s) {
            Rng rng(s);
            const ClusteredTopology c = clustered(140, 20, rng);
            CHECK(std::accumulate(c.sizes.begin(), c.sizes.end(), 0) == 140);
            mean += c.sizes[0];
        }
        CHECK(std::abs(mean / 100 - 7.0) < 0.5);
    }
}

TEST_CASE("diameters") {
    CHECK(diameter(path_graph(5)) == 4);
    CHECK(diameter(complete_graph(6)) == 1);
    CHECK(diameter(star_graph(6)) == 2);
}
