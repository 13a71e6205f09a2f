#include "doctest.h"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "spsnet/analysis.hpp"
#include "spsnet/diffusion.hpp"

using namespace spsnet;

namespace {

std::vector<RegressorSample> make_samples(int n, int n_p, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g;
    std::vector<RegressorSample> out;
    for (int i = 0; i < n; ++i) {
        RegressorSample s;
        s.node_id = i;
        s.phi = Vec(n_p);
        for (int a = 0; a < n_p; ++a) s.phi[a] = g(rng);
        s.y = g(rng);
        out.push_back(s);
    }
    return out;
}

/// Sum of the local aggregates of the tagged nodes.
AggregateSums tag_sum(const TagSet& tag, const std::vector<RegressorSample>& samples, const SignMatrix& signs) {
    AggregateSums s(static_cast<int>(samples[0].phi.size()), signs.m());
    for (int i : tag.indices()) s += local_aggregate(samples[static_cast<std::size_t>(i)], signs, i);
    return s;
}

double rel_err(const AggregateSums& a, const AggregateSums& b) {
    return (a.data() - b.data()).cwiseAbs().maxCoeff() / std::max(1.0, b.data().cwiseAbs().maxCoeff());
}

// payload for row tags in the worked examples: any distinct vectors will do
AggregateSums payload(double v) {
    AggregateSums a(1, 2);
    a.data().setConstant(v);
    return a;
}

TreeTopology four_node_tree() {
    // root 0; children 1, 2; grandchild 3 under 1
    TreeTopology t;
    t.root = 0;
    t.parent = {-1, 0, 0, 1};
    t.children = {{1, 2}, {3}, {}, {}};
    compute_census(t);
    return t;
}

}  // namespace

TEST_CASE("payload sizes") {
    CHECK(payload_sizes(2, 10).d_mf == 3);
    CHECK(payload_sizes(2, 10).d_tas == 50);
    CHECK(payload_sizes(1, 2).d_mf == 2);
    CHECK(payload_sizes(1, 2).d_tas == 4);
    for (int m = 2; m < 20; ++m) CHECK(payload_sizes(3, m).d_tas / m == payload_sizes(3, 2).d_tas / 2);
}

TEST_CASE("pure flooding") {
    SUBCASE("complete graph knows everything after one round") {
        const auto r = run_pf(complete_graph(6), make_samples(6, 2, 1), -1);
        CHECK(r.rounds_to_full == 1);
    }
    SUBCASE("path of three needs two rounds") {
        const auto r = run_pf(path_graph(3), make_samples(3, 2, 1), -1);
        CHECK(r.rounds_to_full == 2);
        for (const auto& k : r.known) CHECK(k.all());
    }
    SUBCASE("round cap") {
        const auto r = run_pf(path_graph(5), make_samples(5, 1, 1), 1);
        CHECK(r.rounds == 1);
        CHECK(r.known[0].count() == 2);
    }
    SUBCASE("never cheaper than modified flooding") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            Rng rng(s);
            const Graph g = random_geometric(30, rng);
            const auto samples = make_samples(30, 2, s);
            CHECK(run_pf(g, samples, -1).log.total_scalars() >= run_mf(g, samples).log.total_scalars());
        }
    }
}

TEST_CASE("modified flooding") {
    SUBCASE("complete graph of five") {
        const auto r = run_mf(complete_graph(5), make_samples(5, 2, 3));
        const long long d = 3;
        CHECK(r.log.total_through_round(1) == 5 * d);
        CHECK(r.log.total_through_round(2) - r.log.total_through_round(1) == 5 * 4 * d);
        CHECK(r.log.total_scalars() == 25 * d);
        for (const auto& t : r.tables) CHECK(t.known.all());
    }
    SUBCASE("single node transmits once") {
        const auto r = run_mf(Graph(1), make_samples(1, 2, 3));
        CHECK(r.log.events().size() == 1);
        CHECK(r.log.total_scalars() == 3);
    }
    SUBCASE("completes within diameter + 1 rounds; rows sent at most once; sizes are d_MF multiples") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            Rng rng(s + 100);
            const Graph g = random_geometric(40, rng);
            const auto r = run_mf(g, make_samples(40, 3, s));
            CHECK(r.rounds <= diameter(g) + 1);
            for (const auto& t : r.tables) CHECK(t.known.all());
            std::set<std::pair<int, int>> sent;
            for (const auto& ev : r.log.events()) {
                CHECK(ev.scalars % 4 == 0);
                CHECK(ev.scalars == static_cast<long long>(ev.origins.size()) * 4);
                for (int o : ev.origins) CHECK(sent.insert({ev.node, o}).second);
            }
        }
    }
    SUBCASE("level schedule on trees matches the census formula") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            Rng rng(s);
            const Graph g = random_geometric(50, rng);
            const TreeTopology t = spanning_tree(g, center_root(g, rng));
            const auto r = run_mf_tree(t, make_samples(50, 2, s));
            CHECK(r.log.total_scalars() == traffic_mf_random_tree(t.lambda, t.lambda_bar, 50, 3));
            for (const auto& tab : r.tables) CHECK(tab.known.all());
        }
        const TreeTopology t4 = four_node_tree();
        CHECK(run_mf_tree(t4, make_samples(4, 2, 1)).log.total_scalars() == 10 * 3);
    }
    SUBCASE("traffic csv export") {
        const auto r = run_mf(path_graph(2), make_samples(2, 1, 1));
        std::ostringstream out;
        r.log.write_csv(out);
        const std::string csv = out.str();
        CHECK(csv.rfind("protocol,round,node_id,scalars_sent,cumulative_scalars,tag_bits", 0) == 0);
        CHECK(csv.find("mf,1,0,2,2,") != std::string::npos);
    }
}

TEST_CASE("distillation") {
    const int n = 12;
    TasTable table;
    table.owner = 1;
    table.rows.push_back({TagSet(n, {1}), payload(1.0), false});
    table.rows.push_back({TagSet(n, {2, 7}), payload(10.0), false});

    SUBCASE("stored subsets are stripped from the incoming message") {
        const TasMessage in{TagSet(n, {1, 2, 7, 8, 11}), payload(111.0)};
        CHECK(tas_distill(table, in) == DistillOutcome::Appended);
        REQUIRE(table.rows.size() == 3);
        CHECK(table.rows[2].tag == TagSet(n, {8, 11}));
        CHECK(table.rows[2].payload.data()[0] == doctest::Approx(100.0));
        CHECK_FALSE(table.rows[2].merged);
    }
    SUBCASE("duplicate tags change nothing") {
        CHECK(tas_distill(table, {TagSet(n, {2, 7}), payload(10.0)}) == DistillOutcome::Discarded);
        CHECK(tas_distill(table, {TagSet(n, {1, 2, 7}), payload(11.0)}) == DistillOutcome::Discarded);
        CHECK(table.rows.size() == 2);
    }
    SUBCASE("partial overlap is stored as-is") {
        table.rows.push_back({TagSet(n, {3, 5}), payload(5.0), false});
        CHECK(tas_distill(table, {TagSet(n, {3, 4}), payload(7.0)}) == DistillOutcome::Appended);
        CHECK(table.rows.back().tag == TagSet(n, {3, 4}));
        CHECK(table.rows.back().payload.data()[0] == 7.0);
        const WrapUp w = tas_wrapup(table);
        for (double c : w.weights.c) {
            CHECK(c >= 0.0);
            CHECK(c <= 1.0);
        }
    }
}

TEST_CASE("aggregation follows the worked table trace") {
    // rows {1}, {3}, {6}, {2,7}, {4}, {5,7}, {2,5}; node labels kept as in the walk-through
    const int n = 8;
    TasTable table;
    table.owner = 1;
    int k = 0;
    for (auto tags : std::vector<std::vector<int>>{{1}, {3}, {6}, {2, 7}, {4}, {5, 7}, {2, 5}}) {
        TagSet t(n);
        for (int i : tags) t.set(i);
        table.rows.push_back({t, payload(++k), false});
    }
    const auto first = tas_aggregate(table);
    REQUIRE(first);
    CHECK(first->tag == TagSet(n, {1, 2, 3, 4, 6, 7}));
    CHECK(first->payload.data()[0] == 1 + 2 + 3 + 4 + 5);
    for (int r = 0; r < 5; ++r) CHECK(table.rows[static_cast<std::size_t>(r)].merged);
    CHECK_FALSE(table.rows[5].merged);
    CHECK_FALSE(table.rows[6].merged);

    const auto second = tas_aggregate(table);
    REQUIRE(second);
    CHECK(second->tag == TagSet(n, {1, 3, 4, 5, 6, 7}));
    CHECK(second->payload.data()[0] == 6 + 1 + 2 + 3 + 5);

    const auto third = tas_aggregate(table);
    REQUIRE(third);
    CHECK(third->tag == TagSet(n, {1, 2, 3, 4, 5, 6}));

    CHECK_FALSE(tas_aggregate(table).has_value());

    TasTable fresh = TasTable::with_local(0, 3, payload(4.0));
    const auto only = tas_aggregate(fresh);
    REQUIRE(only);
    CHECK(only->tag == TagSet::one_hot(3, 0));
    CHECK(only->payload.data()[0] == 4.0);
}

TEST_CASE("wrap-up examples") {
    auto table_of = [](int n, std::vector<std::vector<int>> rows) {
        TasTable t;
        int k = 0;
        for (const auto& r : rows) {
            TagSet tag(n);
            for (int i : r) tag.set(i);
            t.rows.push_back({tag, payload(++k), false});
        }
        return t;
    };
    SUBCASE("identity rows") {
        const WrapUp w = tas_wrapup(table_of(2, {{0}, {1}}));
        CHECK(w.weights.c == std::vector<double>{1.0, 1.0});
        CHECK(w.objective == doctest::Approx(2.0));
        CHECK(w.complete);
    }
    SUBCASE("nested rows") {
        const WrapUp w = tas_wrapup(table_of(2, {{0, 1}, {1}}));
        CHECK(w.weights.c == std::vector<double>{1.0, 1.0});
        CHECK(w.aggregate.data()[0] == 1.0);
    }
    SUBCASE("overlapping rows give fractional weights") {
        const WrapUp w = tas_wrapup(table_of(3, {{0, 1}, {1, 2}}));
        CHECK(w.objective == doctest::Approx(2.0));
        CHECK(w.weights.c[1] == doctest::Approx(1.0));
        CHECK(w.weights.c[0] + w.weights.c[2] == doctest::Approx(1.0));
        CHECK_FALSE(w.complete);
    }
    SUBCASE("one-hot rows for every node give the exact sum") {
        const WrapUp w = tas_wrapup(table_of(4, {{0, 1}, {2}, {3}, {1}}));
        CHECK(w.complete);
        CHECK(w.aggregate.data()[0] == 1 + 2 + 3);
    }
}

TEST_CASE("TAS runs") {
    SUBCASE("complete graph: one round suffices") {
        const auto samples = make_samples(6, 2, 4);
        const auto signs = draw_sign_matrix(5, 6, 4);
        const auto r = run_tas(complete_graph(6), samples, signs, 1);
        const auto full = full_aggregate(samples, signs, 5);
        for (const auto& w : r.wrapups) {
            CHECK(w.complete);
            CHECK(rel_err(w.aggregate, full) < 1e-9);
        }
        CHECK(r.log.total_scalars() == 6 * payload_sizes(2, 5).d_tas);
    }
    SUBCASE("single node, zero rounds") {
        const auto samples = make_samples(1, 2, 4);
        const auto signs = draw_sign_matrix(3, 1, 4);
        const auto r = run_tas(Graph(1), samples, signs, 0);
        CHECK(r.wrapups[0].weights.c == std::vector<double>{1.0});
        CHECK(r.log.total_scalars() == 0);
    }
    SUBCASE("random graphs, diameter rounds: exact sum or valid partial weights; rows stay tag-consistent") {
        for (std::uint64_t s = 0; s < 6; ++s) {
            Rng rng(s + 7);
            const Graph g = random_geometric(25, rng);
            const auto samples = make_samples(25, 2, s);
            const auto signs = draw_sign_matrix(4, 25, s);
            const auto full = full_aggregate(samples, signs, 4);
            const auto r = run_tas(g, samples, signs, diameter(g));
            for (const auto& ev : r.log.events()) CHECK(ev.scalars == payload_sizes(2, 4).d_tas);
            for (std::size_t k = 0; k < r.tables.size(); ++k) {
                for (const auto& row : r.tables[k].rows) CHECK(rel_err(row.payload, tag_sum(row.tag, samples, signs)) < 1e-9);
                const auto& w = r.wrapups[k];
                for (double c : w.weights.c) {
                    CHECK(c >= 0.0);
                    CHECK(c <= 1.0);
                }
                if (w.complete) CHECK(rel_err(w.aggregate, full) < 1e-9);
                CHECK(rel_err(w.aggregate, oracle::batch_sums(samples, signs, w.weights.c)) < 1e-8);
            }
        }
    }
    SUBCASE("tree schedule") {
        const auto d = payload_sizes(2, 10).d_tas;
        const TreeTopology t4 = four_node_tree();
        CHECK(run_tas_tree(t4, make_samples(4, 2, 1), draw_sign_matrix(10, 4, 1)).log.total_scalars() == 5 * d);
        const auto bt = run_tas_tree(complete_binary_tree(3), make_samples(15, 2, 1), draw_sign_matrix(10, 15, 1));
        CHECK(bt.log.total_scalars() == 21 * d);
        CHECK(bt.all_complete());
        const auto single = run_tas_tree(complete_binary_tree(0), make_samples(1, 2, 1), draw_sign_matrix(10, 1, 1));
        CHECK(single.log.total_scalars() == d);

        for (std::uint64_t s = 0; s < 5; ++s) {
            Rng rng(s);
            const Graph g = random_geometric(40, rng);
            const TreeTopology t = spanning_tree(g, center_root(g, rng));
            const auto samples = make_samples(40, 2, s);
            const auto signs = draw_sign_matrix(10, 40, s);
            const auto r = run_tas_tree(t, samples, signs);
            CHECK(r.log.total_scalars() == traffic_tas_random_tree(t.lambda, t.lambda_bar, d));
            const auto full = full_aggregate(samples, signs, 10);
            for (const auto& w : r.wrapups) {
                CHECK(w.complete);
                CHECK(rel_err(w.aggregate, full) < 1e-9);
            }
        }
    }
    SUBCASE("clustered schedule") {
        const auto d = payload_sizes(2, 10).d_tas;
        for (auto [n, n_c] : std::vector<std::pair<int, int>>{{10, 2}, {10, 1}, {30, 5}}) {
            Rng rng(static_cast<std::uint64_t>(n * 7 + n_c));
            const auto topo = clustered(n, n_c, rng);
            const auto samples = make_samples(n, 2, 9);
            const auto signs = draw_sign_matrix(10, n, 9);
            const auto r = run_tas_clustered(topo, samples, signs);
            CHECK(r.log.total_scalars() == (n + n_c) * d);
            const auto full = full_aggregate(samples, signs, 10);
            for (const auto& w : r.wrapups) CHECK(rel_err(w.aggregate, full) < 1e-9);
            CHECK(run_mf_clustered(topo, samples).log.total_scalars() == (n - n_c + n_c * n) * 3);
        }
    }
}

TEST_CASE("consensus weights") {
    SUBCASE("metropolis on a path") {
        const auto w = consensus_weights(path_graph(3), ConsensusScheme::Metropolis);
        CHECK(w(0, 1) == doctest::Approx(1.0 / 3));
        CHECK(w(1, 2) == doctest::Approx(1.0 / 3));
        CHECK(w(0, 0) == doctest::Approx(2.0 / 3));
        CHECK(w(1, 1) == doctest::Approx(1.0 / 3));
        CHECK(w(0, 2) == 0.0);
    }
    SUBCASE("perron on a complete graph is the averaging matrix") {
        const auto w = consensus_weights(complete_graph(5), ConsensusScheme::Perron);
        CHECK((w.array() - 0.2).abs().maxCoeff() < 1e-12);
    }
    SUBCASE("doubly stochastic and contracting") {
        Rng rng(3);
        const Graph g = random_geometric(30, rng);
        for (auto scheme : {ConsensusScheme::Metropolis, ConsensusScheme::Perron}) {
            const auto w = consensus_weights(g, scheme);
            CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
            CHECK((w.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
            const Eigen::MatrixXd j = Eigen::MatrixXd::Constant(30, 30, 1.0 / 30);
            const Eigen::MatrixXd dev = w - j;
            CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dev).eigenvalues().cwiseAbs().maxCoeff() < 1.0);
        }
    }
    SUBCASE("disconnected graphs are rejected") {
        CHECK_THROWS(consensus_weights(Graph(2), ConsensusScheme::Metropolis));
    }
}

TEST_CASE("consensus runs") {
    Rng rng(11);
    const Graph g = random_geometric(20, rng);
    const auto samples = make_samples(20, 2, 2);
    const auto signs = draw_sign_matrix(6, 20, 2);
    const auto full = full_aggregate(samples, signs, 6);
    const long long d = payload_sizes(2, 6).d_tas;

    const auto r0 = run_consensus(g, samples, signs, 0, ConsensusScheme::Metropolis);
    for (int k = 0; k < 20; ++k)
        CHECK(rel_err(r0.states[static_cast<std::size_t>(k)], 20.0 * local_aggregate(samples[static_cast<std::size_t>(k)], signs, k)) < 1e-12);

    // 500 iterations are not enough on every 20-node geometric graph (slow mixing), 3000 are
    const auto r = run_consensus(g, samples, signs, 3000, ConsensusScheme::Metropolis);
    for (const auto& s : r.states) CHECK(rel_err(s, full) < 1e-6);
    CHECK(r.log.total_scalars() == 3000LL * 20 * d);
    const auto fast = run_consensus(complete_graph(20), samples, signs, 500, ConsensusScheme::Metropolis);
    for (const auto& s : fast.states) CHECK(rel_err(s, full) < 1e-6);

    ConsensusSimulation sim(g, samples, signs, ConsensusScheme::Perron);
    auto sq_err = [&] {
        double err = 0.0;
        for (const auto& s : sim.states()) err += (s.data() - full.data()).squaredNorm();
        return err;
    };
    const double start = sq_err();
    double prev = start;
    for (int t = 0; t < 50 * diameter(g); ++t) {
        sim.step();
        const double err = sq_err();
        CHECK(err <= prev * (1 + 1e-12));
        prev = err;
    }
    CHECK(prev < 1e-6 * start);

    // state equals the weighted aggregate with the effective weights N (W^t)
    ConsensusSimulation sim4(g, samples, signs, ConsensusScheme::Metropolis);
    for (int t = 0; t < 4; ++t) sim4.step();
    const Eigen::MatrixXd eff = sim4.effective_weights();
    for (int k = 0; k < 20; k += 7) {
        std::vector<double> c(20);
        for (int i = 0; i < 20; ++i) c[static_cast<std::size_t>(i)] = eff(k, i);
        CHECK(rel_err(sim4.state(k), weighted_aggregate(samples, signs, c)) < 1e-12);
    }
}
