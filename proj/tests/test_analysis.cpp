#include "doctest.h"

#include <cmath>
#include <vector>

#include "spsnet/analysis.hpp"
#include "spsnet/diffusion.hpp"

using namespace spsnet;

namespace {
using Census = std::vector<long long>;
}

TEST_CASE("random-tree formulas") {
    const Census lam{1, 2, 1}, bar{0, 1, 1};
    CHECK(traffic_tas_random_tree(lam, bar, 7) == 5 * 7);
    CHECK(traffic_mf_random_tree(lam, bar, 4, 7) == 10 * 7);

    Census bl, bb;
    binary_tree_census(3, bl, bb);
    CHECK(traffic_tas_random_tree(bl, bb, 1) == 21);
    CHECK(traffic_mf_random_tree(bl, bb, 15, 1) == 113);

    // single node: empty interior sums evaluate to zero
    CHECK(traffic_tas_random_tree(Census{1}, Census{1}, 50) == 50);
    CHECK(traffic_mf_random_tree(Census{1}, Census{1}, 1, 3) == 6);
}

TEST_CASE("binary-tree formulas") {
    CHECK(traffic_tas_binary(15, 1) == 21);
    CHECK(traffic_tas_binary(63, 50) == 4650);
    CHECK(traffic_tas_binary(1, 50) == 0);
    CHECK(traffic_mf_binary(15, 1) == 113);
    CHECK(traffic_mf_binary(63, 3) == 5955);
    CHECK(traffic_mf_binary(3, 1) == 5);
    CHECK_THROWS_AS(traffic_tas_binary(14, 1), AnalysisError);
    CHECK_THROWS_AS(traffic_mf_binary(0, 1), AnalysisError);
}

TEST_CASE("clustered formulas") {
    CHECK(traffic_tas_clustered(10, 2, 1) == 12);
    CHECK(traffic_tas_clustered(9, 9, 1) == 18);
    CHECK(traffic_tas_clustered(140, 20, 50) == 8000);
    CHECK(traffic_mf_clustered(10, 2, 1) == 28);
    CHECK(traffic_mf_clustered(10, 1, 1) == 19);
    CHECK(traffic_mf_clustered(140, 20, 3) == 8760);
    CHECK_THROWS_AS(traffic_tas_clustered(5, 0, 1), AnalysisError);
    CHECK_THROWS_AS(traffic_mf_clustered(5, 6, 1), AnalysisError);
}

TEST_CASE("critical size") {
    const CriticalSize c = critical_n(2, 10);
    CHECK(c.k1 == doctest::Approx(0.06));
    CHECK(c.n_star == doctest::Approx(48.96).epsilon(1e-3));
    // N* / (n_p m) = 3 (n_p + 2) / (2 (n_p + 1)) + O(1 / (n_p m)), so it approaches 3/2 from above
    CHECK(critical_n(50, 10).n_star / 500.0 == doctest::Approx(1.5568).epsilon(1e-4));
    for (int n_p : {100, 200, 400}) {
        const double ratio = critical_n(n_p, 10).n_star / (n_p * 10.0);
        CAPTURE(n_p);
        CHECK(ratio >= 1.45);
        CHECK(ratio <= 1.55);
    }
    CHECK_THROWS_AS(critical_n(0, 10), AnalysisError);
    CHECK_THROWS_AS(critical_n(2, 1), AnalysisError);
    // K1 peaks at 1/2 (n_p = 1, m = 2), below 3 / (2 + sqrt 13), so the root is always real
    CHECK(critical_n(1, 2).n_star > 0.0);
}

TEST_CASE("binary census fed to the random-tree formulas gives the binary specializations") {
    for (int L = 1; L <= 8; ++L) {
        Census lam, bar;
        binary_tree_census(L, lam, bar);
        const long long n = (1LL << (L + 1)) - 1;
        CAPTURE(L);
        CHECK(traffic_tas_random_tree(lam, bar, 50) == traffic_tas_binary(n, 50));
        CHECK(traffic_mf_random_tree(lam, bar, n, 3) == traffic_mf_binary(n, 3));
        const TreeTopology t = complete_binary_tree(L);
        CHECK(t.lambda == lam);
        CHECK(t.lambda_bar == bar);
    }
}

TEST_CASE("comparisons") {
    SUBCASE("worked comparisons") {
        const auto mf15 = predict_binary(Protocol::Mf, 15, 2, 10);
        const auto tas15 = predict_binary(Protocol::Tas, 15, 2, 10);
        CHECK(mf15.scalars == 339);
        CHECK(tas15.scalars == 1050);
        const Comparison c15 = compare(mf15, tas15);
        CHECK(c15.cheaper == Protocol::Mf);
        CHECK(c15.margin == 711);

        const Comparison c63 = compare(predict_binary(Protocol::Tas, 63, 2, 10), predict_binary(Protocol::Mf, 63, 2, 10));
        CHECK(c63.cheaper == Protocol::Tas);
        CHECK(c63.tas_scalars == 4650);
        CHECK(c63.mf_scalars == 5955);

        const Comparison cc =
            compare(predict_clustered(Protocol::Tas, 140, 20, 2, 10), predict_clustered(Protocol::Mf, 140, 20, 2, 10));
        CHECK(cc.cheaper == Protocol::Tas);
        CHECK(cc.tas_scalars == 8000);
        CHECK(cc.mf_scalars == 8760);
    }
    SUBCASE("crossover brackets the critical size") {
        CHECK(compare(predict_binary(Protocol::Tas, 31, 2, 10), predict_binary(Protocol::Mf, 31, 2, 10)).cheaper ==
              Protocol::Mf);
        CHECK(compare(predict_binary(Protocol::Tas, 63, 2, 10), predict_binary(Protocol::Mf, 63, 2, 10)).cheaper ==
              Protocol::Tas);
    }
    SUBCASE("sign agrees with N - N* away from N*, and TAS stays cheaper for all larger trees") {
        for (int n_p = 1; n_p <= 6; ++n_p)
            for (int m : {2, 5, 10, 40}) {
                double n_star = 0.0;
                try {
                    n_star = critical_n(n_p, m).n_star;
                } catch (const AnalysisError&) {
                    continue;
                }
                bool seen_tas = false;
                // N = 1 sends no TAS traffic at all and sits below the smaller root
                CHECK(traffic_tas_binary(1, 1) < traffic_mf_binary(1, 1));
                for (int L = 1; L <= 14; ++L) {
                    const long long n = (1LL << (L + 1)) - 1;
                    const Comparison c = compare(predict_binary(Protocol::Tas, n, n_p, m), predict_binary(Protocol::Mf, n, n_p, m));
                    const bool tas = c.cheaper == Protocol::Tas && !c.tie;
                    CAPTURE(n_p);
                    CAPTURE(m);
                    CAPTURE(n);
                    if (std::abs(n - n_star) > 1.0) CHECK(tas == (n > n_star));
                    if (seen_tas) CHECK(tas);
                    seen_tas = seen_tas || tas;
                }
                CHECK(seen_tas);
            }
    }
    SUBCASE("mismatched predictions are rejected") {
        CHECK_THROWS_AS(compare(predict_binary(Protocol::Tas, 15, 2, 10), predict_binary(Protocol::Tas, 15, 2, 10)),
                        AnalysisError);
        CHECK_THROWS_AS(compare(predict_binary(Protocol::Tas, 15, 2, 10), predict_binary(Protocol::Mf, 31, 2, 10)),
                        AnalysisError);
        CHECK_THROWS_AS(compare(predict_binary(Protocol::Tas, 15, 2, 10), predict_binary(Protocol::Mf, 15, 3, 10)),
                        AnalysisError);
        CHECK_THROWS_AS(compare(predict_binary(Protocol::Tas, 15, 2, 10), predict_clustered(Protocol::Mf, 15, 3, 2, 10)),
                        AnalysisError);
    }
}

TEST_CASE("malformed censuses") {
    CHECK_THROWS_AS(traffic_tas_random_tree(Census{2, 1}, Census{0, 1}, 1), AnalysisError);
    CHECK_THROWS_AS(traffic_tas_random_tree(Census{1, 2}, Census{0}, 1), AnalysisError);
    CHECK_THROWS_AS(traffic_tas_random_tree(Census{1, 2}, Census{0, 3}, 1), AnalysisError);
    CHECK_THROWS_AS(traffic_tas_random_tree(Census{1, 2}, Census{0, 1}, 1), AnalysisError);
    CHECK_THROWS_AS(traffic_tas_random_tree(Census{}, Census{}, 1), AnalysisError);
    CHECK_THROWS_AS(traffic_mf_random_tree(Census{1, 2, 1}, Census{0, 1, 1}, 5, 1), AnalysisError);
}

TEST_CASE("predictions carry their parameters") {
    const auto p = predict_random_tree(Protocol::Mf, Census{1, 2, 1}, Census{0, 1, 1}, 2, 10);
    CHECK(p.n == 4);
    CHECK(p.L == 2);
    CHECK(p.d_mf == 3);
    CHECK(p.d_tas == 50);
    CHECK(p.scalars == 30);
    CHECK(to_string(Protocol::Tas) == "TAS");
}
