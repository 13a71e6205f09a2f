#include "doctest.h"

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "spsnet/model.hpp"

using namespace spsnet;

namespace {

FieldConfig poly(int n_p) {
    FieldConfig c;
    c.n_p = n_p;
    c.p_true = Vec::Zero(n_p);
    return c;
}

}  // namespace

TEST_CASE("polynomial regressor uses graded monomials starting at 1") {
    const Vec x = (Vec(2) << 0.5, 0.2).finished();
    const Vec phi3 = regressor(x, poly(3));
    REQUIRE(phi3.size() == 3);
    CHECK(phi3[0] == 1.0);
    CHECK(phi3[1] == 0.5);
    CHECK(phi3[2] == 0.2);

    CHECK(regressor(x, poly(1)) == Vec::Ones(1));

    const Vec phi6 = regressor(x, poly(6));
    CHECK(phi6[3] == doctest::Approx(0.25));
    CHECK(phi6[4] == doctest::Approx(0.1));
    CHECK(phi6[5] == doctest::Approx(0.04));
}

TEST_CASE("seeded-random regressor is deterministic in position and seed") {
    FieldConfig c = poly(4);
    c.regressor_family = RegressorFamily::SeededRandom;
    c.regressor_seed = 17;
    const Vec x = (Vec(2) << 0.3, 0.9).finished();
    const Vec a = regressor(x, c);
    CHECK(a == regressor(x, c));
    CHECK(a.cwiseAbs().maxCoeff() <= 1.0);
    c.regressor_seed = 18;
    CHECK(a != regressor(x, c));
    const Vec y = (Vec(2) << 0.31, 0.9).finished();
    c.regressor_seed = 17;
    CHECK(a != regressor(y, c));
}

TEST_CASE("regressor rejects a position of the wrong dimension") {
    const Vec x = Vec::Zero(3);
    CHECK_THROWS_AS(regressor(x, poly(2)), DimensionError);
}

TEST_CASE("eval_field is the inner product") {
    CHECK(eval_field((Vec(2) << 1, 2).finished(), (Vec(2) << 3, 4).finished()) == 11.0);
    CHECK(eval_field(Vec::Zero(3), (Vec(3) << 5, -1, 2).finished()) == 0.0);
    CHECK(eval_field(Vec::Ones(1), (Vec(1) << 0.2).finished()) == doctest::Approx(0.2));
    CHECK_THROWS_AS(eval_field(Vec::Ones(2), Vec::Ones(3)), DimensionError);
}

TEST_CASE("field config validation") {
    FieldConfig c = poly(2);
    CHECK_NOTHROW(c.validate());
    c.p_true = Vec::Zero(3);
    CHECK_THROWS_AS(c.validate(), DimensionError);
    c = poly(2);
    c.n_p = 0;
    CHECK_THROWS_AS(c.validate(), DimensionError);
    c = poly(2);
    c.noise.scale = -1.0;
    CHECK_THROWS_AS(c.validate(), DimensionError);
}

TEST_CASE("noise and regressor names round-trip") {
    for (auto k : {NoiseKind::Gaussian, NoiseKind::Uniform, NoiseKind::Laplace, NoiseKind::TwoPoint})
        CHECK(parse_noise_kind(to_string(k)) == k);
    CHECK(parse_regressor_family("polynomial-basis") == RegressorFamily::Polynomial);
    CHECK(parse_regressor_family("seeded-random") == RegressorFamily::SeededRandom);
    CHECK_THROWS(parse_noise_kind("cauchy"));
}

TEST_CASE("generate_measurements") {
    std::vector<Vec> pos;
    Rng prng(3);
    for (int i = 0; i < 1000; ++i) pos.push_back((Vec(2) << uniform01(prng), uniform01(prng)).finished());
    FieldConfig c = poly(3);
    c.p_true = (Vec(3) << 0.2, 0.3, 0.4).finished();

    SUBCASE("zero noise reproduces the model exactly") {
        c.noise.scale = 0.0;
        Rng rng(1);
        for (const auto& s : generate_measurements(pos, c, rng)) CHECK(s.y == eval_field(s.phi, c.p_true));
    }
    SUBCASE("gaussian noise has mean within 4 sigma / sqrt(N) of zero") {
        c.noise.scale = 0.1;
        Rng rng(2);
        const auto samples = generate_measurements(pos, c, rng);
        double mean = 0.0;
        for (const auto& s : samples) mean += s.y - eval_field(s.phi, c.p_true);
        mean /= samples.size();
        CHECK(std::abs(mean) < 4 * 0.1 / std::sqrt(1000.0));
    }
    SUBCASE("same seed gives identical samples") {
        Rng a(9), b(9);
        const auto sa = generate_measurements(pos, c, a);
        const auto sb = generate_measurements(pos, c, b);
        for (std::size_t i = 0; i < sa.size(); ++i) {
            CHECK(sa[i].y == sb[i].y);
            CHECK(sa[i].phi == sb[i].phi);
            CHECK(sa[i].node_id == static_cast<int>(i));
        }
    }
    SUBCASE("redraw_noise keeps regressors") {
        Rng a(9);
        auto s = generate_measurements(pos, c, a);
        const auto before = s;
        Rng b(10);
        redraw_noise(s, c, b);
        CHECK(s[0].phi == before[0].phi);
        CHECK(s[0].y != before[0].y);
    }
}

TEST_CASE("every noise law is symmetric about zero (two-sample KS)") {
    for (auto kind : {NoiseKind::Gaussian, NoiseKind::Uniform, NoiseKind::Laplace, NoiseKind::TwoPoint}) {
        CAPTURE(to_string(kind));
        NoiseSpec spec{kind, 0.7};
        Rng rng(1234);
        std::vector<double> w(100000), neg(100000);
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] = spec.draw(rng);
            neg[i] = -w[i];
        }
        CHECK(oracle::ks_distance(w, neg) < 0.01);
    }
}

TEST_CASE("two-point noise takes only the values +-scale") {
    NoiseSpec spec{NoiseKind::TwoPoint, 0.25};
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double w = spec.draw(rng);
        CHECK((w == 0.25 || w == -0.25));
    }
}
