#include "doctest.h"

#include <sstream>

#include "spsnet/serialize.hpp"

using namespace spsnet;

TEST_CASE("hashing") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
    CHECK(hex64(1) == "0000000000000001");
}

TEST_CASE("csv quoting and number formatting") {
    CHECK(csv_quote("plain") == "plain");
    CHECK(csv_quote("a,b") == "\"a,b\"");
    CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_quote("two\nlines") == "\"two\nlines\"");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    CHECK(format_double(-1.5e-300) == "-1.5e-300");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);

    std::ostringstream out;
    CsvWriter w(out);
    w.provenance("coverage", 0xabcULL);
    w.row({"a", "b,c", "1"});
    CHECK(out.str() == "# tool=coverage version=0.1.0 config_hash=0000000000000abc\r\na,\"b,c\",1\r\n");
}

TEST_CASE("run-length encoding") {
    const std::vector<std::uint8_t> mask{1, 1, 0, 0, 0, 1, 0};
    const auto runs = rle_encode(mask);
    CHECK(runs == std::vector<long long>{0, 2, 3, 1, 1});
    CHECK(rle_decode(runs) == mask);
    CHECK(rle_decode(rle_encode({})).empty());
    CHECK(rle_decode(rle_encode(std::vector<std::uint8_t>(9, 0))) == std::vector<std::uint8_t>(9, 0));
    CHECK_THROWS(rle_decode({1, -2}));

    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint8_t> m(static_cast<std::size_t>(rng() % 200));
        for (auto& v : m) v = static_cast<std::uint8_t>(rng() % 2);
        CHECK(rle_decode(rle_encode(m)) == m);
    }
}

TEST_CASE("graph json and dot") {
    Rng rng(4);
    const Graph g = random_geometric(15, rng);
    const nlohmann::json j = to_json(g);
    CHECK(j.at("N") == 15);
    const Graph h = graph_from_json(nlohmann::json::parse(j.dump()));
    CHECK(h.edges() == g.edges());
    REQUIRE(h.positions.size() == g.positions.size());
    CHECK(h.positions[3] == g.positions[3]);

    const std::string dot = to_dot(path_graph(3));
    CHECK(dot.rfind("graph", 0) == 0);
    CHECK(dot.find("0 -- 1") != std::string::npos);
    const std::string tree_dot = to_dot(complete_binary_tree(1));
    CHECK(tree_dot.rfind("digraph", 0) == 0);
    CHECK(tree_dot.find("0 -> 1") != std::string::npos);
}

TEST_CASE("region json round trip") {
    RegressorSample a{0, Vec(), Vec::Ones(1), 1.0};
    RegressorSample b{1, Vec(), Vec::Ones(1), -1.0};
    SignMatrix signs(2, 2);
    signs.set(1, 1, -1);
    const AggregateSums agg = full_aggregate({a, b}, signs, 2);
    const std::vector<int> grid{8};
    const RegionResult r = evaluate_region(agg, Box{{-2.0, 2.0}}, grid, 1, 77);
    const RegionResult back = region_from_json(nlohmann::json::parse(to_json(r).dump()));
    CHECK(back.member_mask == r.member_mask);
    CHECK(back.member_count == r.member_count);
    CHECK(back.volume == r.volume);
    CHECK(back.tie_seed == 77);
    REQUIRE(back.bounding_box.has_value());
    CHECK(back.bounding_box->at(0).lo == r.bounding_box->at(0).lo);

    const auto header = region_summary_header(1);
    CHECK(header == std::vector<std::string>{"volume", "member_count", "cell_count", "lo_0", "hi_0"});
    CHECK(region_summary_row(r).size() == header.size());
}
