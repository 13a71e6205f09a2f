#include "spsnet/serialize.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>
#include <system_error>

namespace spsnet {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    auto [end, ec] = std::to_chars(buf, buf + 16, value, 16);
    std::string s(buf, end);
    return std::string(16 - s.size(), '0') + s;
}

std::string csv_quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

void CsvWriter::provenance(std::string_view tool, std::uint64_t config_hash) {
    out_ << "# tool=" << tool << " version=" << kToolVersion << " config_hash=" << hex64(config_hash) << "\r\n";
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << csv_quote(fields[i]);
    }
    out_ << "\r\n";
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const Graph& graph) {
    nlohmann::json j;
    j["N"] = graph.size();
    nlohmann::json edges = nlohmann::json::array();
    for (auto [a, b] : graph.edges()) edges.push_back({a, b});
    j["edges"] = std::move(edges);
    if (!graph.positions.empty()) {
        nlohmann::json pos = nlohmann::json::array();
        for (const auto& x : graph.positions) pos.push_back(std::vector<double>(x.data(), x.data() + x.size()));
        j["positions"] = std::move(pos);
    }
    if (graph.d_comm) j["d_comm"] = *graph.d_comm;
    return j;
}

nlohmann::json to_json(const TreeTopology& tree) {
    nlohmann::json j;
    j["N"] = tree.size();
    j["root"] = tree.root;
    j["parent"] = tree.parent;
    j["level"] = tree.level;
    j["L"] = tree.L;
    j["lambda"] = tree.lambda;
    j["lambda_bar"] = tree.lambda_bar;
    return j;
}

nlohmann::json to_json(const ClusteredTopology& topo) {
    nlohmann::json j;
    j["N"] = topo.size();
    j["n_c"] = topo.n_c;
    j["head"] = topo.head;
    j["assign"] = topo.assign;
    j["sizes"] = topo.sizes;
    return j;
}

Graph graph_from_json(const nlohmann::json& j) {
    Graph g(j.at("N").get<int>());
    for (const auto& e : j.at("edges")) g.add_edge(e.at(0).get<int>(), e.at(1).get<int>());
    if (j.contains("positions")) {
        for (const auto& p : j["positions"]) {
            const auto v = p.get<std::vector<double>>();
            g.positions.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
        }
    }
    if (j.contains("d_comm")) g.d_comm = j["d_comm"].get<double>();
    return g;
}

std::string to_dot(const Graph& graph, std::string_view name) {
    std::ostringstream out;
    out << "graph " << name << " {\n";
    for (int i = 0; i < graph.size(); ++i) {
        out << "  " << i;
        if (!graph.positions.empty()) {
            const auto& x = graph.positions[static_cast<std::size_t>(i)];
            out << " [pos=\"" << format_double(x[0]) << ',' << format_double(x.size() > 1 ? x[1] : 0.0) << "!\"]";
        }
        out << ";\n";
    }
    for (auto [a, b] : graph.edges()) out << "  " << a << " -- " << b << ";\n";
    out << "}\n";
    return out.str();
}

std::string to_dot(const TreeTopology& tree, std::string_view name) {
    std::ostringstream out;
    out << "digraph " << name << " {\n";
    for (int i = 0; i < tree.size(); ++i)
        out << "  " << i << " [label=\"" << i << " (l=" << tree.level[static_cast<std::size_t>(i)] << ")\"];\n";
    for (int i = 0; i < tree.size(); ++i)
        if (tree.parent[static_cast<std::size_t>(i)] >= 0)
            out << "  " << tree.parent[static_cast<std::size_t>(i)] << " -> " << i << ";\n";
    out << "}\n";
    return out.str();
}

// ---------------------------------------------------------------------------

std::vector<long long> rle_encode(const std::vector<std::uint8_t>& mask) {
    std::vector<long long> runs;
    std::uint8_t current = 0;
    long long length = 0;
    for (std::uint8_t v : mask) {
        const std::uint8_t b = v ? 1 : 0;
        if (b != current) {
            runs.push_back(length);
            current = b;
            length = 0;
        }
        ++length;
    }
    runs.push_back(length);
    return runs;
}

std::vector<std::uint8_t> rle_decode(const std::vector<long long>& runs) {
    std::vector<std::uint8_t> mask;
    std::uint8_t current = 0;
    for (long long r : runs) {
        if (r < 0) throw std::invalid_argument("rle_decode: negative run");
        mask.insert(mask.end(), static_cast<std::size_t>(r), current);
        current ^= 1;
    }
    return mask;
}

nlohmann::json to_json(const RegionResult& region) {
    nlohmann::json j;
    j["grid_shape"] = region.grid_shape;
    nlohmann::json box = nlohmann::json::array();
    for (const auto& iv : region.box) box.push_back({iv.lo, iv.hi});
    j["box"] = std::move(box);
    j["m"] = region.m;
    j["q"] = region.q;
    j["tie_seed"] = region.tie_seed;
    j["member_count"] = region.member_count;
    j["cell_volume"] = region.cell_volume;
    j["volume"] = region.volume;
    if (region.bounding_box) {
        nlohmann::json bb = nlohmann::json::array();
        for (const auto& iv : *region.bounding_box) bb.push_back({iv.lo, iv.hi});
        j["bounding_box"] = std::move(bb);
    } else {
        j["bounding_box"] = nullptr;
    }
    j["mask_rle"] = rle_encode(region.member_mask);
    return j;
}

RegionResult region_from_json(const nlohmann::json& j) {
    RegionResult r;
    r.grid_shape = j.at("grid_shape").get<std::vector<int>>();
    for (const auto& iv : j.at("box")) r.box.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    r.m = j.at("m").get<int>();
    r.q = j.at("q").get<int>();
    r.tie_seed = j.at("tie_seed").get<std::uint64_t>();
    r.member_count = j.at("member_count").get<long long>();
    r.cell_volume = j.at("cell_volume").get<double>();
    r.volume = j.at("volume").get<double>();
    if (!j.at("bounding_box").is_null()) {
        Box bb;
        for (const auto& iv : j["bounding_box"]) bb.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
        r.bounding_box = std::move(bb);
    }
    r.member_mask = rle_decode(j.at("mask_rle").get<std::vector<long long>>());
    return r;
}

std::vector<std::string> region_summary_header(int n_p) {
    std::vector<std::string> h{"volume", "member_count", "cell_count"};
    for (int d = 0; d < n_p; ++d) {
        h.push_back("lo_" + std::to_string(d));
        h.push_back("hi_" + std::to_string(d));
    }
    return h;
}

std::vector<std::string> region_summary_row(const RegionResult& region) {
    std::vector<std::string> row{format_double(region.volume), std::to_string(region.member_count),
                                 std::to_string(region.cell_count())};
    for (std::size_t d = 0; d < region.box.size(); ++d) {
        if (region.bounding_box) {
            row.push_back(format_double((*region.bounding_box)[d].lo));
            row.push_back(format_double((*region.bounding_box)[d].hi));
        } else {
            row.emplace_back();
            row.emplace_back();
        }
    }
    return row;
}

}  // namespace spsnet
