#pragma once

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "spsnet/diffusion.hpp"
#include "spsnet/sps.hpp"
#include "spsnet/topology.hpp"

namespace spsnet {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// RFC-4180 field quoting: fields containing a comma, quote, CR or LF are
/// wrapped in quotes with embedded quotes doubled.
std::string csv_quote(std::string_view field);

/// Shortest round-trip decimal form ('.' separator, locale independent).
std::string format_double(double value);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    /// "# tool=<name> version=<v> config_hash=<hex>" comment line.
    void provenance(std::string_view tool, std::uint64_t config_hash);
    void row(const std::vector<std::string>& fields);

private:
    std::ostream& out_;
};

nlohmann::json to_json(const Graph& graph);
nlohmann::json to_json(const TreeTopology& tree);
nlohmann::json to_json(const ClusteredTopology& topo);
Graph graph_from_json(const nlohmann::json& j);

std::string to_dot(const Graph& graph, std::string_view name = "network");
std::string to_dot(const TreeTopology& tree, std::string_view name = "tree");

/// Run-length encoding of a 0/1 mask: alternating run lengths starting with
/// a run of zeros (possibly of length 0).
std::vector<long long> rle_encode(const std::vector<std::uint8_t>& mask);
std::vector<std::uint8_t> rle_decode(const std::vector<long long>& runs);

nlohmann::json to_json(const RegionResult& region);
RegionResult region_from_json(const nlohmann::json& j);

/// volume,member_count,cell_count,lo_0,hi_0,... (bounds empty when no member).
std::vector<std::string> region_summary_header(int n_p);
std::vector<std::string> region_summary_row(const RegionResult& region);

}  // namespace spsnet
