#pragma once

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spsnet/diffusion.hpp"
#include "spsnet/model.hpp"
#include "spsnet/sps.hpp"
#include "spsnet/topology.hpp"

namespace spsnet {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class NetworkKind { RandomGeometric, RandomTree, BinaryTree, Clustered, Complete, Path };
enum class ProtocolKind { None, Pf, Mf, Tas, Metropolis, Perron };

std::string to_string(NetworkKind kind);
std::string to_string(ProtocolKind kind);
NetworkKind parse_network_kind(const std::string& name);
ProtocolKind parse_protocol_kind(const std::string& name);

struct TopologyConfig {
    NetworkKind kind = NetworkKind::RandomGeometric;
    int N = 20;
    int L = 3;    // binary tree depth
    int n_c = 2;  // clustered
    int retry_budget = 100;
};

struct DiffusionConfig {
    ProtocolKind protocol = ProtocolKind::Mf;
    /// Rounds (or consensus iterations). -1 runs to the protocol's natural end:
    /// silence for PF/MF, the diameter (or full schedule) for TAS, 50 x diameter
    /// for consensus, 0 for none.
    int rounds = -1;
};

struct RegionConfig {
    std::optional<Box> box;            // default: default_box around the LS estimate
    std::vector<int> grid_per_dim;     // default: 64 (n_p = 1), 32 (n_p = 2), 16 (n_p = 3)
    int nodes = 0;                     // nodes evaluated per realization in tradeoff; 0 = all
    std::vector<int> checkpoints;      // consensus iterations evaluated in tradeoff
    bool allow_high_dim = false;
};

struct SweepConfig {
    std::vector<int> N_values{10, 20, 50, 100, 200, 300, 400, 500};
    std::vector<int> n_p_values{2, 3, 4, 5};
    int simulate = 0;  // trees per sweep point cross-checked by simulation
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    TopologyConfig topology;
    FieldConfig model;
    SpsConfig sps;
    DiffusionConfig diffusion;
    std::vector<ProtocolKind> tradeoff_protocols{ProtocolKind::Mf, ProtocolKind::Tas, ProtocolKind::Metropolis,
                                                 ProtocolKind::Perron};
    RegionConfig region;
    SweepConfig sweep;
    int trials = 100;
    int node = 0;  // designated node for coverage
    bool all_nodes = false;
    int threads = 1;  // 0 = hardware concurrency
    std::string output_dir = ".";

    /// Explicit data; when present it replaces the generated network data
    /// (used by the region subcommand on hand-made instances).
    std::optional<std::vector<RegressorSample>> samples;
    std::optional<std::vector<std::vector<int>>> signs;  // m rows of N entries

    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
/// FNV-1a of the canonical JSON dump.
std::uint64_t config_hash(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Realizations

struct Network {
    NetworkKind kind = NetworkKind::RandomGeometric;
    Graph graph;
    std::optional<TreeTopology> tree;
    std::optional<ClusteredTopology> clusters;

    int size() const { return graph.size(); }
};

Network build_network(const TopologyConfig& config, Rng& rng);

/// Node positions: the graph's own when it has n_x-dimensional positions,
/// otherwise i.i.d. uniform on the unit hypercube from `rng`.
std::vector<Vec> node_positions(const Network& network, int n_x, Rng& rng);

/// One (network, data, signs) draw derived from (seed, realization index).
struct Realization {
    Network network;
    std::vector<RegressorSample> samples;
    SignMatrix signs{2, 1};
};

Realization make_realization(const ExperimentConfig& config, std::uint64_t index);

/// `region.box` when given, otherwise default_box around the LS estimate of
/// the realization with its residual dispersion as the margin unit.
Box resolve_box(const ExperimentConfig& config, const Realization& realization);
/// `region.grid_per_dim` when given, otherwise 64 / 32 / 16 / 8 cells per
/// dimension for n_p = 1 / 2 / 3 / more.
std::vector<int> resolve_grid(const ExperimentConfig& config);

/// Steps any protocol round by round and exposes each node's current best
/// aggregate. Trees use the level schedule and clustered networks the
/// cluster schedule; other graphs run synchronous rounds.
class ProtocolDriver {
public:
    ProtocolDriver(ProtocolKind protocol, const Network& network, const std::vector<RegressorSample>& samples,
                   const SignMatrix& signs);
    ~ProtocolDriver();
    ProtocolDriver(const ProtocolDriver&) = delete;
    ProtocolDriver& operator=(const ProtocolDriver&) = delete;

    /// Executes one round; returns false (and does nothing) once finished.
    bool step();
    /// Steps until `rounds` have run (or -1: until the natural end).
    void run(int rounds);

    ProtocolKind protocol() const { return protocol_; }
    int rounds() const { return rounds_; }
    bool finished() const { return finished_; }

    AggregateSums aggregate(int node) const;
    /// Wrap-up weights c_{k,.}; consensus reports N (W^t)_{k,.} unclipped.
    std::vector<double> weights(int node) const;
    const TrafficLog& log() const;
    long long total_scalars() const { return log().total_scalars(); }

private:
    struct Impl;
    ProtocolKind protocol_;
    const Network& network_;
    const std::vector<RegressorSample>& samples_;
    const SignMatrix& signs_;
    std::unique_ptr<Impl> impl_;
    int rounds_ = 0;
    bool finished_ = false;
};

// ---------------------------------------------------------------------------
// Experiments

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must be
/// written to per-index slots, so the outcome is independent of scheduling.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

struct CoverageRow {
    int trial = 0;
    int node = 0;
    int rounds_done = 0;
    long long cumulative_scalars = 0;
    bool covers_truth = false;
    double c_sum = 0.0;
};

struct BinomialInterval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval at z standard deviations.
BinomialInterval wilson_interval(long long hits, long long n, double z = 1.959963984540054);

struct CoverageReport {
    ProtocolKind protocol = ProtocolKind::Mf;
    int rounds = -1;
    std::vector<CoverageRow> rows;  // sorted by (trial, node)
    long long evaluations = 0;
    long long hits = 0;
    double coverage = 0.0;
    BinomialInterval ci;
    double nominal = 0.0;  // 1 - q/m
    double node_min = 0.0;  // per-node coverage extremes (all_nodes)
    double node_max = 0.0;
};

/// Fixed network and regressors (realization 0); each trial redraws noise
/// and signs from (seed, trial) and tests p_true at the designated node(s).
CoverageReport run_coverage(const ExperimentConfig& config);

struct TradeoffRow {
    int realization = 0;
    ProtocolKind protocol = ProtocolKind::Mf;
    int round = 0;
    double scalars_per_node = 0.0;
    double mean_volume = 0.0;
};

struct TradeoffPoint {
    ProtocolKind protocol = ProtocolKind::Mf;
    int round = 0;
    double scalars_per_node = 0.0;
    double mean_volume = 0.0;
};

struct TradeoffReport {
    std::vector<TradeoffRow> rows;
    std::vector<TradeoffPoint> curve;  // averaged over realizations
};

/// `trials` independent realizations; for every protocol, the region is
/// evaluated after each round (consensus: at the checkpoints) at the selected
/// nodes. Finished protocols keep their final point when curves are averaged.
TradeoffReport run_tradeoff(const ExperimentConfig& config);

struct SuccessRow {
    int N = 0;
    int n_p = 0;
    int trial = 0;
    int L = 0;
    long long tas_scalars = 0;
    long long mf_scalars = 0;
    bool tas_wins = false;
    bool simulated = false;
};

struct SuccessPoint {
    int N = 0;
    int n_p = 0;
    int trials = 0;
    int tas_wins = 0;
    double rate = 0.0;
};

struct SuccessReport {
    std::vector<SuccessRow> rows;
    std::vector<SuccessPoint> points;
};

/// Random spanning trees (centered root) of random geometric networks; TAS
/// wins when its level-scheduled total is strictly below MF's.
SuccessReport run_success_rate(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Output

void write_csv(std::ostream& out, const CoverageReport& report, std::uint64_t hash);
void write_summary_csv(std::ostream& out, const CoverageReport& report, std::uint64_t hash);
void write_csv(std::ostream& out, const TradeoffReport& report, std::uint64_t hash, bool curve);
void write_csv(std::ostream& out, const SuccessReport& report, std::uint64_t hash, bool points);

nlohmann::json to_json(const CoverageReport& report);
nlohmann::json to_json(const TradeoffReport& report);
nlohmann::json to_json(const SuccessReport& report);

}  // namespace spsnet
