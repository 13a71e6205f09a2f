#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spsnet/lp.hpp"
#include "spsnet/model.hpp"
#include "spsnet/sps.hpp"
#include "spsnet/tagset.hpp"
#include "spsnet/topology.hpp"

namespace spsnet {

struct PayloadSizes {
    long long d_mf = 0;
    long long d_tas = 0;
};

/// d_MF = n_p + 1, d_TAS = m (n_p + n_p (n_p + 1) / 2).
PayloadSizes payload_sizes(int n_p, int m);

// ---------------------------------------------------------------------------
// Traffic accounting

struct TrafficEvent {
    int round = 0;  // 1-based transmission round
    int node = 0;
    long long scalars = 0;
    long long tag_bits = 0;
    std::vector<int> origins;  // MF/PF provenance: records carried by this packet
};

/// One row per transmission. Only real-valued scalars count as traffic; tag
/// bits are kept in a separate informational column.
class TrafficLog {
public:
    TrafficLog() = default;
    TrafficLog(std::string protocol, int n, PayloadSizes sizes) : protocol_(std::move(protocol)), n_(n), sizes_(sizes) {}

    void record(TrafficEvent event) { events_.push_back(std::move(event)); }

    const std::string& protocol() const { return protocol_; }
    int nodes() const { return n_; }
    PayloadSizes sizes() const { return sizes_; }
    const std::vector<TrafficEvent>& events() const { return events_; }

    long long total_scalars() const;
    long long total_through_round(int round) const;
    std::vector<long long> per_node_totals() const;
    int last_round() const;
    double mean_per_node() const { return n_ ? static_cast<double>(total_scalars()) / n_ : 0.0; }

    /// protocol,round,node_id,scalars_sent,cumulative_scalars,tag_bits
    /// (cumulative per node).
    void write_csv(std::ostream& out, bool header = true) const;

private:
    std::string protocol_;
    int n_ = 0;
    PayloadSizes sizes_{};
    std::vector<TrafficEvent> events_;
};

// ---------------------------------------------------------------------------
// Pure flooding

struct PfResult {
    std::vector<TagSet> known;
    TrafficLog log;
    int rounds = 0;
    int rounds_to_full = -1;  // first round after which every node knows every record
};

/// Every node rebroadcasts every record it knows, each round. Runs until a
/// round brings no new knowledge anywhere, or max_rounds.
PfResult run_pf(const Graph& graph, const std::vector<RegressorSample>& samples, int max_rounds);

// ---------------------------------------------------------------------------
// Modified flooding

struct MfRow {
    int origin = 0;
    bool transmitted = false;
};

struct MfTable {
    int owner = 0;
    std::vector<MfRow> rows;
    TagSet known;

    /// Binary wrap-up weights: 1 for every record held.
    WrapUpWeights weights() const;
};

class MfSimulation {
public:
    MfSimulation(const Graph& graph, int n_p);

    /// One synchronous round; only `active` nodes may transmit. Returns true
    /// if any packet was sent.
    bool step(std::span<const int> active);
    bool step();

    int rounds() const { return round_; }
    const MfTable& table(int k) const { return tables_[static_cast<std::size_t>(k)]; }
    const std::vector<MfTable>& tables() const { return tables_; }
    const TrafficLog& log() const { return log_; }
    bool complete() const;

private:
    const Graph& graph_;
    std::vector<MfTable> tables_;
    std::vector<int> all_nodes_;
    TrafficLog log_;
    int round_ = 0;
};

struct MfResult {
    std::vector<MfTable> tables;
    TrafficLog log;
    int rounds = 0;
};

/// Runs until no node has an untransmitted row, or max_rounds (< 0: no cap).
MfResult run_mf(const Graph& graph, const std::vector<RegressorSample>& samples, int max_rounds = -1);
/// Level schedule: forward sweep L..0, then levels 1..L-1 (nodes with sons only).
MfResult run_mf_tree(const TreeTopology& tree, const std::vector<RegressorSample>& samples);
/// Members -> heads, heads broadcast, heads broadcast the remainder.
MfResult run_mf_clustered(const ClusteredTopology& topo, const std::vector<RegressorSample>& samples);

/// Active node sets per step. Trees: levels L..0, then levels 1..L-1
/// restricted to nodes with sons. Clustered: members, heads, heads.
std::vector<std::vector<int>> level_schedule(const TreeTopology& tree);
std::vector<std::vector<int>> cluster_schedule(const ClusteredTopology& topo);

// ---------------------------------------------------------------------------
// Tagged and aggregated sums

struct TasRow {
    TagSet tag;
    AggregateSums payload;
    bool merged = false;
};

struct TasMessage {
    TagSet tag;
    AggregateSums payload;
};

struct TasTable {
    int owner = 0;
    std::vector<TasRow> rows;

    static TasTable with_local(int owner, int n, AggregateSums local);
    /// 0/1 matrix with one row per table row.
    Eigen::MatrixXd tag_matrix() const;
    int find(const TagSet& tag) const;
};

enum class DistillOutcome { Appended, Discarded };

/// Strips every stored row whose tag is contained in what is left of the
/// incoming tag (stored rows scanned in insertion order); appends the residual
/// unless it is empty or duplicates a stored tag.
DistillOutcome tas_distill(TasTable& table, const TasMessage& incoming);

/// Starts from the first never-merged row, then merges every row (scanned from
/// the top) whose tag is disjoint from the running tag. None when every row
/// has already been merged once.
std::optional<TasMessage> tas_aggregate(TasTable& table);

struct WrapUp {
    WrapUpWeights weights;
    AggregateSums aggregate;
    double objective = 0.0;  // sum_i c_i
    bool complete = false;   // every c_i == 1
    bool used_lp = false;
};

/// Combines the table rows into the best available aggregate: an exact
/// disjoint cover when one exists, otherwise the LP optimum.
WrapUp tas_wrapup(const TasTable& table);

class TasSimulation {
public:
    TasSimulation(const Graph& graph, const std::vector<RegressorSample>& samples, const SignMatrix& signs);

    /// Aggregation + transmission at the active nodes, then reception and
    /// distillation everywhere. Returns true if any message was sent. With
    /// `rebroadcast_complete`, an active node that has nothing new to merge
    /// but holds the complete aggregate broadcasts it anyway.
    bool step(std::span<const int> active, bool rebroadcast_complete = false);
    bool step();

    int rounds() const { return round_; }
    const TasTable& table(int k) const { return tables_[static_cast<std::size_t>(k)]; }
    const std::vector<TasTable>& tables() const { return tables_; }
    const TrafficLog& log() const { return log_; }
    WrapUp wrapup(int k) const { return tas_wrapup(table(k)); }

private:
    const Graph& graph_;
    std::vector<TasTable> tables_;
    std::vector<int> all_nodes_;
    TrafficLog log_;
    int round_ = 0;
};

struct TasResult {
    std::vector<TasTable> tables;
    TrafficLog log;
    std::vector<WrapUp> wrapups;
    int rounds = 0;

    bool all_complete() const;
};

/// `rounds` transmission phases on an arbitrary graph, then wrap-up everywhere.
TasResult run_tas(const Graph& graph, const std::vector<RegressorSample>& samples, const SignMatrix& signs, int rounds);
TasResult run_tas_tree(const TreeTopology& tree, const std::vector<RegressorSample>& samples, const SignMatrix& signs);
TasResult run_tas_clustered(const ClusteredTopology& topo, const std::vector<RegressorSample>& samples,
                            const SignMatrix& signs);

// ---------------------------------------------------------------------------
// Average consensus

enum class ConsensusScheme { Metropolis, Perron };

std::string to_string(ConsensusScheme scheme);

/// Doubly stochastic mixing matrix. Metropolis: w_ij = 1 / (1 + max(deg_i, deg_j))
/// on edges; Perron: I - eps L with eps = 1 / (max degree + 1).
Eigen::MatrixXd consensus_weights(const Graph& graph, ConsensusScheme scheme);

class ConsensusSimulation {
public:
    ConsensusSimulation(const Graph& graph, const std::vector<RegressorSample>& samples, const SignMatrix& signs,
                        ConsensusScheme scheme);

    void step();

    int iterations() const { return iteration_; }
    const AggregateSums& state(int k) const { return states_[static_cast<std::size_t>(k)]; }
    const std::vector<AggregateSums>& states() const { return states_; }
    /// N (W^t)_{k,i}: weight of node i's local data in node k's state.
    Eigen::MatrixXd effective_weights() const;
    const TrafficLog& log() const { return log_; }
    const Eigen::MatrixXd& weights() const { return w_; }

private:
    const Graph& graph_;
    Eigen::MatrixXd w_;
    std::vector<AggregateSums> states_;
    TrafficLog log_;
    int iteration_ = 0;
};

struct ConsensusResult {
    std::vector<AggregateSums> states;
    Eigen::MatrixXd effective_weights;
    TrafficLog log;
    int iterations = 0;
};

ConsensusResult run_consensus(const Graph& graph, const std::vector<RegressorSample>& samples, const SignMatrix& signs,
                              int iterations, ConsensusScheme scheme);

}  // namespace spsnet
