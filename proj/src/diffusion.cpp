#include "spsnet/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace spsnet {

PayloadSizes payload_sizes(int n_p, int m) {
    if (n_p < 1) throw DimensionError("payload_sizes: n_p must be >= 1");
    if (m < 2) throw DimensionError("payload_sizes: m must be >= 2");
    return {n_p + 1LL, static_cast<long long>(m) * (n_p + n_p * (n_p + 1LL) / 2)};
}

// ---------------------------------------------------------------------------

long long TrafficLog::total_scalars() const {
    long long t = 0;
    for (const auto& e : events_) t += e.scalars;
    return t;
}

long long TrafficLog::total_through_round(int round) const {
    long long t = 0;
    for (const auto& e : events_)
        if (e.round <= round) t += e.scalars;
    return t;
}

std::vector<long long> TrafficLog::per_node_totals() const {
    std::vector<long long> t(static_cast<std::size_t>(n_), 0);
    for (const auto& e : events_) t[static_cast<std::size_t>(e.node)] += e.scalars;
    return t;
}

int TrafficLog::last_round() const {
    int r = 0;
    for (const auto& e : events_) r = std::max(r, e.round);
    return r;
}

void TrafficLog::write_csv(std::ostream& out, bool header) const {
    if (header) out << "protocol,round,node_id,scalars_sent,cumulative_scalars,tag_bits\n";
    std::vector<long long> cumulative(static_cast<std::size_t>(n_), 0);
    for (const auto& e : events_) {
        cumulative[static_cast<std::size_t>(e.node)] += e.scalars;
        out << protocol_ << ',' << e.round << ',' << e.node << ',' << e.scalars << ','
            << cumulative[static_cast<std::size_t>(e.node)] << ',' << e.tag_bits << '\n';
    }
}

// ---------------------------------------------------------------------------
// PF

PfResult run_pf(const Graph& graph, const std::vector<RegressorSample>& samples, int max_rounds) {
    const int n = graph.size();
    if (static_cast<int>(samples.size()) != n) throw DimensionError("run_pf: one sample per node required");
    const PayloadSizes sizes{static_cast<long long>(samples[0].phi.size()) + 1, 0};
    PfResult res;
    res.log = TrafficLog("pf", n, sizes);
    for (int k = 0; k < n; ++k) res.known.push_back(TagSet::one_hot(n, k));
    auto everyone_full = [&] {
        return std::all_of(res.known.begin(), res.known.end(), [](const TagSet& t) { return t.all(); });
    };
    if (everyone_full()) res.rounds_to_full = 0;
    for (int round = 1; max_rounds < 0 || round <= max_rounds; ++round) {
        const std::vector<TagSet> before = res.known;
        for (int k = 0; k < n; ++k) {
            const auto& kn = before[static_cast<std::size_t>(k)];
            res.log.record({round, k, kn.count() * sizes.d_mf, static_cast<long long>(kn.count()) * n, kn.indices()});
            for (int v : graph.neighbors(k)) res.known[static_cast<std::size_t>(v)] |= kn;
        }
        res.rounds = round;
        if (res.rounds_to_full < 0 && everyone_full()) res.rounds_to_full = round;
        if (res.known == before) break;
    }
    return res;
}

// ---------------------------------------------------------------------------
// MF

WrapUpWeights MfTable::weights() const {
    WrapUpWeights w{std::vector<double>(static_cast<std::size_t>(known.size()), 0.0)};
    for (const auto& r : rows) w.c[static_cast<std::size_t>(r.origin)] = 1.0;
    return w;
}

MfSimulation::MfSimulation(const Graph& graph, int n_p)
    : graph_(graph), log_("mf", graph.size(), PayloadSizes{payload_sizes(n_p, 2).d_mf, 0}) {
    const int n = graph.size();
    tables_.resize(static_cast<std::size_t>(n));
    all_nodes_.resize(static_cast<std::size_t>(n));
    std::iota(all_nodes_.begin(), all_nodes_.end(), 0);
    for (int k = 0; k < n; ++k) {
        auto& t = tables_[static_cast<std::size_t>(k)];
        t.owner = k;
        t.rows.push_back({k, false});
        t.known = TagSet::one_hot(n, k);
    }
}

bool MfSimulation::step() { return step(all_nodes_); }

bool MfSimulation::step(std::span<const int> active) {
    ++round_;
    const int n = graph_.size();
    const long long d_mf = log_.sizes().d_mf;
    std::vector<std::pair<int, std::vector<int>>> packets;
    for (int k : active) {
        auto& t = tables_[static_cast<std::size_t>(k)];
        std::vector<int> payload;
        for (auto& row : t.rows) {
            if (!row.transmitted) {
                payload.push_back(row.origin);
                row.transmitted = true;
            }
        }
        if (payload.empty()) continue;
        log_.record({round_, k, static_cast<long long>(payload.size()) * d_mf,
                     static_cast<long long>(payload.size()) * n, payload});
        packets.emplace_back(k, std::move(payload));
    }
    for (const auto& [sender, payload] : packets) {
        for (int v : graph_.neighbors(sender)) {
            auto& t = tables_[static_cast<std::size_t>(v)];
            for (int origin : payload) {
                if (t.known.test(origin)) continue;
                t.known.set(origin);
                t.rows.push_back({origin, false});
            }
        }
    }
    return !packets.empty();
}

bool MfSimulation::complete() const {
    return std::all_of(tables_.begin(), tables_.end(), [](const MfTable& t) { return t.known.all(); });
}

namespace {

MfResult finish(MfSimulation& sim) {
    return {sim.tables(), sim.log(), sim.rounds()};
}

void check_samples(int n, const std::vector<RegressorSample>& samples, const char* who) {
    if (static_cast<int>(samples.size()) != n || n == 0)
        throw DimensionError(std::string(who) + ": one sample per node required");
}

}  // namespace

// forward: L..0 (all nodes of the level); backward: 1..L-1 (nodes with sons)
std::vector<std::vector<int>> level_schedule(const TreeTopology& tree) {
    std::vector<std::vector<int>> steps;
    for (int l = tree.L; l >= 0; --l) steps.push_back(tree.nodes_at_level(l));
    for (int l = 1; l <= tree.L - 1; ++l) {
        std::vector<int> active;
        for (int k : tree.nodes_at_level(l))
            if (!tree.children[static_cast<std::size_t>(k)].empty()) active.push_back(k);
        steps.push_back(std::move(active));
    }
    return steps;
}

std::vector<std::vector<int>> cluster_schedule(const ClusteredTopology& topo) {
    std::vector<int> members;
    for (int i = 0; i < topo.size(); ++i)
        if (!topo.is_head(i)) members.push_back(i);
    std::vector<int> heads = topo.head;
    std::sort(heads.begin(), heads.end());
    return {members, heads, heads};
}

MfResult run_mf(const Graph& graph, const std::vector<RegressorSample>& samples, int max_rounds) {
    check_samples(graph.size(), samples, "run_mf");
    MfSimulation sim(graph, static_cast<int>(samples[0].phi.size()));
    while (max_rounds < 0 || sim.rounds() < max_rounds) {
        if (!sim.step()) break;
    }
    // a final silent round is not counted
    MfResult res = finish(sim);
    res.rounds = res.log.last_round();
    return res;
}

MfResult run_mf_tree(const TreeTopology& tree, const std::vector<RegressorSample>& samples) {
    check_samples(tree.size(), samples, "run_mf_tree");
    const Graph g = tree.as_graph();
    MfSimulation sim(g, static_cast<int>(samples[0].phi.size()));
    for (const auto& active : level_schedule(tree)) sim.step(active);
    return finish(sim);
}

MfResult run_mf_clustered(const ClusteredTopology& topo, const std::vector<RegressorSample>& samples) {
    check_samples(topo.size(), samples, "run_mf_clustered");
    const Graph g = topo.as_graph();
    MfSimulation sim(g, static_cast<int>(samples[0].phi.size()));
    for (const auto& active : cluster_schedule(topo)) sim.step(active);
    return finish(sim);
}

// ---------------------------------------------------------------------------
// TAS table logic

TasTable TasTable::with_local(int owner, int n, AggregateSums local) {
    TasTable t;
    t.owner = owner;
    t.rows.push_back({TagSet::one_hot(n, owner), std::move(local), false});
    return t;
}

Eigen::MatrixXd TasTable::tag_matrix() const {
    const int n = rows.empty() ? 0 : rows[0].tag.size();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int i = 0; i < n; ++i)
            if (rows[r].tag.test(i)) t(static_cast<Eigen::Index>(r), i) = 1.0;
    return t;
}

int TasTable::find(const TagSet& tag) const {
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].tag == tag) return static_cast<int>(r);
    return -1;
}

DistillOutcome tas_distill(TasTable& table, const TasMessage& incoming) {
    if (incoming.tag.none()) throw DimensionError("tas_distill: incoming tag is empty");
    TagSet residual = incoming.tag;
    AggregateSums payload = incoming.payload;
    for (const auto& row : table.rows) {
        if (residual.none()) break;
        if (row.tag.is_subset_of(residual)) {
            residual -= row.tag;
            payload -= row.payload;
        }
    }
    if (residual.none() || table.find(residual) >= 0) return DistillOutcome::Discarded;
    table.rows.push_back({std::move(residual), std::move(payload), false});
    return DistillOutcome::Appended;
}

std::optional<TasMessage> tas_aggregate(TasTable& table) {
    std::size_t start = table.rows.size();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (!table.rows[r].merged) {
            start = r;
            break;
        }
    }
    if (start == table.rows.size()) return std::nullopt;
    TasMessage msg{table.rows[start].tag, table.rows[start].payload};
    table.rows[start].merged = true;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (r == start) continue;
        auto& row = table.rows[r];
        if (row.tag.disjoint(msg.tag)) {
            msg.tag |= row.tag;
            msg.payload += row.payload;
            row.merged = true;
        }
    }
    return msg;
}

WrapUp tas_wrapup(const TasTable& table) {
    if (table.rows.empty()) throw DimensionError("tas_wrapup: empty table");
    const int n = table.rows[0].tag.size();
    const std::size_t r_count = table.rows.size();
    TagSet covered(n);
    for (const auto& row : table.rows) covered |= row.tag;
    const int bound = covered.count();

    WrapUp out;
    // A disjoint cover of every covered node meets the upper bound sum_i c_i <= |covered|.
    for (std::size_t s = 0; s < r_count; ++s) {
        TagSet running = table.rows[s].tag;
        std::vector<std::size_t> chosen{s};
        for (std::size_t r = 0; r < r_count && running.count() < bound; ++r) {
            if (r == s) continue;
            if (table.rows[r].tag.disjoint(running)) {
                running |= table.rows[r].tag;
                chosen.push_back(r);
            }
        }
        if (running.count() != bound) continue;
        out.aggregate = table.rows[chosen[0]].payload;
        for (std::size_t k = 1; k < chosen.size(); ++k) out.aggregate += table.rows[chosen[k]].payload;
        out.weights.c.assign(static_cast<std::size_t>(n), 0.0);
        for (int i : covered.indices()) out.weights.c[static_cast<std::size_t>(i)] = 1.0;
        out.objective = bound;
        out.complete = bound == n;
        return out;
    }

    LpProblem problem;
    problem.n = n;
    for (const auto& row : table.rows) problem.tags.push_back(row.tag);
    const LpResult lp = solve_lp(problem);
    out.used_lp = true;
    out.aggregate = AggregateSums(table.rows[0].payload.n_p(), table.rows[0].payload.m());
    for (std::size_t r = 0; r < r_count; ++r)
        if (lp.b[r] != 0.0) out.aggregate += lp.b[r] * table.rows[r].payload;
    out.weights.c.assign(static_cast<std::size_t>(n), 0.0);
    for (std::size_t r = 0; r < r_count; ++r)
        for (int i : table.rows[r].tag.indices()) out.weights.c[static_cast<std::size_t>(i)] += lp.b[r];
    constexpr double tol = 1e-9;
    for (auto& c : out.weights.c) {
        if (c < -tol || c > 1.0 + tol) throw LpError("tas_wrapup: LP returned c outside [0, 1]");
        if (c < tol) c = 0.0;
        if (c > 1.0 - tol) c = 1.0;
    }
    out.objective = lp.objective;
    out.complete = std::all_of(out.weights.c.begin(), out.weights.c.end(), [](double c) { return c == 1.0; });
    return out;
}

// ---------------------------------------------------------------------------
// TAS simulation

TasSimulation::TasSimulation(const Graph& graph, const std::vector<RegressorSample>& samples, const SignMatrix& signs)
    : graph_(graph) {
    const int n = graph.size();
    check_samples(n, samples, "TasSimulation");
    if (signs.n() != n) throw DimensionError("TasSimulation: sign matrix has wrong width");
    log_ = TrafficLog("tas", n, payload_sizes(static_cast<int>(samples[0].phi.size()), signs.m()));
    all_nodes_.resize(static_cast<std::size_t>(n));
    std::iota(all_nodes_.begin(), all_nodes_.end(), 0);
    for (int k = 0; k < n; ++k)
        tables_.push_back(TasTable::with_local(k, n, local_aggregate(samples[static_cast<std::size_t>(k)], signs, k)));
}

bool TasSimulation::step() { return step(all_nodes_); }

bool TasSimulation::step(std::span<const int> active, bool rebroadcast_complete) {
    ++round_;
    const int n = graph_.size();
    std::vector<std::pair<int, TasMessage>> outbox;
    for (int k : active) {
        auto msg = tas_aggregate(tables_[static_cast<std::size_t>(k)]);
        if (!msg && rebroadcast_complete) {
            WrapUp w = tas_wrapup(tables_[static_cast<std::size_t>(k)]);
            if (w.complete) msg = TasMessage{TagSet::full(n), std::move(w.aggregate)};
        }
        if (!msg) continue;
        log_.record({round_, k, log_.sizes().d_tas, n, {}});
        outbox.emplace_back(k, std::move(*msg));
    }
    // deliver: each receiver handles its inbox in sender-id order
    std::vector<std::vector<const TasMessage*>> inbox(static_cast<std::size_t>(n));
    for (const auto& [sender, msg] : outbox)
        for (int v : graph_.neighbors(sender)) inbox[static_cast<std::size_t>(v)].push_back(&msg);
    for (int v = 0; v < n; ++v)
        for (const TasMessage* msg : inbox[static_cast<std::size_t>(v)]) tas_distill(tables_[static_cast<std::size_t>(v)], *msg);
    return !outbox.empty();
}

bool TasResult::all_complete() const {
    return std::all_of(wrapups.begin(), wrapups.end(), [](const WrapUp& w) { return w.complete; });
}

namespace {

TasResult finish(TasSimulation& sim) {
    TasResult res;
    res.tables = sim.tables();
    res.log = sim.log();
    res.rounds = sim.rounds();
    for (int k = 0; k < static_cast<int>(res.tables.size()); ++k) res.wrapups.push_back(sim.wrapup(k));
    return res;
}

}  // namespace

TasResult run_tas(const Graph& graph, const std::vector<RegressorSample>& samples, const SignMatrix& signs, int rounds) {
    TasSimulation sim(graph, samples, signs);
    for (int r = 0; r < rounds; ++r) sim.step();
    return finish(sim);
}

TasResult run_tas_tree(const TreeTopology& tree, const std::vector<RegressorSample>& samples, const SignMatrix& signs) {
    const Graph g = tree.as_graph();
    TasSimulation sim(g, samples, signs);
    for (const auto& active : level_schedule(tree)) sim.step(active);
    return finish(sim);
}

TasResult run_tas_clustered(const ClusteredTopology& topo, const std::vector<RegressorSample>& samples,
                            const SignMatrix& signs) {
    const Graph g = topo.as_graph();
    TasSimulation sim(g, samples, signs);
    const auto schedule = cluster_schedule(topo);
    // the last phase delivers the complete aggregate to members even when a
    // single head already sent everything it holds
    for (std::size_t s = 0; s < schedule.size(); ++s) sim.step(schedule[s], s + 1 == schedule.size());
    return finish(sim);
}

// ---------------------------------------------------------------------------
// Consensus

std::string to_string(ConsensusScheme scheme) { return scheme == ConsensusScheme::Metropolis ? "metropolis" : "perron"; }

Eigen::MatrixXd consensus_weights(const Graph& graph, ConsensusScheme scheme) {
    if (!is_connected(graph)) throw TopologyError("consensus_weights: graph is disconnected");
    const int n = graph.size();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    if (scheme == ConsensusScheme::Metropolis) {
        for (int i = 0; i < n; ++i)
            for (int j : graph.neighbors(i)) w(i, j) = 1.0 / (1.0 + std::max(graph.degree(i), graph.degree(j)));
    } else {
        const double eps = 1.0 / (graph.max_degree() + 1.0);
        for (int i = 0; i < n; ++i)
            for (int j : graph.neighbors(i)) w(i, j) = eps;
    }
    for (int i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();
    return w;
}

ConsensusSimulation::ConsensusSimulation(const Graph& graph, const std::vector<RegressorSample>& samples,
                                         const SignMatrix& signs, ConsensusScheme scheme)
    : graph_(graph), w_(consensus_weights(graph, scheme)) {
    const int n = graph.size();
    check_samples(n, samples, "ConsensusSimulation");
    log_ = TrafficLog(to_string(scheme), n, payload_sizes(static_cast<int>(samples[0].phi.size()), signs.m()));
    for (int k = 0; k < n; ++k)
        states_.push_back(static_cast<double>(n) * local_aggregate(samples[static_cast<std::size_t>(k)], signs, k));
}

void ConsensusSimulation::step() {
    ++iteration_;
    const int n = graph_.size();
    std::vector<AggregateSums> next;
    next.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        AggregateSums x = w_(k, k) * states_[static_cast<std::size_t>(k)];
        for (int j : graph_.neighbors(k)) x.data() += w_(k, j) * states_[static_cast<std::size_t>(j)].data();
        next.push_back(std::move(x));
        log_.record({iteration_, k, log_.sizes().d_tas, 0, {}});
    }
    states_ = std::move(next);
}

Eigen::MatrixXd ConsensusSimulation::effective_weights() const {
    const auto n = w_.rows();
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (int t = 0; t < iteration_; ++t) power = w_ * power;
    return power * static_cast<double>(n);
}

ConsensusResult run_consensus(const Graph& graph, const std::vector<RegressorSample>& samples, const SignMatrix& signs,
                              int iterations, ConsensusScheme scheme) {
    ConsensusSimulation sim(graph, samples, signs, scheme);
    for (int t = 0; t < iterations; ++t) sim.step();
    return {sim.states(), sim.effective_weights(), sim.log(), sim.iterations()};
}

}  // namespace spsnet
