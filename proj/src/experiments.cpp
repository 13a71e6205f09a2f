#include "spsnet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include "spsnet/analysis.hpp"
#include "spsnet/serialize.hpp"

namespace spsnet {

namespace {

using nlohmann::json;

const std::map<std::string, NetworkKind> kNetworkNames{
    {"random-geometric", NetworkKind::RandomGeometric},
    {"random-tree", NetworkKind::RandomTree},
    {"binary", NetworkKind::BinaryTree},
    {"clustered", NetworkKind::Clustered},
    {"complete", NetworkKind::Complete},
    {"path", NetworkKind::Path},
};

const std::map<std::string, ProtocolKind> kProtocolNames{
    {"none", ProtocolKind::None},        {"pf", ProtocolKind::Pf},
    {"mf", ProtocolKind::Mf},            {"tas", ProtocolKind::Tas},
    {"metropolis", ProtocolKind::Metropolis}, {"perron", ProtocolKind::Perron},
};

template <class Map, class Key>
std::string name_of(const Map& names, Key key) {
    for (const auto& [name, value] : names)
        if (value == key) return name;
    return "?";
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || item.key() == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

Vec default_p_true(int n_p) {
    Vec p(n_p);
    for (int i = 0; i < n_p; ++i) p[i] = 0.2 + 0.1 * i;
    return p;
}

bool is_consensus(ProtocolKind p) { return p == ProtocolKind::Metropolis || p == ProtocolKind::Perron; }

}  // namespace

std::string to_string(NetworkKind kind) { return name_of(kNetworkNames, kind); }
std::string to_string(ProtocolKind kind) { return name_of(kProtocolNames, kind); }

NetworkKind parse_network_kind(const std::string& name) {
    auto it = kNetworkNames.find(name);
    if (it == kNetworkNames.end()) throw ConfigError("unknown topology kind '" + name + "'");
    return it->second;
}

ProtocolKind parse_protocol_kind(const std::string& name) {
    auto it = kProtocolNames.find(name);
    if (it == kProtocolNames.end()) throw ConfigError("unknown protocol '" + name + "'");
    return it->second;
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
    const int n = topology.N;
    if (n < 1) throw ConfigError("topology.N must be >= 1");
    if (topology.kind == NetworkKind::RandomGeometric || topology.kind == NetworkKind::RandomTree) {
        if (n < 2) throw ConfigError("random networks need N >= 2");
    }
    if (topology.kind == NetworkKind::BinaryTree && (topology.L < 0 || topology.L > 20 || n != (1 << (topology.L + 1)) - 1))
        throw ConfigError("binary topology needs 0 <= L <= 20 and N = 2^(L+1) - 1");
    if (topology.kind == NetworkKind::Clustered && (topology.n_c < 1 || topology.n_c > n))
        throw ConfigError("clustered topology needs 1 <= n_c <= N");
    if (topology.retry_budget < 1) throw ConfigError("topology.retry_budget must be >= 1");
    try {
        model.validate();
        sps.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (diffusion.rounds < -1) throw ConfigError("diffusion.rounds must be >= -1");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (node < 0 || node >= n) throw ConfigError("node must lie in [0, N)");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    if (tradeoff_protocols.empty()) throw ConfigError("tradeoff.protocols must not be empty");
    if (region.box && static_cast<int>(region.box->size()) != model.n_p)
        throw ConfigError("region.box needs one interval per parameter");
    if (region.box)
        for (const auto& iv : *region.box)
            if (!(iv.hi > iv.lo)) throw ConfigError("region.box intervals must satisfy lo < hi");
    if (!region.grid_per_dim.empty()) {
        if (static_cast<int>(region.grid_per_dim.size()) != model.n_p)
            throw ConfigError("region.grid_per_dim needs one entry per parameter");
        for (int g : region.grid_per_dim)
            if (g < 1) throw ConfigError("region.grid_per_dim entries must be >= 1");
    }
    if (region.nodes < 0) throw ConfigError("region.nodes must be >= 0");
    for (int c : region.checkpoints)
        if (c < 0) throw ConfigError("region.checkpoints must be >= 0");
    if (sweep.N_values.empty() || sweep.n_p_values.empty()) throw ConfigError("sweep lists must not be empty");
    for (int v : sweep.N_values)
        if (v < 2) throw ConfigError("sweep.N_values entries must be >= 2");
    for (int v : sweep.n_p_values)
        if (v < 1) throw ConfigError("sweep.n_p_values entries must be >= 1");
    if (sweep.simulate < 0) throw ConfigError("sweep.simulate must be >= 0");
    if (samples) {
        if (static_cast<int>(samples->size()) != n) throw ConfigError("data.samples must have N entries");
        for (const auto& s : *samples)
            if (s.phi.size() != model.n_p || !std::isfinite(s.y))
                throw ConfigError("data.samples: phi must have n_p entries and y must be finite");
    }
    if (signs) {
        if (static_cast<int>(signs->size()) != sps.m) throw ConfigError("data.signs must have m rows");
        for (std::size_t j = 0; j < signs->size(); ++j) {
            const auto& row = (*signs)[j];
            if (static_cast<int>(row.size()) != n) throw ConfigError("data.signs rows must have N entries");
            for (int a : row) {
                if (a != 1 && a != -1) throw ConfigError("data.signs entries must be +1 or -1");
                if (j == 0 && a != 1) throw ConfigError("data.signs row 0 must be all +1");
            }
        }
    }
}

ExperimentConfig config_from_json(const json& j) {
    check_keys(j, "config", {"seed", "topology", "model", "sps", "diffusion", "tradeoff", "region", "sweep",
                             "trials", "node", "all_nodes", "threads", "output_dir", "data"});
    ExperimentConfig c;
    read(j, "seed", c.seed, "config");
    c.sps.sign_seed = c.seed;
    read(j, "trials", c.trials, "config");
    read(j, "node", c.node, "config");
    read(j, "all_nodes", c.all_nodes, "config");
    read(j, "threads", c.threads, "config");
    read(j, "output_dir", c.output_dir, "config");

    bool n_given = false;
    if (j.contains("topology")) {
        const auto& t = j["topology"];
        check_keys(t, "topology", {"kind", "N", "L", "n_c", "retry_budget"});
        std::string kind = to_string(c.topology.kind);
        read(t, "kind", kind, "topology");
        c.topology.kind = parse_network_kind(kind);
        n_given = t.contains("N");
        read(t, "N", c.topology.N, "topology");
        read(t, "L", c.topology.L, "topology");
        read(t, "n_c", c.topology.n_c, "topology");
        read(t, "retry_budget", c.topology.retry_budget, "topology");
    }
    if (c.topology.kind == NetworkKind::BinaryTree && !n_given && c.topology.L >= 0 && c.topology.L <= 20)
        c.topology.N = (1 << (c.topology.L + 1)) - 1;

    bool p_given = false;
    if (j.contains("model")) {
        const auto& m = j["model"];
        check_keys(m, "model", {"n_p", "n_x", "regressor_family", "p_true", "noise", "regressor_seed"});
        read(m, "n_p", c.model.n_p, "model");
        read(m, "n_x", c.model.n_x, "model");
        if (m.contains("regressor_family")) {
            try {
                c.model.regressor_family = parse_regressor_family(m["regressor_family"].get<std::string>());
            } catch (const std::exception& e) {
                throw ConfigError(std::string("model.regressor_family: ") + e.what());
            }
        }
        if (m.contains("p_true")) {
            std::vector<double> p;
            read(m, "p_true", p, "model");
            c.model.p_true = Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size()));
            p_given = true;
        }
        if (m.contains("noise")) {
            const auto& nz = m["noise"];
            check_keys(nz, "model.noise", {"kind", "scale"});
            if (nz.contains("kind")) {
                try {
                    c.model.noise.kind = parse_noise_kind(nz["kind"].get<std::string>());
                } catch (const std::exception& e) {
                    throw ConfigError(std::string("model.noise.kind: ") + e.what());
                }
            }
            read(nz, "scale", c.model.noise.scale, "model.noise");
        }
        read(m, "regressor_seed", c.model.regressor_seed, "model");
    }
    if (!p_given && c.model.n_p >= 1) c.model.p_true = default_p_true(c.model.n_p);

    if (j.contains("sps")) {
        const auto& s = j["sps"];
        check_keys(s, "sps", {"m", "q", "sign_seed"});
        read(s, "m", c.sps.m, "sps");
        read(s, "q", c.sps.q, "sps");
        read(s, "sign_seed", c.sps.sign_seed, "sps");
    }
    if (j.contains("diffusion")) {
        const auto& d = j["diffusion"];
        check_keys(d, "diffusion", {"protocol", "rounds"});
        if (d.contains("protocol")) c.diffusion.protocol = parse_protocol_kind(d["protocol"].get<std::string>());
        read(d, "rounds", c.diffusion.rounds, "diffusion");
    }
    if (j.contains("tradeoff")) {
        const auto& t = j["tradeoff"];
        check_keys(t, "tradeoff", {"protocols"});
        if (t.contains("protocols")) {
            c.tradeoff_protocols.clear();
            for (const auto& p : t["protocols"]) c.tradeoff_protocols.push_back(parse_protocol_kind(p.get<std::string>()));
        }
    }
    if (j.contains("region")) {
        const auto& r = j["region"];
        check_keys(r, "region", {"box", "grid_per_dim", "nodes", "checkpoints", "allow_high_dim"});
        if (r.contains("box")) {
            Box box;
            for (const auto& iv : r["box"]) {
                if (!iv.is_array() || iv.size() != 2) throw ConfigError("region.box: each entry must be [lo, hi]");
                box.push_back({iv[0].get<double>(), iv[1].get<double>()});
            }
            c.region.box = std::move(box);
        }
        read(r, "grid_per_dim", c.region.grid_per_dim, "region");
        read(r, "nodes", c.region.nodes, "region");
        read(r, "checkpoints", c.region.checkpoints, "region");
        read(r, "allow_high_dim", c.region.allow_high_dim, "region");
    }
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        check_keys(s, "sweep", {"N_values", "n_p_values", "simulate"});
        read(s, "N_values", c.sweep.N_values, "sweep");
        read(s, "n_p_values", c.sweep.n_p_values, "sweep");
        read(s, "simulate", c.sweep.simulate, "sweep");
    }
    if (j.contains("data")) {
        const auto& d = j["data"];
        check_keys(d, "data", {"samples", "signs"});
        if (d.contains("samples")) {
            std::vector<RegressorSample> samples;
            int id = 0;
            for (const auto& s : d["samples"]) {
                check_keys(s, "data.samples[]", {"phi", "y", "position"});
                RegressorSample r;
                r.node_id = id++;
                const auto phi = s.at("phi").get<std::vector<double>>();
                r.phi = Eigen::Map<const Vec>(phi.data(), static_cast<Eigen::Index>(phi.size()));
                r.y = s.at("y").get<double>();
                if (s.contains("position")) {
                    const auto x = s["position"].get<std::vector<double>>();
                    r.position = Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()));
                }
                samples.push_back(std::move(r));
            }
            if (!n_given) c.topology.N = static_cast<int>(samples.size());
            c.samples = std::move(samples);
        }
        if (d.contains("signs")) c.signs = d["signs"].get<std::vector<std::vector<int>>>();
    }
    c.validate();
    return c;
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["topology"] = {{"kind", to_string(c.topology.kind)},
                     {"N", c.topology.N},
                     {"L", c.topology.L},
                     {"n_c", c.topology.n_c},
                     {"retry_budget", c.topology.retry_budget}};
    j["model"] = {{"n_p", c.model.n_p},
                  {"n_x", c.model.n_x},
                  {"regressor_family", to_string(c.model.regressor_family)},
                  {"p_true", std::vector<double>(c.model.p_true.data(), c.model.p_true.data() + c.model.p_true.size())},
                  {"noise", {{"kind", to_string(c.model.noise.kind)}, {"scale", c.model.noise.scale}}},
                  {"regressor_seed", c.model.regressor_seed}};
    j["sps"] = {{"m", c.sps.m}, {"q", c.sps.q}, {"sign_seed", c.sps.sign_seed}};
    j["diffusion"] = {{"protocol", to_string(c.diffusion.protocol)}, {"rounds", c.diffusion.rounds}};
    json protocols = json::array();
    for (auto p : c.tradeoff_protocols) protocols.push_back(to_string(p));
    j["tradeoff"] = {{"protocols", protocols}};
    json region = {{"grid_per_dim", c.region.grid_per_dim},
                   {"nodes", c.region.nodes},
                   {"checkpoints", c.region.checkpoints},
                   {"allow_high_dim", c.region.allow_high_dim}};
    if (c.region.box) {
        json box = json::array();
        for (const auto& iv : *c.region.box) box.push_back({iv.lo, iv.hi});
        region["box"] = box;
    }
    j["region"] = region;
    j["sweep"] = {{"N_values", c.sweep.N_values}, {"n_p_values", c.sweep.n_p_values}, {"simulate", c.sweep.simulate}};
    j["trials"] = c.trials;
    j["node"] = c.node;
    j["all_nodes"] = c.all_nodes;
    j["threads"] = c.threads;
    j["output_dir"] = c.output_dir;
    if (c.samples || c.signs) {
        json data;
        if (c.samples) {
            json samples = json::array();
            for (const auto& s : *c.samples) {
                json e = {{"phi", std::vector<double>(s.phi.data(), s.phi.data() + s.phi.size())}, {"y", s.y}};
                if (s.position.size() > 0)
                    e["position"] = std::vector<double>(s.position.data(), s.position.data() + s.position.size());
                samples.push_back(std::move(e));
            }
            data["samples"] = std::move(samples);
        }
        if (c.signs) data["signs"] = *c.signs;
        j["data"] = std::move(data);
    }
    return j;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    // threads and output_dir do not affect results
    json j = to_json(config);
    j.erase("threads");
    j.erase("output_dir");
    return fnv1a64(j.dump());
}

// ---------------------------------------------------------------------------
// Realizations

Network build_network(const TopologyConfig& config, Rng& rng) {
    Network net;
    net.kind = config.kind;
    switch (config.kind) {
        case NetworkKind::RandomGeometric:
            net.graph = random_geometric(config.N, rng, config.retry_budget);
            break;
        case NetworkKind::RandomTree: {
            Graph g = random_geometric(config.N, rng, config.retry_budget);
            const int root = center_root(g, rng);
            net.tree = spanning_tree(g, root);
            net.graph = net.tree->as_graph();
            net.graph.positions = g.positions;
            net.graph.d_comm = g.d_comm;
            break;
        }
        case NetworkKind::BinaryTree:
            net.tree = complete_binary_tree(config.L);
            net.graph = net.tree->as_graph();
            break;
        case NetworkKind::Clustered:
            net.clusters = clustered(config.N, config.n_c, rng);
            net.graph = net.clusters->as_graph();
            break;
        case NetworkKind::Complete:
            net.graph = complete_graph(config.N);
            break;
        case NetworkKind::Path:
            net.graph = path_graph(config.N);
            break;
    }
    return net;
}

std::vector<Vec> node_positions(const Network& network, int n_x, Rng& rng) {
    const int n = network.size();
    if (static_cast<int>(network.graph.positions.size()) == n && n > 0 &&
        network.graph.positions[0].size() == n_x)
        return network.graph.positions;
    std::vector<Vec> pos(static_cast<std::size_t>(n), Vec(n_x));
    for (auto& x : pos)
        for (int d = 0; d < n_x; ++d) x[d] = uniform01(rng);
    return pos;
}

Realization make_realization(const ExperimentConfig& config, std::uint64_t index) {
    Realization r;
    Rng topo_rng = make_rng(config.seed, {tag(Stream::Topology), index});
    r.network = build_network(config.topology, topo_rng);
    const int n = r.network.size();
    if (config.samples) {
        r.samples = *config.samples;
    } else {
        Rng pos_rng = make_rng(config.seed, {tag(Stream::Regressor), index});
        const auto positions = node_positions(r.network, config.model.n_x, pos_rng);
        Rng noise_rng = make_rng(config.seed, {tag(Stream::Noise), index});
        r.samples = generate_measurements(positions, config.model, noise_rng);
    }
    if (config.signs) {
        r.signs = SignMatrix(config.sps.m, n);
        for (int j = 0; j < config.sps.m; ++j)
            for (int i = 0; i < n; ++i) r.signs.set(j, i, (*config.signs)[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
    } else {
        r.signs = draw_sign_matrix(config.sps.m, n, derive_seed(config.sps.sign_seed, {index}));
    }
    return r;
}

Box resolve_box(const ExperimentConfig& config, const Realization& realization) {
    if (config.region.box) return *config.region.box;
    const int n_p = config.model.n_p;
    Vec center = config.model.p_true;
    double dispersion = config.model.noise.scale;
    try {
        const AggregateSums full = full_aggregate(realization.samples, realization.signs, realization.signs.m());
        center = ls_estimate(full).p_hat;
        const int n = static_cast<int>(realization.samples.size());
        if (n > n_p) {
            double rss = 0.0;
            for (const auto& s : realization.samples) {
                const double e = s.y - eval_field(s.phi, center);
                rss += e * e;
            }
            dispersion = std::sqrt(rss / (n - n_p));
        }
    } catch (const SingularMatrixError&) {
        // keep p_true and the nominal noise scale
    }
    return default_box(center, dispersion);
}

std::vector<int> resolve_grid(const ExperimentConfig& config) {
    if (!config.region.grid_per_dim.empty()) return config.region.grid_per_dim;
    const int n_p = config.model.n_p;
    const int g = n_p == 1 ? 64 : n_p == 2 ? 32 : n_p == 3 ? 16 : 8;
    return std::vector<int>(static_cast<std::size_t>(n_p), g);
}

// ---------------------------------------------------------------------------
// Protocol driver

struct ProtocolDriver::Impl {
    std::vector<std::vector<int>> schedule;  // empty: synchronous rounds
    int limit = 0;                           // natural end, -1: until silent
    std::unique_ptr<MfSimulation> mf;
    std::unique_ptr<TasSimulation> tas;
    std::unique_ptr<ConsensusSimulation> consensus;
    PfResult pf;
    TrafficLog empty_log;
};

ProtocolDriver::ProtocolDriver(ProtocolKind protocol, const Network& network,
                               const std::vector<RegressorSample>& samples, const SignMatrix& signs)
    : protocol_(protocol), network_(network), samples_(samples), signs_(signs), impl_(std::make_unique<Impl>()) {
    const Graph& g = network.graph;
    const int n = g.size();
    if (static_cast<int>(samples.size()) != n || signs.n() != n)
        throw DimensionError("ProtocolDriver: samples and signs must match the network size");
    const int n_p = static_cast<int>(samples[0].phi.size());
    if (network.tree) impl_->schedule = level_schedule(*network.tree);
    if (network.clusters) impl_->schedule = cluster_schedule(*network.clusters);
    const bool scheduled = !impl_->schedule.empty() && (protocol == ProtocolKind::Mf || protocol == ProtocolKind::Tas);
    switch (protocol) {
        case ProtocolKind::None:
            impl_->empty_log = TrafficLog("none", n, payload_sizes(n_p, signs.m()));
            impl_->limit = 0;
            break;
        case ProtocolKind::Pf:
            impl_->pf = run_pf(g, samples, 0);
            impl_->limit = run_pf(g, samples, -1).rounds;
            break;
        case ProtocolKind::Mf:
            impl_->mf = std::make_unique<MfSimulation>(g, n_p);
            impl_->limit = scheduled ? static_cast<int>(impl_->schedule.size()) : -1;
            break;
        case ProtocolKind::Tas:
            impl_->tas = std::make_unique<TasSimulation>(g, samples, signs);
            impl_->limit = scheduled ? static_cast<int>(impl_->schedule.size()) : diameter(g);
            break;
        case ProtocolKind::Metropolis:
        case ProtocolKind::Perron:
            impl_->consensus = std::make_unique<ConsensusSimulation>(
                g, samples, signs,
                protocol == ProtocolKind::Metropolis ? ConsensusScheme::Metropolis : ConsensusScheme::Perron);
            impl_->limit = 50 * std::max(1, diameter(g));
            break;
    }
    if (!scheduled) impl_->schedule.clear();
    finished_ = impl_->limit == 0;
}

ProtocolDriver::~ProtocolDriver() = default;

bool ProtocolDriver::step() {
    if (finished_) return false;
    bool sent = true;
    switch (protocol_) {
        case ProtocolKind::None:
            sent = false;
            break;
        case ProtocolKind::Pf:
            impl_->pf = run_pf(network_.graph, samples_, rounds_ + 1);
            break;
        case ProtocolKind::Mf:
            sent = impl_->schedule.empty() ? impl_->mf->step()
                                           : impl_->mf->step(impl_->schedule[static_cast<std::size_t>(rounds_)]);
            break;
        case ProtocolKind::Tas:
            sent = impl_->schedule.empty()
                       ? impl_->tas->step()
                       : impl_->tas->step(impl_->schedule[static_cast<std::size_t>(rounds_)],
                                          network_.clusters && rounds_ + 1 == static_cast<int>(impl_->schedule.size()));
            break;
        case ProtocolKind::Metropolis:
        case ProtocolKind::Perron:
            impl_->consensus->step();
            break;
    }
    // a synchronous round in which nobody transmits ends the protocol
    if (!sent && impl_->schedule.empty()) {
        finished_ = true;
        return false;
    }
    ++rounds_;
    if (impl_->limit >= 0 && rounds_ >= impl_->limit) finished_ = true;
    return true;
}

void ProtocolDriver::run(int rounds) {
    while (rounds < 0 || rounds_ < rounds)
        if (!step()) break;
}

AggregateSums ProtocolDriver::aggregate(int node) const {
    switch (protocol_) {
        case ProtocolKind::None:
            return local_aggregate(samples_[static_cast<std::size_t>(node)], signs_, node);
        case ProtocolKind::Tas:
            return impl_->tas->wrapup(node).aggregate;
        case ProtocolKind::Metropolis:
        case ProtocolKind::Perron:
            return impl_->consensus->state(node);
        default:
            return truncated_aggregate(samples_, signs_, WrapUpWeights{weights(node)});
    }
}

std::vector<double> ProtocolDriver::weights(int node) const {
    const int n = network_.size();
    switch (protocol_) {
        case ProtocolKind::None:
            return WrapUpWeights::one_hot(n, node).c;
        case ProtocolKind::Pf: {
            std::vector<double> c(static_cast<std::size_t>(n), 0.0);
            for (int i : impl_->pf.known[static_cast<std::size_t>(node)].indices()) c[static_cast<std::size_t>(i)] = 1.0;
            return c;
        }
        case ProtocolKind::Mf:
            return impl_->mf->table(node).weights().c;
        case ProtocolKind::Tas:
            return impl_->tas->wrapup(node).weights.c;
        case ProtocolKind::Metropolis:
        case ProtocolKind::Perron: {
            const Eigen::MatrixXd w = impl_->consensus->effective_weights();
            std::vector<double> c(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = w(node, i);
            return c;
        }
    }
    return {};
}

const TrafficLog& ProtocolDriver::log() const {
    switch (protocol_) {
        case ProtocolKind::None: return impl_->empty_log;
        case ProtocolKind::Pf: return impl_->pf.log;
        case ProtocolKind::Mf: return impl_->mf->log();
        case ProtocolKind::Tas: return impl_->tas->log();
        default: return impl_->consensus->log();
    }
}

// ---------------------------------------------------------------------------
// Experiments

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    int workers = threads == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : threads;
    workers = std::clamp(workers, 1, std::max(1, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count && !failed; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

BinomialInterval wilson_interval(long long hits, long long n, double z) {
    if (n <= 0) return {0.0, 1.0};
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

CoverageReport run_coverage(const ExperimentConfig& config) {
    config.validate();
    const Realization base = make_realization(config, 0);
    const int n = base.network.size();
    std::vector<int> nodes;
    if (config.all_nodes) {
        nodes.resize(static_cast<std::size_t>(n));
        std::iota(nodes.begin(), nodes.end(), 0);
    } else {
        nodes.push_back(config.node);
    }

    std::vector<std::vector<CoverageRow>> per_trial(static_cast<std::size_t>(config.trials));
    parallel_for(config.trials, config.threads, [&](int t) {
        const auto trial = static_cast<std::uint64_t>(t);
        std::vector<RegressorSample> samples = base.samples;
        Rng noise_rng = make_rng(config.seed, {tag(Stream::Trial), trial, tag(Stream::Noise)});
        redraw_noise(samples, config.model, noise_rng);
        const SignMatrix signs =
            draw_sign_matrix(config.sps.m, n, derive_seed(config.seed, {tag(Stream::Trial), trial, tag(Stream::Signs)}));
        ProtocolDriver driver(config.diffusion.protocol, base.network, samples, signs);
        driver.run(config.diffusion.rounds);
        auto& rows = per_trial[static_cast<std::size_t>(t)];
        for (int k : nodes) {
            const AggregateSums agg = driver.aggregate(k);
            const Vec z = z_values(agg, config.model.p_true);
            TieRng tie(derive_seed(config.seed, {tag(Stream::Trial), trial, tag(Stream::Ties), static_cast<std::uint64_t>(k)}));
            CoverageRow row;
            row.trial = t;
            row.node = k;
            row.rounds_done = driver.rounds();
            row.cumulative_scalars = driver.total_scalars();
            row.covers_truth = membership(z, config.sps.q, tie);
            const auto c = driver.weights(k);
            row.c_sum = std::accumulate(c.begin(), c.end(), 0.0);
            rows.push_back(row);
        }
    });

    CoverageReport report;
    report.protocol = config.diffusion.protocol;
    report.rounds = config.diffusion.rounds;
    report.nominal = config.sps.confidence();
    std::map<int, std::pair<long long, long long>> per_node;
    for (auto& rows : per_trial) {
        for (auto& row : rows) {
            ++report.evaluations;
            report.hits += row.covers_truth;
            auto& [h, e] = per_node[row.node];
            h += row.covers_truth;
            ++e;
            report.rows.push_back(row);
        }
    }
    report.coverage = static_cast<double>(report.hits) / static_cast<double>(report.evaluations);
    report.ci = wilson_interval(report.hits, report.evaluations);
    report.node_min = 1.0;
    report.node_max = 0.0;
    for (const auto& [node, he] : per_node) {
        const double f = static_cast<double>(he.first) / static_cast<double>(he.second);
        report.node_min = std::min(report.node_min, f);
        report.node_max = std::max(report.node_max, f);
    }
    return report;
}

namespace {

std::vector<int> evaluated_nodes(int n, int count) {
    std::vector<int> nodes;
    if (count <= 0 || count >= n) {
        nodes.resize(static_cast<std::size_t>(n));
        std::iota(nodes.begin(), nodes.end(), 0);
        return nodes;
    }
    for (int k = 0; k < count; ++k) nodes.push_back(static_cast<int>(static_cast<long long>(k) * n / count));
    return nodes;
}

std::vector<int> default_checkpoints(int limit) {
    std::vector<int> cps{0};
    for (int t = 1; t <= limit; t *= 2) cps.push_back(t);
    return cps;
}

}  // namespace

TradeoffReport run_tradeoff(const ExperimentConfig& config) {
    config.validate();
    if (config.model.n_p > 3 && !config.region.allow_high_dim)
        throw ConfigError("tradeoff needs n_p <= 3 (set region.allow_high_dim to override)");
    const Realization first = make_realization(config, 0);
    const Box box = resolve_box(config, first);
    const std::vector<int> grid = resolve_grid(config);
    RegionOptions options;
    options.allow_high_dim = config.region.allow_high_dim;

    const std::size_t n_protocols = config.tradeoff_protocols.size();
    std::vector<std::vector<TradeoffRow>> per_real(static_cast<std::size_t>(config.trials));
    parallel_for(config.trials, config.threads, [&](int r) {
        const Realization real = make_realization(config, static_cast<std::uint64_t>(r));
        const int n = real.network.size();
        const auto nodes = evaluated_nodes(n, config.region.nodes);
        auto& rows = per_real[static_cast<std::size_t>(r)];
        for (std::size_t pi = 0; pi < n_protocols; ++pi) {
            const ProtocolKind protocol = config.tradeoff_protocols[pi];
            ProtocolDriver driver(protocol, real.network, real.samples, real.signs);
            auto record = [&] {
                double volume = 0.0;
                for (int k : nodes) {
                    const std::uint64_t tie_seed =
                        derive_seed(config.seed, {tag(Stream::Ties), static_cast<std::uint64_t>(r), pi,
                                                  static_cast<std::uint64_t>(driver.rounds()), static_cast<std::uint64_t>(k)});
                    volume += evaluate_region(driver.aggregate(k), box, grid, config.sps.q, tie_seed, options).volume;
                }
                rows.push_back({r, protocol, driver.rounds(), static_cast<double>(driver.total_scalars()) / n,
                                volume / static_cast<double>(nodes.size())});
            };
            if (is_consensus(protocol)) {
                const int limit = config.diffusion.rounds >= 0 ? config.diffusion.rounds : 50 * std::max(1, diameter(real.network.graph));
                std::vector<int> cps = config.region.checkpoints.empty() ? default_checkpoints(limit) : config.region.checkpoints;
                std::sort(cps.begin(), cps.end());
                cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
                for (int cp : cps) {
                    driver.run(cp);
                    if (driver.rounds() == cp) record();
                }
            } else {
                record();
                while ((config.diffusion.rounds < 0 || driver.rounds() < config.diffusion.rounds) && driver.step())
                    record();
            }
        }
    });

    TradeoffReport report;
    for (auto& rows : per_real)
        for (auto& row : rows) report.rows.push_back(row);

    // average over realizations; a finished series holds its last point
    for (ProtocolKind protocol : config.tradeoff_protocols) {
        std::set<int> rounds;
        for (const auto& row : report.rows)
            if (row.protocol == protocol) rounds.insert(row.round);
        for (int round : rounds) {
            double traffic = 0.0;
            double volume = 0.0;
            int count = 0;
            for (const auto& rows : per_real) {
                const TradeoffRow* best = nullptr;
                for (const auto& row : rows)
                    if (row.protocol == protocol && row.round <= round && (!best || row.round > best->round)) best = &row;
                if (!best) continue;
                traffic += best->scalars_per_node;
                volume += best->mean_volume;
                ++count;
            }
            if (count) report.curve.push_back({protocol, round, traffic / count, volume / count});
        }
    }
    return report;
}

SuccessReport run_success_rate(const ExperimentConfig& config) {
    config.validate();
    const int m = config.sps.m;
    struct Job {
        int N;
        int trial;
    };
    std::vector<Job> jobs;
    for (int N : config.sweep.N_values)
        for (int t = 0; t < config.trials; ++t) jobs.push_back({N, t});

    std::vector<std::vector<SuccessRow>> results(jobs.size());
    parallel_for(static_cast<int>(jobs.size()), config.threads, [&](int idx) {
        const Job job = jobs[static_cast<std::size_t>(idx)];
        const auto N = static_cast<std::uint64_t>(job.N);
        const auto trial = static_cast<std::uint64_t>(job.trial);
        Rng topo_rng = make_rng(config.seed, {tag(Stream::Topology), N, trial});
        const Graph g = random_geometric(job.N, topo_rng, config.topology.retry_budget);
        Rng root_rng = make_rng(config.seed, {tag(Stream::Root), N, trial});
        const TreeTopology tree = spanning_tree(g, center_root(g, root_rng));
        for (int n_p : config.sweep.n_p_values) {
            const auto tas = predict_random_tree(Protocol::Tas, tree.lambda, tree.lambda_bar, n_p, m);
            const auto mf = predict_random_tree(Protocol::Mf, tree.lambda, tree.lambda_bar, n_p, m);
            SuccessRow row{job.N, n_p, job.trial, tree.L, tas.scalars, mf.scalars, tas.scalars < mf.scalars, false};
            if (job.trial < config.sweep.simulate) {
                FieldConfig field = config.model;
                field.n_p = n_p;
                field.p_true = Vec::Zero(n_p);
                field.regressor_family = RegressorFamily::SeededRandom;
                Rng data_rng = make_rng(config.seed, {tag(Stream::Noise), N, trial, static_cast<std::uint64_t>(n_p)});
                const auto samples = generate_measurements(g.positions, field, data_rng);
                const auto signs = draw_sign_matrix(m, job.N, derive_seed(config.seed, {tag(Stream::Signs), N, trial}));
                const long long mf_sim = run_mf_tree(tree, samples).log.total_scalars();
                const long long tas_sim = run_tas_tree(tree, samples, signs).log.total_scalars();
                if (mf_sim != mf.scalars || tas_sim != tas.scalars)
                    throw std::logic_error("success-rate: simulated traffic differs from the census formulas");
                row.simulated = true;
            }
            results[static_cast<std::size_t>(idx)].push_back(row);
        }
    });

    SuccessReport report;
    for (auto& rows : results)
        for (auto& row : rows) report.rows.push_back(row);
    std::sort(report.rows.begin(), report.rows.end(), [](const SuccessRow& a, const SuccessRow& b) {
        return std::tie(a.N, a.n_p, a.trial) < std::tie(b.N, b.n_p, b.trial);
    });
    for (int N : config.sweep.N_values) {
        for (int n_p : config.sweep.n_p_values) {
            SuccessPoint p{N, n_p, 0, 0, 0.0};
            for (const auto& row : report.rows)
                if (row.N == N && row.n_p == n_p) {
                    ++p.trials;
                    p.tas_wins += row.tas_wins;
                }
            p.rate = p.trials ? static_cast<double>(p.tas_wins) / p.trials : 0.0;
            report.points.push_back(p);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Output

void write_csv(std::ostream& out, const CoverageReport& report, std::uint64_t hash) {
    CsvWriter csv(out);
    csv.provenance("coverage", hash);
    csv.row({"trial", "node", "rounds_done", "cumulative_scalars", "covers_truth", "c_sum"});
    for (const auto& r : report.rows)
        csv.row({std::to_string(r.trial), std::to_string(r.node), std::to_string(r.rounds_done),
                 std::to_string(r.cumulative_scalars), r.covers_truth ? "1" : "0", format_double(r.c_sum)});
}

void write_summary_csv(std::ostream& out, const CoverageReport& report, std::uint64_t hash) {
    CsvWriter csv(out);
    csv.provenance("coverage-summary", hash);
    csv.row({"protocol", "rounds", "evaluations", "hits", "coverage", "ci_lo", "ci_hi", "nominal", "node_min",
             "node_max"});
    csv.row({to_string(report.protocol), std::to_string(report.rounds), std::to_string(report.evaluations),
             std::to_string(report.hits), format_double(report.coverage), format_double(report.ci.lo),
             format_double(report.ci.hi), format_double(report.nominal), format_double(report.node_min),
             format_double(report.node_max)});
}

void write_csv(std::ostream& out, const TradeoffReport& report, std::uint64_t hash, bool curve) {
    CsvWriter csv(out);
    if (curve) {
        csv.provenance("tradeoff-curve", hash);
        csv.row({"protocol", "round", "scalars_per_node", "mean_volume"});
        for (const auto& p : report.curve)
            csv.row({to_string(p.protocol), std::to_string(p.round), format_double(p.scalars_per_node),
                     format_double(p.mean_volume)});
    } else {
        csv.provenance("tradeoff", hash);
        csv.row({"realization", "protocol", "round", "scalars_per_node", "mean_volume"});
        for (const auto& r : report.rows)
            csv.row({std::to_string(r.realization), to_string(r.protocol), std::to_string(r.round),
                     format_double(r.scalars_per_node), format_double(r.mean_volume)});
    }
}

void write_csv(std::ostream& out, const SuccessReport& report, std::uint64_t hash, bool points) {
    CsvWriter csv(out);
    if (points) {
        csv.provenance("success-rate-summary", hash);
        csv.row({"N", "n_p", "trials", "tas_wins", "rate"});
        for (const auto& p : report.points)
            csv.row({std::to_string(p.N), std::to_string(p.n_p), std::to_string(p.trials), std::to_string(p.tas_wins),
                     format_double(p.rate)});
    } else {
        csv.provenance("success-rate", hash);
        csv.row({"N", "n_p", "trial", "L", "tas_scalars", "mf_scalars", "tas_wins", "simulated"});
        for (const auto& r : report.rows)
            csv.row({std::to_string(r.N), std::to_string(r.n_p), std::to_string(r.trial), std::to_string(r.L),
                     std::to_string(r.tas_scalars), std::to_string(r.mf_scalars), r.tas_wins ? "1" : "0",
                     r.simulated ? "1" : "0"});
    }
}

json to_json(const CoverageReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"trial", r.trial},
                        {"node", r.node},
                        {"rounds_done", r.rounds_done},
                        {"cumulative_scalars", r.cumulative_scalars},
                        {"covers_truth", r.covers_truth},
                        {"c_sum", r.c_sum}});
    return {{"protocol", to_string(report.protocol)},
            {"rounds", report.rounds},
            {"evaluations", report.evaluations},
            {"hits", report.hits},
            {"coverage", report.coverage},
            {"ci", {report.ci.lo, report.ci.hi}},
            {"nominal", report.nominal},
            {"node_min", report.node_min},
            {"node_max", report.node_max},
            {"rows", rows}};
}

json to_json(const TradeoffReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"realization", r.realization},
                        {"protocol", to_string(r.protocol)},
                        {"round", r.round},
                        {"scalars_per_node", r.scalars_per_node},
                        {"mean_volume", r.mean_volume}});
    json curve = json::array();
    for (const auto& p : report.curve)
        curve.push_back({{"protocol", to_string(p.protocol)},
                         {"round", p.round},
                         {"scalars_per_node", p.scalars_per_node},
                         {"mean_volume", p.mean_volume}});
    return {{"rows", rows}, {"curve", curve}};
}

json to_json(const SuccessReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"N", r.N},
                        {"n_p", r.n_p},
                        {"trial", r.trial},
                        {"L", r.L},
                        {"tas_scalars", r.tas_scalars},
                        {"mf_scalars", r.mf_scalars},
                        {"tas_wins", r.tas_wins},
                        {"simulated", r.simulated}});
    json points = json::array();
    for (const auto& p : report.points)
        points.push_back({{"N", p.N}, {"n_p", p.n_p}, {"trials", p.trials}, {"tas_wins", p.tas_wins}, {"rate", p.rate}});
    return {{"rows", rows}, {"points", points}};
}

}  // namespace spsnet
