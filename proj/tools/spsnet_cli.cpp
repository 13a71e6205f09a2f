#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "spsnet/analysis.hpp"
#include "spsnet/experiments.hpp"
#include "spsnet/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spsnet;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "csv";
};

ExperimentConfig load_config(const GlobalOptions& g) {
    json j = json::object();
    if (!g.config_path.empty()) {
        std::ifstream in(g.config_path);
        if (!in) throw ConfigError("cannot read config file '" + g.config_path + "'");
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file '" + g.config_path + "' is not valid JSON: " + e.what());
        }
    }
    if (g.seed) j["seed"] = *g.seed;
    return config_from_json(j);
}

fs::path out_dir(const GlobalOptions& g, const ExperimentConfig& c) {
    fs::path dir = g.out.empty() ? fs::path(c.output_dir) : fs::path(g.out);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << contents;
    std::cout << "wrote " << path.string() << "\n";
}

template <class Fn>
std::string capture(Fn&& fn) {
    std::ostringstream s;
    fn(s);
    return s.str();
}

bool json_format(const GlobalOptions& g) { return g.format == "json"; }

// ---------------------------------------------------------------------------

void cmd_topology(const GlobalOptions& g) {
    const ExperimentConfig c = load_config(g);
    const std::uint64_t hash = config_hash(c);
    const Realization r = make_realization(c, 0);
    const fs::path dir = out_dir(g, c);
    json j = {{"kind", to_string(r.network.kind)}, {"graph", to_json(r.network.graph)}};
    if (r.network.tree) j["tree"] = to_json(*r.network.tree);
    if (r.network.clusters) j["clusters"] = to_json(*r.network.clusters);
    j["diameter"] = diameter(r.network.graph);
    if (json_format(g)) {
        write_file(dir / "topology.json", j.dump(2) + "\n");
    } else {
        write_file(dir / "edges.csv", capture([&](std::ostream& s) {
                       CsvWriter csv(s);
                       csv.provenance("topology", hash);
                       csv.row({"i", "j"});
                       for (auto [a, b] : r.network.graph.edges()) csv.row({std::to_string(a), std::to_string(b)});
                   }));
        if (r.network.tree) {
            write_file(dir / "census.csv", capture([&](std::ostream& s) {
                           CsvWriter csv(s);
                           csv.provenance("topology-census", hash);
                           csv.row({"level", "lambda", "lambda_bar"});
                           const auto& t = *r.network.tree;
                           for (std::size_t l = 0; l < t.lambda.size(); ++l)
                               csv.row({std::to_string(l), std::to_string(t.lambda[l]), std::to_string(t.lambda_bar[l])});
                       }));
        }
    }
    write_file(dir / "topology.dot",
               r.network.tree ? to_dot(*r.network.tree) : to_dot(r.network.graph));
    std::cout << "N=" << r.network.size() << " edges=" << r.network.graph.edge_count()
              << " diameter=" << j["diameter"].get<int>() << "\n";
}

void cmd_diffuse(const GlobalOptions& g, bool with_region) {
    const ExperimentConfig c = load_config(g);
    const std::uint64_t hash = config_hash(c);
    const Realization r = make_realization(c, 0);
    ProtocolDriver driver(c.diffusion.protocol, r.network, r.samples, r.signs);
    driver.run(c.diffusion.rounds);
    const fs::path dir = out_dir(g, c);
    const int n = r.network.size();

    std::optional<Box> box;
    std::vector<int> grid;
    if (with_region) {
        box = resolve_box(c, r);
        grid = resolve_grid(c);
    }
    RegionOptions options;
    options.allow_high_dim = c.region.allow_high_dim;

    json nodes = json::array();
    for (int k = 0; k < n; ++k) {
        const auto w = driver.weights(k);
        json e = {{"node_id", k}, {"c_vector", w}};
        if (with_region) {
            const auto region = evaluate_region(driver.aggregate(k), *box, grid, c.sps.q,
                                                derive_seed(c.seed, {tag(Stream::Ties), static_cast<std::uint64_t>(k)}),
                                                options);
            json summary = to_json(region);
            summary.erase("mask_rle");
            e["region"] = summary;
        }
        nodes.push_back(std::move(e));
    }
    if (json_format(g)) {
        json traffic = json::array();
        for (const auto& ev : driver.log().events())
            traffic.push_back({{"round", ev.round}, {"node_id", ev.node}, {"scalars_sent", ev.scalars}, {"tag_bits", ev.tag_bits}});
        json j = {{"protocol", to_string(c.diffusion.protocol)},
                  {"rounds", driver.rounds()},
                  {"total_scalars", driver.total_scalars()},
                  {"config_hash", hex64(hash)},
                  {"traffic", traffic},
                  {"nodes", nodes}};
        write_file(dir / "diffuse.json", j.dump(2) + "\n");
    } else {
        write_file(dir / "traffic.csv", capture([&](std::ostream& s) {
                       CsvWriter(s).provenance("diffuse", hash);
                       driver.log().write_csv(s);
                   }));
        write_file(dir / "nodes.json", json({{"config_hash", hex64(hash)}, {"nodes", nodes}}).dump(2) + "\n");
    }
    std::cout << "protocol=" << to_string(c.diffusion.protocol) << " rounds=" << driver.rounds()
              << " total_scalars=" << driver.total_scalars() << "\n";
}

void cmd_region(const GlobalOptions& g) {
    const ExperimentConfig c = load_config(g);
    const std::uint64_t hash = config_hash(c);
    const Realization r = make_realization(c, 0);
    ProtocolDriver driver(c.diffusion.protocol, r.network, r.samples, r.signs);
    driver.run(c.diffusion.rounds);
    const Box box = resolve_box(c, r);
    const auto grid = resolve_grid(c);
    RegionOptions options;
    options.allow_high_dim = c.region.allow_high_dim;
    const RegionResult region = evaluate_region(driver.aggregate(c.node), box, grid, c.sps.q,
                                                derive_seed(c.seed, {tag(Stream::Ties), static_cast<std::uint64_t>(c.node)}),
                                                options);
    const fs::path dir = out_dir(g, c);
    if (json_format(g)) {
        json j = to_json(region);
        j["node"] = c.node;
        j["config_hash"] = hex64(hash);
        write_file(dir / "region.json", j.dump(2) + "\n");
    } else {
        write_file(dir / "region.csv", capture([&](std::ostream& s) {
                       CsvWriter csv(s);
                       csv.provenance("region", hash);
                       auto header = region_summary_header(c.model.n_p);
                       header.insert(header.begin(), "node");
                       csv.row(header);
                       auto row = region_summary_row(region);
                       row.insert(row.begin(), std::to_string(c.node));
                       csv.row(row);
                   }));
    }
    std::cout << "volume=" << format_double(region.volume) << " members=" << region.member_count << "/"
              << region.cell_count() << "\n";
}

void cmd_coverage(const GlobalOptions& g, std::optional<int> trials, bool all_nodes) {
    ExperimentConfig c = load_config(g);
    if (trials) c.trials = *trials;
    if (all_nodes) c.all_nodes = true;
    const std::uint64_t hash = config_hash(c);
    const CoverageReport report = run_coverage(c);
    const fs::path dir = out_dir(g, c);
    if (json_format(g)) {
        json j = to_json(report);
        j["config_hash"] = hex64(hash);
        write_file(dir / "coverage.json", j.dump(2) + "\n");
    } else {
        write_file(dir / "coverage.csv", capture([&](std::ostream& s) { write_csv(s, report, hash); }));
        write_file(dir / "coverage_summary.csv", capture([&](std::ostream& s) { write_summary_csv(s, report, hash); }));
    }
    std::cout << "coverage=" << format_double(report.coverage) << " nominal=" << format_double(report.nominal)
              << " ci=[" << format_double(report.ci.lo) << "," << format_double(report.ci.hi) << "]\n";
}

void cmd_tradeoff(const GlobalOptions& g, std::optional<int> trials) {
    ExperimentConfig c = load_config(g);
    if (trials) c.trials = *trials;
    const std::uint64_t hash = config_hash(c);
    const TradeoffReport report = run_tradeoff(c);
    const fs::path dir = out_dir(g, c);
    if (json_format(g)) {
        json j = to_json(report);
        j["config_hash"] = hex64(hash);
        write_file(dir / "tradeoff.json", j.dump(2) + "\n");
    } else {
        write_file(dir / "tradeoff.csv", capture([&](std::ostream& s) { write_csv(s, report, hash, false); }));
        write_file(dir / "tradeoff_curve.csv", capture([&](std::ostream& s) { write_csv(s, report, hash, true); }));
    }
}

void cmd_success(const GlobalOptions& g, std::optional<int> trials) {
    ExperimentConfig c = load_config(g);
    if (trials) c.trials = *trials;
    const std::uint64_t hash = config_hash(c);
    const SuccessReport report = run_success_rate(c);
    const fs::path dir = out_dir(g, c);
    if (json_format(g)) {
        json j = to_json(report);
        j["config_hash"] = hex64(hash);
        write_file(dir / "success_rate.json", j.dump(2) + "\n");
    } else {
        write_file(dir / "success_rate.csv", capture([&](std::ostream& s) { write_csv(s, report, hash, false); }));
        write_file(dir / "success_rate_summary.csv", capture([&](std::ostream& s) { write_csv(s, report, hash, true); }));
    }
    for (const auto& p : report.points)
        std::cout << "N=" << p.N << " n_p=" << p.n_p << " rate=" << format_double(p.rate) << "\n";
}

struct PredictOptions {
    std::string topology = "binary";
    long long N = 0;
    int n_p = 2;
    int m = 10;
    long long n_c = 1;
    std::vector<long long> lambda;
    std::vector<long long> lambda_bar;
};

void cmd_predict(const GlobalOptions& g, const PredictOptions& o) {
    TrafficPrediction tas;
    TrafficPrediction mf;
    if (o.topology == "binary") {
        tas = predict_binary(Protocol::Tas, o.N, o.n_p, o.m);
        mf = predict_binary(Protocol::Mf, o.N, o.n_p, o.m);
    } else if (o.topology == "clustered") {
        tas = predict_clustered(Protocol::Tas, o.N, o.n_c, o.n_p, o.m);
        mf = predict_clustered(Protocol::Mf, o.N, o.n_c, o.n_p, o.m);
    } else if (o.topology == "random-tree") {
        tas = predict_random_tree(Protocol::Tas, o.lambda, o.lambda_bar, o.n_p, o.m);
        mf = predict_random_tree(Protocol::Mf, o.lambda, o.lambda_bar, o.n_p, o.m);
    } else {
        throw ConfigError("unknown topology '" + o.topology + "' (binary, clustered, random-tree)");
    }
    const Comparison cmp = compare(tas, mf);
    std::cout << "TAS " << tas.scalars << "\n"
              << "MF " << mf.scalars << "\n"
              << "cheaper " << (cmp.tie ? "tie" : to_string(cmp.cheaper)) << " margin " << cmp.margin << "\n";
    if (o.topology == "binary") {
        const auto crit = critical_n(o.n_p, o.m);
        std::cout << "N* " << format_double(crit.n_star) << "\n";
    }
    if (g.out.empty()) return;
    fs::create_directories(g.out);
    const json params = {{"topology", o.topology}, {"N", tas.n}, {"n_p", o.n_p}, {"m", o.m}, {"n_c", o.n_c},
                         {"lambda", o.lambda}, {"lambda_bar", o.lambda_bar}};
    const std::uint64_t hash = fnv1a64(params.dump());
    if (json_format(g)) {
        json j = params;
        j["TAS"] = tas.scalars;
        j["MF"] = mf.scalars;
        j["d_mf"] = tas.d_mf;
        j["d_tas"] = tas.d_tas;
        write_file(fs::path(g.out) / "traffic_predict.json", j.dump(2) + "\n");
    } else {
        write_file(fs::path(g.out) / "traffic_predict.csv", capture([&](std::ostream& s) {
                       CsvWriter csv(s);
                       csv.provenance("traffic-predict", hash);
                       csv.row({"topology", "protocol", "N", "n_p", "m", "n_c", "L", "d", "predicted_scalars"});
                       for (const auto* t : {&tas, &mf})
                           csv.row({o.topology, to_string(t->protocol), std::to_string(t->n), std::to_string(o.n_p),
                                    std::to_string(o.m), std::to_string(t->n_c), std::to_string(t->L),
                                    std::to_string(t->protocol == Protocol::Tas ? t->d_tas : t->d_mf),
                                    std::to_string(t->scalars)});
                   }));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sign-perturbed-sums confidence regions over simulated sensor networks"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    GlobalOptions g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.fallthrough();

    auto* topology = app.add_subcommand("topology", "Generate the configured network and export it");
    auto* diffuse = app.add_subcommand("diffuse", "Run the configured protocol; export traffic and node weights");
    bool diffuse_region = false;
    diffuse->add_flag("--region", diffuse_region, "Also evaluate each node's confidence region");
    auto* region = app.add_subcommand("region", "Evaluate the confidence region at the configured node");
    std::optional<int> trials;
    bool all_nodes = false;
    auto* coverage = app.add_subcommand("coverage", "Monte Carlo coverage of the true parameter");
    coverage->add_option("--trials", trials, "Override the trial count");
    coverage->add_flag("--all-nodes", all_nodes, "Measure coverage at every node");
    auto* tradeoff = app.add_subcommand("tradeoff", "Region volume versus per-node traffic");
    tradeoff->add_option("--trials", trials, "Override the realization count");
    auto* success = app.add_subcommand("success-rate", "Share of random trees on which TAS is cheaper than MF");
    success->add_option("--trials", trials, "Override the realization count");

    PredictOptions p;
    auto* predict = app.add_subcommand("traffic-predict", "Closed-form traffic for MF and TAS");
    predict->add_option("--topology", p.topology, "binary | clustered | random-tree")
        ->check(CLI::IsMember({"binary", "clustered", "random-tree"}));
    predict->add_option("--N", p.N, "Number of nodes");
    predict->add_option("--np", p.n_p, "Parameter dimension")->check(CLI::PositiveNumber);
    predict->add_option("--m", p.m, "Number of sign-perturbed sums")->check(CLI::Range(2, 1 << 20));
    predict->add_option("--nc", p.n_c, "Number of clusters");
    predict->add_option("--lambda", p.lambda, "Nodes per level (random-tree)")->delimiter(',');
    predict->add_option("--lambda-bar", p.lambda_bar, "Sonless nodes per level (random-tree)")->delimiter(',');

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count()) g.seed = seed;

    try {
        if (*topology) cmd_topology(g);
        else if (*diffuse) cmd_diffuse(g, diffuse_region);
        else if (*region) cmd_region(g);
        else if (*coverage) cmd_coverage(g, trials, all_nodes);
        else if (*tradeoff) cmd_tradeoff(g, trials);
        else if (*success) cmd_success(g, trials);
        else if (*predict) cmd_predict(g, p);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
