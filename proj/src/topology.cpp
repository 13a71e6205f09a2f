#include "spsnet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace spsnet {

Graph::Graph(int n) : adj_(static_cast<std::size_t>(n)) {
    if (n < 0) throw TopologyError("Graph: negative size");
}

int Graph::max_degree() const {
    int best = 0;
    for (const auto& nb : adj_) best = std::max(best, static_cast<int>(nb.size()));
    return best;
}

long long Graph::edge_count() const {
    long long total = 0;
    for (const auto& nb : adj_) total += static_cast<long long>(nb.size());
    return total / 2;
}

bool Graph::adjacent(int i, int j) const {
    const auto& nb = neighbors(i);
    return std::binary_search(nb.begin(), nb.end(), j);
}

void Graph::add_edge(int i, int j) {
    if (i == j) throw TopologyError("Graph: self loop at node " + std::to_string(i));
    if (i < 0 || j < 0 || i >= size() || j >= size()) throw TopologyError("Graph: node id out of range");
    auto insert = [](std::vector<int>& v, int x) {
        auto it = std::lower_bound(v.begin(), v.end(), x);
        if (it == v.end() || *it != x) v.insert(it, x);
    };
    insert(adj_[static_cast<std::size_t>(i)], j);
    insert(adj_[static_cast<std::size_t>(j)], i);
}

std::vector<std::pair<int, int>> Graph::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < size(); ++i)
        for (int j : neighbors(i))
            if (i < j) out.emplace_back(i, j);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<int> TreeTopology::nodes_at_level(int l) const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
        if (level[static_cast<std::size_t>(i)] == l) out.push_back(i);
    return out;
}

Graph TreeTopology::as_graph() const {
    Graph g(size());
    for (int i = 0; i < size(); ++i)
        if (parent[static_cast<std::size_t>(i)] >= 0) g.add_edge(i, parent[static_cast<std::size_t>(i)]);
    return g;
}

void TreeTopology::validate() const {
    if (lambda.empty() || lambda[0] != 1) throw TopologyError("tree census: Lambda(0) must be 1");
    if (std::accumulate(lambda.begin(), lambda.end(), 0LL) != size()) throw TopologyError("tree census: sum of Lambda != N");
    for (std::size_t l = 0; l < lambda.size(); ++l)
        if (lambda_bar[l] > lambda[l]) throw TopologyError("tree census: Lambda_bar exceeds Lambda");
    for (int i = 0; i < size(); ++i) {
        const int p = parent[static_cast<std::size_t>(i)];
        if (p >= 0 && level[static_cast<std::size_t>(i)] != level[static_cast<std::size_t>(p)] + 1)
            throw TopologyError("tree: level of node " + std::to_string(i) + " is not parent's level + 1");
    }
}

Graph ClusteredTopology::as_graph() const {
    Graph g(size());
    for (int i = 0; i < size(); ++i) {
        const int h = head[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
        if (h != i) g.add_edge(i, h);
    }
    for (std::size_t a = 0; a < head.size(); ++a)
        for (std::size_t b = a + 1; b < head.size(); ++b) g.add_edge(head[a], head[b]);
    return g;
}

// ---------------------------------------------------------------------------

double comm_radius(int n) {
    if (n < 2) throw TopologyError("comm_radius: N must be >= 2");
    return std::sqrt(std::log2(static_cast<double>(n)) / (2.0 * n));
}

Graph geometric_graph(const std::vector<Vec>& positions, double radius) {
    const int n = static_cast<int>(positions.size());
    Graph g(n);
    const double r2 = radius * radius;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((positions[static_cast<std::size_t>(i)] - positions[static_cast<std::size_t>(j)]).squaredNorm() <= r2)
                g.add_edge(i, j);
    g.positions = positions;
    g.d_comm = radius;
    return g;
}

Graph random_geometric(int n, Rng& rng, int retry_budget, int* attempts) {
    if (n < 2) throw TopologyError("random_geometric: N must be >= 2");
    const double radius = comm_radius(n);
    for (int attempt = 1; attempt <= retry_budget; ++attempt) {
        std::vector<Vec> pos(static_cast<std::size_t>(n), Vec(2));
        for (auto& p : pos) {
            p[0] = uniform01(rng);
            p[1] = uniform01(rng);
        }
        Graph g = geometric_graph(pos, radius);
        if (is_connected(g)) {
            if (attempts) *attempts = attempt;
            return g;
        }
    }
    throw TopologyError("random_geometric: no connected graph with N = " + std::to_string(n) + " after " +
                        std::to_string(retry_budget) + " attempts");
}

Graph path_graph(int n) {
    Graph g(n);
    for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
    return g;
}

Graph complete_graph(int n) {
    Graph g(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
    return g;
}

Graph star_graph(int n) {
    Graph g(n);
    for (int i = 1; i < n; ++i) g.add_edge(0, i);
    return g;
}

std::vector<int> bfs_distances(const Graph& graph, int source) {
    std::vector<int> dist(static_cast<std::size_t>(graph.size()), -1);
    std::deque<int> queue{source};
    dist[static_cast<std::size_t>(source)] = 0;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int v : graph.neighbors(u)) {
            if (dist[static_cast<std::size_t>(v)] < 0) {
                dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

bool is_connected(const Graph& graph) {
    if (graph.size() == 0) return true;
    const auto d = bfs_distances(graph, 0);
    return std::none_of(d.begin(), d.end(), [](int x) { return x < 0; });
}

int diameter(const Graph& graph) {
    int best = 0;
    for (int s = 0; s < graph.size(); ++s) {
        const auto d = bfs_distances(graph, s);
        for (int x : d) {
            if (x < 0) throw TopologyError("diameter: graph is disconnected");
            best = std::max(best, x);
        }
    }
    return best;
}

int center_root(const Graph& graph, Rng& rng) {
    const int n = graph.size();
    if (n == 0) throw TopologyError("center_root: empty graph");
    const int start = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    auto farthest = [&](int s, std::vector<int>& dist) {
        dist = bfs_distances(graph, s);
        if (std::any_of(dist.begin(), dist.end(), [](int x) { return x < 0; }))
            throw TopologyError("center_root: graph is disconnected");
        return static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    };
    std::vector<int> d1, d2;
    const int u = farthest(start, d1);
    const int v = farthest(u, d2);
    // walk back from v towards u until the midpoint
    const int target = d2[static_cast<std::size_t>(v)] / 2;
    int node = v;
    while (d2[static_cast<std::size_t>(node)] > target) {
        for (int w : graph.neighbors(node)) {
            if (d2[static_cast<std::size_t>(w)] == d2[static_cast<std::size_t>(node)] - 1) {
                node = w;
                break;
            }
        }
    }
    return node;
}

void compute_census(TreeTopology& tree) {
    const int n = tree.size();
    tree.level.assign(static_cast<std::size_t>(n), -1);
    std::deque<int> queue{tree.root};
    tree.level[static_cast<std::size_t>(tree.root)] = 0;
    int seen = 0;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        ++seen;
        for (int c : tree.children[static_cast<std::size_t>(u)]) {
            tree.level[static_cast<std::size_t>(c)] = tree.level[static_cast<std::size_t>(u)] + 1;
            queue.push_back(c);
        }
    }
    if (seen != n) throw TopologyError("tree: not all nodes reachable from the root");
    tree.L = *std::max_element(tree.level.begin(), tree.level.end());
    tree.lambda.assign(static_cast<std::size_t>(tree.L + 1), 0);
    tree.lambda_bar.assign(static_cast<std::size_t>(tree.L + 1), 0);
    for (int i = 0; i < n; ++i) {
        const auto l = static_cast<std::size_t>(tree.level[static_cast<std::size_t>(i)]);
        ++tree.lambda[l];
        if (tree.children[static_cast<std::size_t>(i)].empty()) ++tree.lambda_bar[l];
    }
}

TreeTopology spanning_tree(const Graph& graph, int root) {
    const int n = graph.size();
    if (root < 0 || root >= n) throw TopologyError("spanning_tree: root out of range");
    TreeTopology tree;
    tree.root = root;
    tree.parent.assign(static_cast<std::size_t>(n), -2);
    tree.children.assign(static_cast<std::size_t>(n), {});
    tree.parent[static_cast<std::size_t>(root)] = -1;
    std::deque<int> queue{root};
    int seen = 1;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int v : graph.neighbors(u)) {
            if (tree.parent[static_cast<std::size_t>(v)] == -2) {
                tree.parent[static_cast<std::size_t>(v)] = u;
                tree.children[static_cast<std::size_t>(u)].push_back(v);
                queue.push_back(v);
                ++seen;
            }
        }
    }
    if (seen != n) throw TopologyError("spanning_tree: graph is disconnected");
    compute_census(tree);
    return tree;
}

TreeTopology complete_binary_tree(int L) {
    if (L < 0) throw TopologyError("complete_binary_tree: L must be >= 0");
    if (L > 30) throw TopologyError("complete_binary_tree: L too large");
    const int n = (1 << (L + 1)) - 1;
    TreeTopology tree;
    tree.root = 0;
    tree.parent.assign(static_cast<std::size_t>(n), -1);
    tree.children.assign(static_cast<std::size_t>(n), {});
    for (int i = 1; i < n; ++i) {
        const int p = (i - 1) / 2;
        tree.parent[static_cast<std::size_t>(i)] = p;
        tree.children[static_cast<std::size_t>(p)].push_back(i);
    }
    compute_census(tree);
    return tree;
}

ClusteredTopology clustered(int n, int n_c, Rng& rng) {
    if (n_c < 1) throw TopologyError("clustered: n_c must be >= 1");
    if (n_c > n) throw TopologyError("clustered: n_c = " + std::to_string(n_c) + " exceeds N = " + std::to_string(n));
    ClusteredTopology c;
    c.n_c = n_c;
    c.assign.assign(static_cast<std::size_t>(n), 0);
    std::uniform_int_distribution<int> pick(0, n_c - 1);
    bool ok = false;
    // Rejection sampling realises the conditioned multinomial exactly; it is
    // only abandoned when nonempty assignments are vanishingly rare.
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
        std::vector<int> count(static_cast<std::size_t>(n_c), 0);
        for (auto& a : c.assign) {
            a = pick(rng);
            ++count[static_cast<std::size_t>(a)];
        }
        ok = std::all_of(count.begin(), count.end(), [](int k) { return k > 0; });
    }
    if (!ok) {
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < n; ++i)
            c.assign[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i < n_c ? i : pick(rng);
    }
    c.members.assign(static_cast<std::size_t>(n_c), {});
    for (int i = 0; i < n; ++i) c.members[static_cast<std::size_t>(c.assign[static_cast<std::size_t>(i)])].push_back(i);
    c.head.resize(static_cast<std::size_t>(n_c));
    c.sizes.resize(static_cast<std::size_t>(n_c));
    for (int k = 0; k < n_c; ++k) {
        auto& mem = c.members[static_cast<std::size_t>(k)];
        std::uniform_int_distribution<std::size_t> which(0, mem.size() - 1);
        const std::size_t h = which(rng);
        std::swap(mem[0], mem[h]);
        std::sort(mem.begin() + 1, mem.end());
        c.head[static_cast<std::size_t>(k)] = mem[0];
        c.sizes[static_cast<std::size_t>(k)] = static_cast<int>(mem.size());
    }
    return c;
}

}  // namespace spsnet
