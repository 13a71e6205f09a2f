#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spsnet/model.hpp"
#include "spsnet/rng.hpp"

namespace spsnet {

class TopologyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Undirected simple graph kept as sorted neighbour lists.
class Graph {
public:
    Graph() = default;
    explicit Graph(int n);

    int size() const { return static_cast<int>(adj_.size()); }
    const std::vector<int>& neighbors(int i) const { return adj_[static_cast<std::size_t>(i)]; }
    int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
    int max_degree() const;
    long long edge_count() const;
    bool adjacent(int i, int j) const;

    /// Adds the undirected edge {i, j}; self loops are rejected, duplicates ignored.
    void add_edge(int i, int j);

    std::vector<std::pair<int, int>> edges() const;

    std::vector<Vec> positions;  // empty when the graph is not geometric
    std::optional<double> d_comm;

private:
    std::vector<std::vector<int>> adj_;
};

struct TreeTopology {
    int root = 0;
    std::vector<int> parent;  // -1 at the root
    std::vector<int> level;
    std::vector<std::vector<int>> children;
    int L = 0;
    std::vector<long long> lambda;      // nodes per level
    std::vector<long long> lambda_bar;  // sonless nodes per level

    int size() const { return static_cast<int>(parent.size()); }
    std::vector<int> nodes_at_level(int l) const;
    /// The tree as a graph (parent-child edges).
    Graph as_graph() const;
    void validate() const;
};

struct ClusteredTopology {
    int n_c = 0;
    std::vector<int> head;    // clusterhead id per cluster
    std::vector<int> assign;  // cluster id per node
    std::vector<int> sizes;   // N_i^c, head included
    std::vector<std::vector<int>> members;  // per cluster, head first

    int size() const { return static_cast<int>(assign.size()); }
    bool is_head(int node) const { return head[static_cast<std::size_t>(assign[static_cast<std::size_t>(node)])] == node; }
    /// Member-head stars plus the complete head mesh.
    Graph as_graph() const;
};

/// sqrt(log2(N) / (2N)).
double comm_radius(int n);

/// Uniform positions on the unit square, edges within comm_radius(N),
/// redrawn until connected. Throws TopologyError after `retry_budget` draws.
Graph random_geometric(int n, Rng& rng, int retry_budget = 100, int* attempts = nullptr);

/// Geometric graph over given positions and radius (no retry).
Graph geometric_graph(const std::vector<Vec>& positions, double radius);

Graph path_graph(int n);
Graph complete_graph(int n);
Graph star_graph(int n);

/// Hop distances from `source`; -1 for unreachable nodes.
std::vector<int> bfs_distances(const Graph& graph, int source);
bool is_connected(const Graph& graph);

/// Maximum BFS hop distance over all pairs. Throws on a disconnected graph.
int diameter(const Graph& graph);

/// Approximate center: BFS from a random node, then from the farthest node
/// found, and take the middle of that longest path.
int center_root(const Graph& graph, Rng& rng);

/// BFS spanning tree (neighbours visited in increasing id order).
TreeTopology spanning_tree(const Graph& graph, int root);

/// Fills level, L, lambda and lambda_bar from parent/children.
void compute_census(TreeTopology& tree);

/// Heap-numbered complete binary tree with L + 1 levels (N = 2^{L+1} - 1).
TreeTopology complete_binary_tree(int L);

/// Uniform assignment of N nodes to n_c clusters conditioned on every
/// cluster being nonempty; the head is a uniformly chosen member.
ClusteredTopology clustered(int n, int n_c, Rng& rng);

}  // namespace spsnet
