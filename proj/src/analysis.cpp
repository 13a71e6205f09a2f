#include "spsnet/analysis.hpp"

#include <bit>
#include <cstdlib>
#include <cmath>
#include <numeric>

namespace spsnet {

std::string to_string(Protocol p) { return p == Protocol::Mf ? "MF" : "TAS"; }

std::string to_string(TopologyKind k) {
    switch (k) {
        case TopologyKind::RandomTree: return "random-tree";
        case TopologyKind::BinaryTree: return "binary";
        case TopologyKind::Clustered: return "clustered";
    }
    return "?";
}

namespace {

void check_census(std::span<const long long> lambda, std::span<const long long> lambda_bar) {
    if (lambda.empty() || lambda[0] != 1) throw AnalysisError("malformed census: Lambda(0) must be 1");
    if (lambda_bar.size() != lambda.size()) throw AnalysisError("malformed census: Lambda and Lambda_bar lengths differ");
    for (std::size_t l = 0; l < lambda.size(); ++l) {
        if (lambda[l] < 1) throw AnalysisError("malformed census: empty level " + std::to_string(l));
        if (lambda_bar[l] < 0 || lambda_bar[l] > lambda[l])
            throw AnalysisError("malformed census: Lambda_bar out of range at level " + std::to_string(l));
    }
    if (lambda_bar.back() != lambda.back()) throw AnalysisError("malformed census: deepest level must be sonless");
}

long long sum_range(std::span<const long long> v, std::size_t first, std::size_t last_inclusive) {
    long long s = 0;
    for (std::size_t l = first; l <= last_inclusive && l < v.size(); ++l) s += v[l];
    return s;
}

void check_binary(long long n) {
    if (!is_binary_tree_size(n)) throw AnalysisError("N = " + std::to_string(n) + " is not of the form 2^{L+1} - 1");
}

void check_clusters(long long n, long long n_c) {
    if (n_c < 1 || n_c > n) throw AnalysisError("n_c must satisfy 1 <= n_c <= N");
}

}  // namespace

long long traffic_tas_random_tree(std::span<const long long> lambda, std::span<const long long> lambda_bar,
                                  long long d_tas) {
    check_census(lambda, lambda_bar);
    const std::size_t L = lambda.size() - 1;
    long long units = sum_range(lambda, 0, L);
    if (L >= 2) units += sum_range(lambda, 1, L - 1) - sum_range(lambda_bar, 1, L - 1);
    return units * d_tas;
}

long long traffic_mf_random_tree(std::span<const long long> lambda, std::span<const long long> lambda_bar, long long n,
                                 long long d_mf) {
    check_census(lambda, lambda_bar);
    if (std::accumulate(lambda.begin(), lambda.end(), 0LL) != n)
        throw AnalysisError("malformed census: sum of Lambda differs from N");
    const std::size_t L = lambda.size() - 1;
    long long units = sum_range(lambda, 0, L) + lambda[L];
    if (L >= 2) {
        units += n * (sum_range(lambda, 1, L - 1) - sum_range(lambda_bar, 1, L - 1));
        units += sum_range(lambda_bar, 1, L - 1);
    }
    return units * d_mf;
}

long long traffic_tas_binary(long long n, long long d_tas) {
    check_binary(n);
    return (3 * n - 3) / 2 * d_tas;
}

long long traffic_mf_binary(long long n, long long d_mf) {
    check_binary(n);
    return (n * n + 1) / 2 * d_mf;
}

long long traffic_tas_clustered(long long n, long long n_c, long long d_tas) {
    check_clusters(n, n_c);
    return (n + n_c) * d_tas;
}

long long traffic_mf_clustered(long long n, long long n_c, long long d_mf) {
    check_clusters(n, n_c);
    return (n - n_c + n_c * n) * d_mf;
}

CriticalSize critical_n(int n_p, int m) {
    if (n_p < 1 || m < 2) throw AnalysisError("critical_n: need n_p >= 1 and m >= 2");
    CriticalSize out;
    out.k1 = (n_p + 1.0) / ((n_p + n_p * (n_p + 1.0) / 2.0) * m);
    const double disc = 9.0 - 4.0 * out.k1 * (3.0 + out.k1);
    if (disc < 0.0) throw AnalysisError("critical_n: negative discriminant (K1 = " + std::to_string(out.k1) + ")");
    out.n_star = (3.0 + std::sqrt(disc)) / (2.0 * out.k1);
    return out;
}

bool is_binary_tree_size(long long n) { return n >= 1 && ((n + 1) & n) == 0; }

void binary_tree_census(int L, std::vector<long long>& lambda, std::vector<long long>& lambda_bar) {
    if (L < 0 || L > 60) throw AnalysisError("binary_tree_census: L out of range");
    lambda.assign(static_cast<std::size_t>(L + 1), 0);
    lambda_bar.assign(static_cast<std::size_t>(L + 1), 0);
    for (int l = 0; l <= L; ++l) lambda[static_cast<std::size_t>(l)] = 1LL << l;
    lambda_bar[static_cast<std::size_t>(L)] = 1LL << L;
}

namespace {

long long d_mf_of(int n_p) { return n_p + 1LL; }
long long d_tas_of(int n_p, int m) { return static_cast<long long>(m) * (n_p + n_p * (n_p + 1LL) / 2); }

}  // namespace

TrafficPrediction predict_random_tree(Protocol p, std::span<const long long> lambda,
                                      std::span<const long long> lambda_bar, int n_p, int m) {
    TrafficPrediction t;
    t.protocol = p;
    t.topology = TopologyKind::RandomTree;
    t.lambda.assign(lambda.begin(), lambda.end());
    t.lambda_bar.assign(lambda_bar.begin(), lambda_bar.end());
    t.n = std::accumulate(lambda.begin(), lambda.end(), 0LL);
    t.L = static_cast<long long>(lambda.size()) - 1;
    t.d_mf = d_mf_of(n_p);
    t.d_tas = d_tas_of(n_p, m);
    t.scalars = p == Protocol::Tas ? traffic_tas_random_tree(lambda, lambda_bar, t.d_tas)
                                   : traffic_mf_random_tree(lambda, lambda_bar, t.n, t.d_mf);
    return t;
}

TrafficPrediction predict_binary(Protocol p, long long n, int n_p, int m) {
    TrafficPrediction t;
    t.protocol = p;
    t.topology = TopologyKind::BinaryTree;
    t.n = n;
    check_binary(n);
    t.L = std::bit_width(static_cast<unsigned long long>(n + 1)) - 2;
    t.d_mf = d_mf_of(n_p);
    t.d_tas = d_tas_of(n_p, m);
    t.scalars = p == Protocol::Tas ? traffic_tas_binary(n, t.d_tas) : traffic_mf_binary(n, t.d_mf);
    return t;
}

TrafficPrediction predict_clustered(Protocol p, long long n, long long n_c, int n_p, int m) {
    TrafficPrediction t;
    t.protocol = p;
    t.topology = TopologyKind::Clustered;
    t.n = n;
    t.n_c = n_c;
    t.d_mf = d_mf_of(n_p);
    t.d_tas = d_tas_of(n_p, m);
    t.scalars = p == Protocol::Tas ? traffic_tas_clustered(n, n_c, t.d_tas) : traffic_mf_clustered(n, n_c, t.d_mf);
    return t;
}

Comparison compare(const TrafficPrediction& a, const TrafficPrediction& b) {
    if (a.protocol == b.protocol) throw AnalysisError("compare: need one MF and one TAS prediction");
    if (a.topology != b.topology || a.n != b.n || a.L != b.L || a.n_c != b.n_c || a.d_mf != b.d_mf ||
        a.d_tas != b.d_tas || a.lambda != b.lambda || a.lambda_bar != b.lambda_bar)
        throw AnalysisError("compare: predictions refer to different topologies or parameters");
    const auto& tas = a.protocol == Protocol::Tas ? a : b;
    const auto& mf = a.protocol == Protocol::Mf ? a : b;
    Comparison c;
    c.tas_scalars = tas.scalars;
    c.mf_scalars = mf.scalars;
    c.tie = tas.scalars == mf.scalars;
    c.cheaper = tas.scalars < mf.scalars ? Protocol::Tas : Protocol::Mf;
    c.margin = std::llabs(mf.scalars - tas.scalars);
    return c;
}

}  // namespace spsnet
