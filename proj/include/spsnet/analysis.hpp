#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spsnet {

class AnalysisError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Protocol { Mf, Tas };
enum class TopologyKind { RandomTree, BinaryTree, Clustered };

std::string to_string(Protocol p);
std::string to_string(TopologyKind k);

/// Closed-form scalar count for one protocol on one topology. All arithmetic
/// is exact integer arithmetic.
struct TrafficPrediction {
    Protocol protocol = Protocol::Tas;
    TopologyKind topology = TopologyKind::BinaryTree;
    long long scalars = 0;
    long long n = 0;
    long long L = -1;
    long long n_c = -1;
    long long d_mf = 0;
    long long d_tas = 0;
    std::vector<long long> lambda;
    std::vector<long long> lambda_bar;
};

/// (sum_0^L Lambda + sum_1^{L-1} Lambda - sum_1^{L-1} Lambda_bar) d_TAS.
long long traffic_tas_random_tree(std::span<const long long> lambda, std::span<const long long> lambda_bar,
                                  long long d_tas);

/// (sum_0^L Lambda + Lambda(L) + N sum_1^{L-1} (Lambda - Lambda_bar) + sum_1^{L-1} Lambda_bar) d_MF.
/// Empty sums are 0, so L = 0 evaluates to 2 d_MF.
long long traffic_mf_random_tree(std::span<const long long> lambda, std::span<const long long> lambda_bar, long long n,
                                 long long d_mf);

/// ((3N - 3) / 2) d_TAS for N = 2^{L+1} - 1.
long long traffic_tas_binary(long long n, long long d_tas);
/// ((N^2 + 1) / 2) d_MF for N = 2^{L+1} - 1.
long long traffic_mf_binary(long long n, long long d_mf);

/// (N + n_c) d_TAS.
long long traffic_tas_clustered(long long n, long long n_c, long long d_tas);
/// (N - n_c + n_c N) d_MF.
long long traffic_mf_clustered(long long n, long long n_c, long long d_mf);

/// Binary-tree size above which TAS sends fewer scalars than MF:
/// K1 = (n_p + 1) / ((n_p + n_p (n_p + 1) / 2) m), N* = (3 + sqrt(9 - 4 K1 (3 + K1))) / (2 K1).
struct CriticalSize {
    double k1 = 0.0;
    double n_star = 0.0;
};
CriticalSize critical_n(int n_p, int m);

bool is_binary_tree_size(long long n);
/// Census of the complete binary tree with L + 1 levels.
void binary_tree_census(int L, std::vector<long long>& lambda, std::vector<long long>& lambda_bar);

TrafficPrediction predict_random_tree(Protocol p, std::span<const long long> lambda,
                                      std::span<const long long> lambda_bar, int n_p, int m);
TrafficPrediction predict_binary(Protocol p, long long n, int n_p, int m);
TrafficPrediction predict_clustered(Protocol p, long long n, long long n_c, int n_p, int m);

struct Comparison {
    Protocol cheaper = Protocol::Tas;
    bool tie = false;
    long long tas_scalars = 0;
    long long mf_scalars = 0;
    long long margin = 0;  // |MF - TAS|
};

/// Throws AnalysisError unless the two predictions describe the same
/// topology and parameters, one for each protocol.
Comparison compare(const TrafficPrediction& a, const TrafficPrediction& b);

}  // namespace spsnet
