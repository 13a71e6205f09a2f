#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spsnet/model.hpp"
#include "spsnet/rng.hpp"

namespace spsnet {

struct SpsConfig {
    int m = 10;
    int q = 1;
    std::uint64_t sign_seed = 0;

    void validate() const;
    double confidence() const { return 1.0 - static_cast<double>(q) / m; }
};

/// m x N matrix over {-1, +1}; row 0 is all ones (the unperturbed sum).
class SignMatrix {
public:
    SignMatrix(int m, int n);

    int m() const { return m_; }
    int n() const { return n_; }
    int operator()(int j, int i) const { return entries_[static_cast<std::size_t>(j) * n_ + i]; }
    void set(int j, int i, int sign);
    /// Column i (the signs a_{0,i} .. a_{m-1,i} of one node).
    std::vector<int> column(int i) const;

private:
    int m_;
    int n_;
    std::vector<std::int8_t> entries_;
};

SignMatrix draw_sign_matrix(int m, int n, std::uint64_t sign_seed);

/// The m pairs (sum_i c_i a_ji phi_i y_i, sum_i c_i a_ji phi_i phi_i^T).
///
/// Stored as one flat vector so that linear combinations (distillation,
/// LP wrap-up, consensus mixing) are plain vector arithmetic. Block j holds
/// vec_j followed by mat_j in column-major order.
class AggregateSums {
public:
    AggregateSums() = default;
    AggregateSums(int n_p, int m);

    static AggregateSums zero(int n_p, int m) { return AggregateSums(n_p, m); }

    int n_p() const { return n_p_; }
    int m() const { return m_; }
    bool empty() const { return m_ == 0; }

    Eigen::Map<Vec> vec(int j);
    Eigen::Map<const Vec> vec(int j) const;
    Eigen::Map<Mat> mat(int j);
    Eigen::Map<const Mat> mat(int j) const;

    Vec& data() { return data_; }
    const Vec& data() const { return data_; }

    /// Scalars needed on the wire, exploiting symmetry of mat_j: m (n_p + n_p (n_p + 1) / 2).
    long long payload_scalar_count() const;

    AggregateSums& operator+=(const AggregateSums& other);
    AggregateSums& operator-=(const AggregateSums& other);
    AggregateSums& operator*=(double s);
    friend AggregateSums operator+(AggregateSums a, const AggregateSums& b) { return a += b; }
    friend AggregateSums operator-(AggregateSums a, const AggregateSums& b) { return a -= b; }
    friend AggregateSums operator*(double s, AggregateSums a) { return a *= s; }

    /// Max over j of the asymmetry of mat_j.
    double max_asymmetry() const;

private:
    void check_same_shape(const AggregateSums& other) const;

    int n_p_ = 0;
    int m_ = 0;
    Vec data_;
};

/// Per-node contribution weights c_i in [0, 1].
struct WrapUpWeights {
    std::vector<double> c;

    void validate() const;
    static WrapUpWeights ones(int n) { return {std::vector<double>(static_cast<std::size_t>(n), 1.0)}; }
    static WrapUpWeights one_hot(int n, int k);
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

using Box = std::vector<Interval>;

struct RegionResult {
    std::vector<int> grid_shape;
    Box box;
    std::vector<std::uint8_t> member_mask;  // row-major, last dimension fastest
    long long member_count = 0;
    double cell_volume = 0.0;
    double volume = 0.0;
    std::optional<Box> bounding_box;  // empty when no cell is a member
    int m = 0;
    int q = 0;
    std::uint64_t tie_seed = 0;

    std::vector<double> cell_center(long long index) const;
    long long cell_count() const { return static_cast<long long>(member_mask.size()); }
    double covered_fraction() const { return cell_count() ? static_cast<double>(member_count) / cell_count() : 0.0; }
};

/// Local (single-node) contribution with sign column a_{.,i}; a_{0,i} must be +1.
AggregateSums local_aggregate(const RegressorSample& sample, std::span<const int> signs);
AggregateSums local_aggregate(const RegressorSample& sample, const SignMatrix& signs, int node);

AggregateSums sum_aggregates(const AggregateSums& a, const AggregateSums& b);

/// Full-network aggregate (every c_i = 1), computed node by node.
AggregateSums full_aggregate(const std::vector<RegressorSample>& samples, const SignMatrix& signs, int m);

/// Z_j(p) = || vec_j - mat_j p ||^2 for j = 0..m-1.
Vec z_values(const AggregateSums& agg, const Vec& p);

/// Rank of the m values under the (value, uniform key) order; returns the
/// permutation i_0 .. i_{m-1} with Z_{i_0} <= ... <= Z_{i_{m-1}} where tied
/// groups are ordered by independent uniform keys.
std::vector<int> rank_order(std::span<const double> z, TieRng& tie_rng);

/// True iff Z_0 is not among the q largest after the uniform tie-break, i.e.
/// at least q entries rank strictly above Z_0. Values within `rel_tie_tol`
/// of Z_0 (relative to max |Z|) are treated as tied.
bool membership(std::span<const double> z, int q, TieRng& tie_rng, double rel_tie_tol = 1e-12);
inline bool membership(const Vec& z, int q, TieRng& tie_rng, double rel_tie_tol = 1e-12) {
    return membership(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())), q, tie_rng, rel_tie_tol);
}

class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition) {}
    double condition() const { return condition_; }

private:
    double condition_;
};

struct LsEstimate {
    Vec p_hat;
    double condition = 0.0;
};

/// Solves mat_0 p = vec_0. Throws SingularMatrixError when cond(mat_0) > 1e12.
LsEstimate ls_estimate(const AggregateSums& agg);

struct RegionOptions {
    bool allow_high_dim = false;  // lift the n_p <= 3 guard
    double rel_tie_tol = 1e-12;
};

/// Grid outer approximation of the SPS region: membership is tested at each
/// cell center with a tie stream derived from (tie_seed, cell index).
RegionResult evaluate_region(const AggregateSums& agg, const Box& box, std::span<const int> grid_per_dim, int q,
                             std::uint64_t tie_seed, const RegionOptions& options = {});

/// sum_i c_i a_ji phi_i y_i etc. with c in [0,1]^N.
AggregateSums truncated_aggregate(const std::vector<RegressorSample>& samples, const SignMatrix& signs,
                                  const WrapUpWeights& weights);

/// Same as above, without the [0,1] range check (used for consensus
/// effective weights, which are arbitrary nonnegative reals).
AggregateSums weighted_aggregate(const std::vector<RegressorSample>& samples, const SignMatrix& signs,
                                 std::span<const double> weights);

/// Default search box: [-1, 1]^n_p, widened when needed so that it holds
/// p_center with a margin of 5 * dispersion in every coordinate.
Box default_box(const Vec& p_center, double dispersion);

}  // namespace spsnet
