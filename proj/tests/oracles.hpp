#pragma once

// Independent reference implementations used by the unit and acceptance tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "spsnet/sps.hpp"
#include "spsnet/tagset.hpp"

namespace oracle {

/// Batch sums written out term by term: vec_j = sum_i a_ji phi_i y_i, mat_j = sum_i a_ji phi_i phi_i^T.
inline spsnet::AggregateSums batch_sums(const std::vector<spsnet::RegressorSample>& samples,
                                        const spsnet::SignMatrix& signs, const std::vector<double>& c = {}) {
    const int n_p = static_cast<int>(samples[0].phi.size());
    const int m = signs.m();
    spsnet::AggregateSums out(n_p, m);
    for (int j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double w = (c.empty() ? 1.0 : c[i]) * signs(j, static_cast<int>(i));
            const auto& s = samples[i];
            for (int a = 0; a < n_p; ++a) {
                out.vec(j)[a] += w * s.phi[a] * s.y;
                for (int b = 0; b < n_p; ++b) out.mat(j)(a, b) += w * s.phi[a] * s.phi[b];
            }
        }
    }
    return out;
}

inline double max_abs_diff(const spsnet::AggregateSums& a, const spsnet::AggregateSums& b) {
    return (a.data() - b.data()).cwiseAbs().maxCoeff();
}

/// Optimum of: maximize sum_i c_i over c = T^T b (b free), 0 <= c <= 1, by
/// enumerating the vertices of the polytope in a basis of the row space of T.
inline double wrapup_lp_optimum(int n, const std::vector<spsnet::TagSet>& tags) {
    const int r = static_cast<int>(tags.size());
    Eigen::MatrixXd tt = Eigen::MatrixXd::Zero(n, r);
    for (int k = 0; k < r; ++k)
        for (int i : tags[static_cast<std::size_t>(k)].indices()) tt(i, k) = 1.0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(tt);
    const int k = static_cast<int>(qr.rank());
    if (k == 0) return 0.0;
    const Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd basis = q.leftCols(k);  // n x k, c = basis * y

    // constraint rows: basis_i y >= 0  and  basis_i y <= 1
    std::vector<int> pick(static_cast<std::size_t>(k));
    double best = -std::numeric_limits<double>::infinity();
    const int total = 2 * n;
    std::vector<bool> mask(static_cast<std::size_t>(total), false);
    std::fill(mask.begin(), mask.begin() + k, true);
    do {
        Eigen::MatrixXd a(k, k);
        Eigen::VectorXd rhs(k);
        int row = 0;
        for (int idx = 0; idx < total; ++idx) {
            if (!mask[static_cast<std::size_t>(idx)]) continue;
            const int i = idx % n;
            a.row(row) = basis.row(i);
            rhs[row] = idx < n ? 0.0 : 1.0;
            ++row;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (lu.rank() < k) continue;
        const Eigen::VectorXd y = lu.solve(rhs);
        const Eigen::VectorXd c = basis * y;
        if (c.minCoeff() < -1e-9 || c.maxCoeff() > 1.0 + 1e-9) continue;
        best = std::max(best, c.sum());
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return best;
}

/// Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|, exact for ties.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() || j < b.size()) {
        double x;
        if (j >= b.size() || (i < a.size() && a[i] <= b[j])) x = a[i];
        else x = b[j];
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

/// Lexicographic index 0..5 of a permutation of {0, 1, 2}.
inline int permutation_index(const std::vector<int>& order) {
    const int a = order[0], b = order[1];
    return a * 2 + (b - (b > a ? 1 : 0));
}

}  // namespace oracle
