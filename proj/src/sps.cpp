#include "spsnet/sps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spsnet {

void SpsConfig::validate() const {
    if (m < 2) throw DimensionError("m must be >= 2 (got " + std::to_string(m) + ")");
    if (q < 1 || q >= m)
        throw DimensionError("q must satisfy 1 <= q < m (got q = " + std::to_string(q) + ", m = " + std::to_string(m) +
                             ")");
}

SignMatrix::SignMatrix(int m, int n) : m_(m), n_(n), entries_(static_cast<std::size_t>(m) * n, 1) {
    if (m < 1 || n < 0) throw DimensionError("SignMatrix: bad shape");
}

void SignMatrix::set(int j, int i, int sign) {
    if (sign != 1 && sign != -1) throw DimensionError("SignMatrix entries must be +-1");
    if (j == 0 && sign != 1) throw DimensionError("row 0 of a SignMatrix is all ones");
    entries_[static_cast<std::size_t>(j) * n_ + i] = static_cast<std::int8_t>(sign);
}

std::vector<int> SignMatrix::column(int i) const {
    std::vector<int> col(static_cast<std::size_t>(m_));
    for (int j = 0; j < m_; ++j) col[static_cast<std::size_t>(j)] = (*this)(j, i);
    return col;
}

SignMatrix draw_sign_matrix(int m, int n, std::uint64_t sign_seed) {
    if (m < 2) throw DimensionError("draw_sign_matrix: m must be >= 2");
    if (n < 1) throw DimensionError("draw_sign_matrix: N must be >= 1");
    SignMatrix a(m, n);
    Rng rng = make_rng(sign_seed, {tag(Stream::Signs)});
    for (int j = 1; j < m; ++j) {
        // 64 signs per engine draw
        std::uint64_t bits = 0;
        int left = 0;
        for (int i = 0; i < n; ++i) {
            if (left == 0) {
                bits = rng();
                left = 64;
            }
            a.set(j, i, (bits & 1U) ? 1 : -1);
            bits >>= 1;
            --left;
        }
    }
    return a;
}

// ---------------------------------------------------------------------------
// AggregateSums

AggregateSums::AggregateSums(int n_p, int m) : n_p_(n_p), m_(m) {
    if (n_p < 1 || m < 1) throw DimensionError("AggregateSums: n_p and m must be positive");
    data_ = Vec::Zero(static_cast<Eigen::Index>(m) * (n_p + n_p * n_p));
}

Eigen::Map<Vec> AggregateSums::vec(int j) {
    return {data_.data() + static_cast<Eigen::Index>(j) * (n_p_ + n_p_ * n_p_), n_p_};
}
Eigen::Map<const Vec> AggregateSums::vec(int j) const {
    return {data_.data() + static_cast<Eigen::Index>(j) * (n_p_ + n_p_ * n_p_), n_p_};
}
Eigen::Map<Mat> AggregateSums::mat(int j) {
    return {data_.data() + static_cast<Eigen::Index>(j) * (n_p_ + n_p_ * n_p_) + n_p_, n_p_, n_p_};
}
Eigen::Map<const Mat> AggregateSums::mat(int j) const {
    return {data_.data() + static_cast<Eigen::Index>(j) * (n_p_ + n_p_ * n_p_) + n_p_, n_p_, n_p_};
}

long long AggregateSums::payload_scalar_count() const {
    return static_cast<long long>(m_) * (n_p_ + n_p_ * (n_p_ + 1) / 2);
}

void AggregateSums::check_same_shape(const AggregateSums& other) const {
    if (n_p_ != other.n_p_ || m_ != other.m_)
        throw DimensionError("AggregateSums shape mismatch: (n_p=" + std::to_string(n_p_) + ", m=" + std::to_string(m_) +
                             ") vs (n_p=" + std::to_string(other.n_p_) + ", m=" + std::to_string(other.m_) + ")");
}

AggregateSums& AggregateSums::operator+=(const AggregateSums& other) {
    check_same_shape(other);
    data_ += other.data_;
    return *this;
}

AggregateSums& AggregateSums::operator-=(const AggregateSums& other) {
    check_same_shape(other);
    data_ -= other.data_;
    return *this;
}

AggregateSums& AggregateSums::operator*=(double s) {
    data_ *= s;
    return *this;
}

double AggregateSums::max_asymmetry() const {
    double worst = 0.0;
    for (int j = 0; j < m_; ++j) worst = std::max(worst, (mat(j) - mat(j).transpose()).cwiseAbs().maxCoeff());
    return worst;
}

// ---------------------------------------------------------------------------

void WrapUpWeights::validate() const {
    for (std::size_t i = 0; i < c.size(); ++i)
        if (!(c[i] >= 0.0 && c[i] <= 1.0))
            throw DimensionError("wrap-up weight c[" + std::to_string(i) + "] = " + std::to_string(c[i]) +
                                 " outside [0, 1]");
}

WrapUpWeights WrapUpWeights::one_hot(int n, int k) {
    WrapUpWeights w{std::vector<double>(static_cast<std::size_t>(n), 0.0)};
    w.c.at(static_cast<std::size_t>(k)) = 1.0;
    return w;
}

std::vector<double> RegionResult::cell_center(long long index) const {
    const std::size_t dims = grid_shape.size();
    std::vector<double> center(dims);
    for (std::size_t d = dims; d-- > 0;) {
        const long long k = index % grid_shape[d];
        index /= grid_shape[d];
        const double w = box[d].width() / grid_shape[d];
        center[d] = box[d].lo + (static_cast<double>(k) + 0.5) * w;
    }
    return center;
}

// ---------------------------------------------------------------------------

AggregateSums local_aggregate(const RegressorSample& sample, std::span<const int> signs) {
    const int n_p = static_cast<int>(sample.phi.size());
    const int m = static_cast<int>(signs.size());
    if (m < 1) throw DimensionError("local_aggregate: empty sign column");
    if (signs[0] != 1) throw DimensionError("local_aggregate: a_0 must be +1");
    AggregateSums agg(n_p, m);
    const Vec py = sample.phi * sample.y;
    const Mat pp = sample.phi * sample.phi.transpose();
    for (int j = 0; j < m; ++j) {
        const double a = signs[static_cast<std::size_t>(j)];
        agg.vec(j) = a * py;
        agg.mat(j) = a * pp;
    }
    return agg;
}

AggregateSums local_aggregate(const RegressorSample& sample, const SignMatrix& signs, int node) {
    const auto col = signs.column(node);
    return local_aggregate(sample, col);
}

AggregateSums sum_aggregates(const AggregateSums& a, const AggregateSums& b) { return a + b; }

AggregateSums full_aggregate(const std::vector<RegressorSample>& samples, const SignMatrix& signs, int m) {
    if (samples.empty()) throw DimensionError("full_aggregate: no samples");
    if (signs.m() != m || signs.n() != static_cast<int>(samples.size()))
        throw DimensionError("full_aggregate: sign matrix shape does not match (m, N)");
    AggregateSums total(static_cast<int>(samples[0].phi.size()), m);
    for (std::size_t i = 0; i < samples.size(); ++i) total += local_aggregate(samples[i], signs, static_cast<int>(i));
    return total;
}

Vec z_values(const AggregateSums& agg, const Vec& p) {
    if (p.size() != agg.n_p())
        throw DimensionError("z_values: p has length " + std::to_string(p.size()) + ", expected " +
                             std::to_string(agg.n_p()));
    Vec z(agg.m());
    for (int j = 0; j < agg.m(); ++j) z[j] = (agg.vec(j) - agg.mat(j) * p).squaredNorm();
    return z;
}

std::vector<int> rank_order(std::span<const double> z, TieRng& tie_rng) {
    const std::size_t m = z.size();
    std::vector<double> key(m);
    for (auto& k : key) k = uniform01(tie_rng);
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto ua = static_cast<std::size_t>(a);
        const auto ub = static_cast<std::size_t>(b);
        if (z[ua] != z[ub]) return z[ua] < z[ub];
        return key[ua] < key[ub];
    });
    return order;
}

bool membership(std::span<const double> z, int q, TieRng& tie_rng, double rel_tie_tol) {
    const int m = static_cast<int>(z.size());
    if (m < 2) throw DimensionError("membership: need at least 2 values");
    if (q < 1 || q >= m) throw DimensionError("membership: q out of range [1, m-1]");
    double scale = 0.0;
    for (double v : z) scale = std::max(scale, std::abs(v));
    const double tol = rel_tie_tol * scale;
    const double z0 = z[0];
    int above = 0;
    int tied = 0;
    for (int j = 1; j < m; ++j) {
        const double d = z[static_cast<std::size_t>(j)] - z0;
        if (d > tol)
            ++above;
        else if (d >= -tol)
            ++tied;
    }
    if (above >= q) return true;
    if (tied == 0 || above + tied < q) return false;
    // Z_0 and its tied partners are ordered by fresh uniform keys.
    const double key0 = uniform01(tie_rng);
    for (int t = 0; t < tied; ++t)
        if (uniform01(tie_rng) > key0) ++above;
    return above >= q;
}

LsEstimate ls_estimate(const AggregateSums& agg) {
    const Mat a = agg.mat(0);
    Eigen::JacobiSVD<Mat> svd(a);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(cond <= 1e12)) throw SingularMatrixError("ls_estimate: mat_0 is singular (condition " + std::to_string(cond) + ")", cond);
    LsEstimate out;
    out.p_hat = a.ldlt().solve(Vec(agg.vec(0)));
    // one step of iterative refinement
    out.p_hat += a.ldlt().solve(Vec(agg.vec(0) - a * out.p_hat));
    out.condition = cond;
    return out;
}

RegionResult evaluate_region(const AggregateSums& agg, const Box& box, std::span<const int> grid_per_dim, int q,
                             std::uint64_t tie_seed, const RegionOptions& options) {
    const int n_p = agg.n_p();
    if (n_p > 3 && !options.allow_high_dim)
        throw DimensionError("evaluate_region: n_p = " + std::to_string(n_p) +
                             " > 3 makes the dense grid too large; set allow_high_dim to override");
    if (static_cast<int>(box.size()) != n_p || static_cast<int>(grid_per_dim.size()) != n_p)
        throw DimensionError("evaluate_region: box and grid must have n_p dimensions");
    if (q < 1 || q >= agg.m()) throw DimensionError("evaluate_region: q out of range [1, m-1]");
    for (int d = 0; d < n_p; ++d) {
        if (!(box[static_cast<std::size_t>(d)].hi > box[static_cast<std::size_t>(d)].lo))
            throw DimensionError("evaluate_region: empty box in dimension " + std::to_string(d));
        if (grid_per_dim[static_cast<std::size_t>(d)] < 1)
            throw DimensionError("evaluate_region: grid_per_dim must be >= 1");
    }

    RegionResult r;
    r.grid_shape.assign(grid_per_dim.begin(), grid_per_dim.end());
    r.box = box;
    r.m = agg.m();
    r.q = q;
    r.tie_seed = tie_seed;
    long long cells = 1;
    r.cell_volume = 1.0;
    std::vector<double> width(static_cast<std::size_t>(n_p));
    for (int d = 0; d < n_p; ++d) {
        const auto ud = static_cast<std::size_t>(d);
        cells *= grid_per_dim[ud];
        width[ud] = box[ud].width() / grid_per_dim[ud];
        r.cell_volume *= width[ud];
    }
    r.member_mask.assign(static_cast<std::size_t>(cells), 0);

    const int m = agg.m();
    std::vector<Vec> vecs;
    std::vector<Mat> mats;
    for (int j = 0; j < m; ++j) {
        vecs.emplace_back(agg.vec(j));
        mats.emplace_back(agg.mat(j));
    }

    std::vector<long long> lo_idx(static_cast<std::size_t>(n_p), std::numeric_limits<long long>::max());
    std::vector<long long> hi_idx(static_cast<std::size_t>(n_p), -1);
    std::vector<long long> idx(static_cast<std::size_t>(n_p), 0);
    std::vector<double> z(static_cast<std::size_t>(m));
    Vec p(n_p);
    Vec resid(n_p);
    for (long long cell = 0; cell < cells; ++cell) {
        for (int d = 0; d < n_p; ++d) {
            const auto ud = static_cast<std::size_t>(d);
            p[d] = box[ud].lo + (static_cast<double>(idx[ud]) + 0.5) * width[ud];
        }
        for (int j = 0; j < m; ++j) {
            resid.noalias() = vecs[static_cast<std::size_t>(j)] - mats[static_cast<std::size_t>(j)] * p;
            z[static_cast<std::size_t>(j)] = resid.squaredNorm();
        }
        TieRng tie(derive_seed(tie_seed, {static_cast<std::uint64_t>(cell)}));
        if (membership(z, q, tie, options.rel_tie_tol)) {
            r.member_mask[static_cast<std::size_t>(cell)] = 1;
            ++r.member_count;
            for (int d = 0; d < n_p; ++d) {
                const auto ud = static_cast<std::size_t>(d);
                lo_idx[ud] = std::min(lo_idx[ud], idx[ud]);
                hi_idx[ud] = std::max(hi_idx[ud], idx[ud]);
            }
        }
        // advance the multi-index, last dimension fastest
        for (int d = n_p - 1; d >= 0; --d) {
            const auto ud = static_cast<std::size_t>(d);
            if (++idx[ud] < grid_per_dim[ud]) break;
            idx[ud] = 0;
        }
    }
    r.volume = static_cast<double>(r.member_count) * r.cell_volume;
    if (r.member_count > 0) {
        Box bb(static_cast<std::size_t>(n_p));
        for (int d = 0; d < n_p; ++d) {
            const auto ud = static_cast<std::size_t>(d);
            bb[ud] = {box[ud].lo + static_cast<double>(lo_idx[ud]) * width[ud],
                      box[ud].lo + static_cast<double>(hi_idx[ud] + 1) * width[ud]};
        }
        r.bounding_box = std::move(bb);
    }
    return r;
}

AggregateSums weighted_aggregate(const std::vector<RegressorSample>& samples, const SignMatrix& signs,
                                 std::span<const double> weights) {
    if (samples.empty()) throw DimensionError("weighted_aggregate: no samples");
    if (weights.size() != samples.size() || signs.n() != static_cast<int>(samples.size()))
        throw DimensionError("weighted_aggregate: weights/signs length must equal N");
    const int n_p = static_cast<int>(samples[0].phi.size());
    const int m = signs.m();
    AggregateSums total(n_p, m);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double c = weights[i];
        if (c == 0.0) continue;
        const Vec py = c * samples[i].phi * samples[i].y;
        const Mat pp = c * samples[i].phi * samples[i].phi.transpose();
        for (int j = 0; j < m; ++j) {
            const double a = signs(j, static_cast<int>(i));
            total.vec(j) += a * py;
            total.mat(j) += a * pp;
        }
    }
    return total;
}

AggregateSums truncated_aggregate(const std::vector<RegressorSample>& samples, const SignMatrix& signs,
                                  const WrapUpWeights& weights) {
    weights.validate();
    return weighted_aggregate(samples, signs, weights.c);
}

Box default_box(const Vec& p_center, double dispersion) {
    Box box(static_cast<std::size_t>(p_center.size()));
    const double margin = 5.0 * std::abs(dispersion);
    for (Eigen::Index d = 0; d < p_center.size(); ++d) {
        auto& iv = box[static_cast<std::size_t>(d)];
        iv.lo = std::min(-1.0, p_center[d] - margin);
        iv.hi = std::max(1.0, p_center[d] + margin);
    }
    return box;
}

}  // namespace spsnet
