#include "spsnet/model.hpp"

#include <bit>
#include <cmath>

namespace spsnet {

std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::Uniform: return "uniform";
        case NoiseKind::Laplace: return "laplace";
        case NoiseKind::TwoPoint: return "two-point";
    }
    return "?";
}

std::string to_string(RegressorFamily family) {
    return family == RegressorFamily::Polynomial ? "polynomial" : "seeded-random";
}

NoiseKind parse_noise_kind(const std::string& name) {
    if (name == "gaussian") return NoiseKind::Gaussian;
    if (name == "uniform") return NoiseKind::Uniform;
    if (name == "laplace") return NoiseKind::Laplace;
    if (name == "two-point") return NoiseKind::TwoPoint;
    throw std::invalid_argument("unknown noise kind '" + name + "'");
}

RegressorFamily parse_regressor_family(const std::string& name) {
    if (name == "polynomial" || name == "polynomial-basis") return RegressorFamily::Polynomial;
    if (name == "seeded-random") return RegressorFamily::SeededRandom;
    throw std::invalid_argument("unknown regressor family '" + name + "'");
}

double NoiseSpec::draw(Rng& rng) const {
    if (scale == 0.0) return 0.0;
    switch (kind) {
        case NoiseKind::Gaussian: {
            std::normal_distribution<double> d(0.0, scale);
            return d(rng);
        }
        case NoiseKind::Uniform: return scale * (2.0 * uniform01(rng) - 1.0);
        case NoiseKind::Laplace: {
            // sign * Exp(1/scale): symmetric by construction
            const double e = -std::log1p(-uniform01(rng)) * scale;
            return (rng() & 1U) ? e : -e;
        }
        case NoiseKind::TwoPoint: return (rng() & 1U) ? scale : -scale;
    }
    return 0.0;
}

void FieldConfig::validate() const {
    if (n_p < 1) throw DimensionError("n_p must be >= 1");
    if (n_x < 1) throw DimensionError("n_x must be >= 1");
    if (p_true.size() != n_p)
        throw DimensionError("p_true has length " + std::to_string(p_true.size()) + ", expected n_p = " +
                             std::to_string(n_p));
    if (!(noise.scale >= 0.0) || !std::isfinite(noise.scale)) throw DimensionError("noise scale must be finite and >= 0");
}

namespace {

// Exponent vectors of total degree `degree` over `n_x` variables, in
// lexicographically decreasing order (x1^d first).
void monomials_of_degree(int n_x, int degree, std::vector<int>& current, int var,
                         std::vector<std::vector<int>>& out) {
    if (var == n_x - 1) {
        current[var] = degree;
        out.push_back(current);
        return;
    }
    for (int e = degree; e >= 0; --e) {
        current[var] = e;
        monomials_of_degree(n_x, degree - e, current, var + 1, out);
    }
}

}  // namespace

Vec regressor(std::span<const double> position, const FieldConfig& config) {
    if (static_cast<int>(position.size()) != config.n_x)
        throw DimensionError("position has dimension " + std::to_string(position.size()) + ", expected n_x = " +
                             std::to_string(config.n_x));
    Vec phi(config.n_p);
    if (config.regressor_family == RegressorFamily::SeededRandom) {
        std::uint64_t key = config.regressor_seed;
        for (double x : position) key = mix64(key ^ std::bit_cast<std::uint64_t>(x));
        Rng rng(key);
        for (int i = 0; i < config.n_p; ++i) phi[i] = 2.0 * uniform01(rng) - 1.0;
        return phi;
    }
    int filled = 0;
    std::vector<int> current(static_cast<std::size_t>(config.n_x), 0);
    for (int degree = 0; filled < config.n_p; ++degree) {
        std::vector<std::vector<int>> exps;
        monomials_of_degree(config.n_x, degree, current, 0, exps);
        for (const auto& e : exps) {
            if (filled == config.n_p) break;
            double v = 1.0;
            for (int d = 0; d < config.n_x; ++d)
                for (int k = 0; k < e[static_cast<std::size_t>(d)]; ++k) v *= position[static_cast<std::size_t>(d)];
            phi[filled++] = v;
        }
    }
    return phi;
}

double eval_field(const Vec& phi, const Vec& p) {
    if (phi.size() != p.size())
        throw DimensionError("eval_field: phi has length " + std::to_string(phi.size()) + ", p has length " +
                             std::to_string(p.size()));
    return phi.dot(p);
}

std::vector<RegressorSample> generate_measurements(const std::vector<Vec>& positions, const FieldConfig& config,
                                                   Rng& rng) {
    config.validate();
    if (positions.empty()) throw DimensionError("generate_measurements: no positions");
    std::vector<RegressorSample> out;
    out.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        RegressorSample s;
        s.node_id = static_cast<int>(i);
        s.position = positions[i];
        s.phi = regressor(positions[i], config);
        s.y = eval_field(s.phi, config.p_true) + config.noise.draw(rng);
        out.push_back(std::move(s));
    }
    return out;
}

void redraw_noise(std::vector<RegressorSample>& samples, const FieldConfig& config, Rng& rng) {
    for (auto& s : samples) s.y = eval_field(s.phi, config.p_true) + config.noise.draw(rng);
}

}  // namespace spsnet
