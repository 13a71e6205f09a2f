#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spsnet/rng.hpp"

namespace spsnet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised for shape and range violations across the library.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class NoiseKind { Gaussian, Uniform, Laplace, TwoPoint };
enum class RegressorFamily { Polynomial, SeededRandom };

std::string to_string(NoiseKind kind);
std::string to_string(RegressorFamily family);
NoiseKind parse_noise_kind(const std::string& name);
RegressorFamily parse_regressor_family(const std::string& name);

/// Zero-symmetric noise law. `scale` is the standard deviation for gaussian,
/// the half-width for uniform, the diversity b for laplace and the magnitude
/// for two-point (+-scale with probability 1/2 each).
struct NoiseSpec {
    NoiseKind kind = NoiseKind::Gaussian;
    double scale = 0.1;

    double draw(Rng& rng) const;
};

struct FieldConfig {
    int n_p = 2;
    int n_x = 2;
    RegressorFamily regressor_family = RegressorFamily::Polynomial;
    Vec p_true = Vec::Zero(2);
    NoiseSpec noise{};
    std::uint64_t regressor_seed = 0;

    /// Throws DimensionError when n_p < 1, n_x < 1, length(p_true) != n_p or scale < 0.
    void validate() const;
};

struct RegressorSample {
    int node_id = 0;
    Vec position;
    Vec phi;
    double y = 0.0;
};

/// phi(x). Polynomial family: first n_p monomials of x in graded order,
/// starting with 1 (n_x = 2 gives 1, x1, x2, x1^2, x1 x2, x2^2, ...).
/// Seeded-random family: i.i.d. uniform [-1, 1] entries keyed on (x, seed).
Vec regressor(std::span<const double> position, const FieldConfig& config);
inline Vec regressor(const Vec& position, const FieldConfig& config) {
    return regressor(std::span<const double>(position.data(), static_cast<std::size_t>(position.size())), config);
}

/// phi^T p.
double eval_field(const Vec& phi, const Vec& p);

/// y_i = phi_i^T p_true + w_i with independent noise per node, consumed from
/// `rng` in node order.
std::vector<RegressorSample> generate_measurements(const std::vector<Vec>& positions, const FieldConfig& config,
                                                   Rng& rng);

/// Redraws only the noise of existing samples (regressors kept).
void redraw_noise(std::vector<RegressorSample>& samples, const FieldConfig& config, Rng& rng);

}  // namespace spsnet
