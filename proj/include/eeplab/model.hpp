#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace eeplab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Spectral square root of a symmetric positive definite matrix.
///
/// Throws ValidationError if `a` is not symmetric and
/// NotPositiveDefiniteError if an eigenvalue is not above 1e-12 * trace.
Matrix symmetric_sqrt(const Matrix& a);

/// Multi-asset Black-Scholes market: constant rate, dividend yields and
/// covariance. Immutable once constructed; the constructor validates.
class ModelParams {
public:
    ModelParams(double r, Vector d, Matrix a, double maturity);

    std::size_t n() const noexcept { return static_cast<std::size_t>(d_.size()); }
    double r() const noexcept { return r_; }
    const Vector& d() const noexcept { return d_; }
    const Matrix& a() const noexcept { return a_; }
    const Matrix& sigma() const noexcept { return sigma_; }
    double maturity() const noexcept { return maturity_; }

    // Log-space drift r - d_i - a_ii / 2.
    double log_drift(std::size_t i) const noexcept { return log_drift_[static_cast<Eigen::Index>(i)]; }

    // Same market with assets reordered: new asset k is old asset perm[k].
    ModelParams permuted(std::span<const std::size_t> perm) const;

private:
    double r_;
    Vector d_;
    Matrix a_;
    Matrix sigma_;
    double maturity_;
    Vector log_drift_;
};

/// Valuation point (s, x) with x in the positive orthant.
struct SpotPoint {
    double s = 0.0;
    std::vector<double> x;
};

void validate_spot(const ModelParams& params, const SpotPoint& spot);

/// One exact GBM step of length dt driven by the standard normal draw z.
/// Writes into `out`; `out` may alias `x`.
void exact_step(const ModelParams& params, std::span<const double> x, double dt,
                std::span<const double> z, std::span<double> out);

std::vector<double> exact_step(const ModelParams& params, std::span<const double> x,
                               double dt, std::span<const double> z);

}  // namespace eeplab
