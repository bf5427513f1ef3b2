#include "eeplab/model.hpp"

#include "eeplab/errors.hpp"

#include <cmath>
#include <string>

namespace eeplab {

Matrix symmetric_sqrt(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw ValidationError("matrix must be square and non-empty");
    }
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw ValidationError("matrix is not symmetric");
    }
    const Matrix sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw ValidationError("eigen-decomposition failed");
    }
    const double floor = 1e-12 * sym.trace();
    const Vector& lambda = eig.eigenvalues();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (!(lambda[i] > floor) || !(lambda[i] > 0.0)) {
            throw NotPositiveDefiniteError("matrix is not positive definite (eigenvalue " +
                                           std::to_string(lambda[i]) + ")");
        }
    }
    const Matrix& q = eig.eigenvectors();
    Matrix root = q * lambda.cwiseSqrt().asDiagonal() * q.transpose();
    return 0.5 * (root + root.transpose());
}

ModelParams::ModelParams(double r, Vector d, Matrix a, double maturity)
    : r_(r), d_(std::move(d)), a_(std::move(a)), maturity_(maturity) {
    if (!std::isfinite(r_) || r_ < 0.0) {
        throw ValidationError("rate must be finite and >= 0", "model.r");
    }
    if (!std::isfinite(maturity_) || maturity_ <= 0.0) {
        throw ValidationError("maturity must be finite and > 0", "model.T");
    }
    if (a_.rows() == 0 || a_.rows() != a_.cols()) {
        throw ValidationError("covariance must be a non-empty n x n matrix", "model.a");
    }
    if (d_.size() != a_.rows()) {
        throw ValidationError("length of d must equal the number of assets n (rows of a)", "model.d");
    }
    for (Eigen::Index i = 0; i < d_.size(); ++i) {
        if (!std::isfinite(d_[i]) || d_[i] < 0.0) {
            throw ValidationError("dividend yields must be finite and >= 0", "model.d");
        }
    }
    if (!a_.allFinite()) {
        throw ValidationError("covariance has non-finite entries", "model.a");
    }
    try {
        sigma_ = symmetric_sqrt(a_);
    } catch (const NotPositiveDefiniteError& e) {
        throw NotPositiveDefiniteError(e.what(), "model.a");
    } catch (const ValidationError& e) {
        throw ValidationError(e.what(), "model.a");
    }
    log_drift_.resize(d_.size());
    for (Eigen::Index i = 0; i < d_.size(); ++i) {
        log_drift_[i] = r_ - d_[i] - 0.5 * a_(i, i);
    }
}

ModelParams ModelParams::permuted(std::span<const std::size_t> perm) const {
    const auto n = static_cast<Eigen::Index>(this->n());
    if (static_cast<Eigen::Index>(perm.size()) != n) {
        throw ValidationError("permutation length mismatch");
    }
    Vector d(n);
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto pi = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
        d[i] = d_[pi];
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = a_(pi, static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)]));
        }
    }
    return ModelParams(r_, std::move(d), std::move(a), maturity_);
}

void validate_spot(const ModelParams& params, const SpotPoint& spot) {
    if (spot.x.size() != params.n()) {
        throw ValidationError("spot dimension does not match model", "spot.x");
    }
    for (double xi : spot.x) {
        if (!std::isfinite(xi) || xi <= 0.0) {
            throw ValidationError("spot prices must be finite and > 0", "spot.x");
        }
    }
    if (!std::isfinite(spot.s) || spot.s < 0.0 || spot.s >= params.maturity()) {
        throw ValidationError("valuation time must lie in [0, T)", "spot.s");
    }
}

void exact_step(const ModelParams& params, std::span<const double> x, double dt,
                std::span<const double> z, std::span<double> out) {
    const std::size_t n = params.n();
    if (x.size() != n || z.size() != n || out.size() != n) {
        throw ValidationError("exact_step: dimension mismatch");
    }
    if (!(dt >= 0.0)) {
        throw ValidationError("exact_step: dt must be >= 0");
    }
    for (double xi : x) {
        if (!(xi > 0.0)) {
            throw ValidationError("exact_step: spot must be strictly positive");
        }
    }
    const double sqdt = std::sqrt(dt);
    const Matrix& sigma = params.sigma();
    // Compute all shocks first so that out may alias x.
    double shocks[16];
    std::vector<double> heap;
    double* shock = shocks;
    if (n > 16) {
        heap.resize(n);
        shock = heap.data();
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sz = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            sz += sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * z[j];
        }
        shock[i] = params.log_drift(i) * dt + sqdt * sz;
    }
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x[i] * std::exp(shock[i]);
    }
}

std::vector<double> exact_step(const ModelParams& params, std::span<const double> x,
                               double dt, std::span<const double> z) {
    std::vector<double> out(x.size());
    exact_step(params, x, dt, z, out);
    return out;
}

}  // namespace eeplab
