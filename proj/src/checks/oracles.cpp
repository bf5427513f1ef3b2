#include "eeplab/oracles.hpp"

#include "eeplab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace eeplab::oracle {

double crr_price(double spot, double strike, double rate, double dividend, double vol, double maturity,
                 bool is_call, Exercise style, std::size_t steps) {
    const double dt = maturity / static_cast<double>(steps);
    const double up = std::exp(vol * std::sqrt(dt));
    const double down = 1.0 / up;
    const double p = (std::exp((rate - dividend) * dt) - down) / (up - down);
    const double disc = std::exp(-rate * dt);
    auto intrinsic = [&](double s) { return std::max(is_call ? s - strike : strike - s, 0.0); };

    std::vector<double> v(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j) {
        v[j] = intrinsic(spot * std::pow(up, 2.0 * static_cast<double>(j) - static_cast<double>(steps)));
    }
    for (std::size_t i = steps; i-- > 0;) {
        for (std::size_t j = 0; j <= i; ++j) {
            v[j] = disc * (p * v[j + 1] + (1.0 - p) * v[j]);
            if (style == Exercise::american) {
                const double s = spot * std::pow(up, 2.0 * static_cast<double>(j) - static_cast<double>(i));
                v[j] = std::max(v[j], intrinsic(s));
            }
        }
    }
    return v[0];
}

double black_scholes(double spot, double strike, double rate, double dividend, double vol, double maturity,
                     bool is_call) {
    const double sq = vol * std::sqrt(maturity);
    const double d1 = (std::log(spot / strike) + (rate - dividend + 0.5 * vol * vol) * maturity) / sq;
    const double d2 = d1 - sq;
    auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    const double fwd = spot * std::exp(-dividend * maturity);
    const double pv = strike * std::exp(-rate * maturity);
    return is_call ? fwd * cdf(d1) - pv * cdf(d2) : pv * cdf(-d2) - fwd * cdf(-d1);
}

GaussHermiteRule gauss_hermite(std::size_t points) {
    // Jacobi matrix of the probabilists' Hermite polynomials.
    const auto m = static_cast<Eigen::Index>(points);
    Matrix jac = Matrix::Zero(m, m);
    for (Eigen::Index i = 1; i < m; ++i) {
        jac(i, i - 1) = jac(i - 1, i) = std::sqrt(static_cast<double>(i));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(jac);
    GaussHermiteRule rule;
    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double v0 = eig.eigenvectors()(0, i);
        rule.nodes.push_back(eig.eigenvalues()[i]);
        rule.weights.push_back(v0 * v0);
        total += v0 * v0;
    }
    for (double& w : rule.weights) w /= total;
    return rule;
}

double european_quadrature(const ModelParams& params, const PayoffSpec& payoff, std::span<const double> spot,
                           double tau, std::size_t points_per_axis) {
    const std::size_t n = params.n();
    if (n > 3) throw UnsupportedDimensionError("quadrature oracle supports at most 3 assets");
    const GaussHermiteRule rule = gauss_hermite(points_per_axis);
    const Matrix& sigma = params.sigma();
    const double sq = std::sqrt(tau);
    std::vector<std::size_t> idx(n, 0);
    std::vector<double> x(n);
    double sum = 0.0;
    for (;;) {
        double w = 1.0;
        for (std::size_t i = 0; i < n; ++i) w *= rule.weights[idx[i]];
        for (std::size_t i = 0; i < n; ++i) {
            double sz = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                sz += sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * rule.nodes[idx[j]];
            }
            const auto ii = static_cast<Eigen::Index>(i);
            x[i] = spot[i] * std::exp((params.r() - params.d()[ii] - 0.5 * params.a()(ii, ii)) * tau + sq * sz);
        }
        sum += w * evaluate(payoff, x);
        std::size_t k = 0;
        while (k < n && ++idx[k] == points_per_axis) idx[k++] = 0;
        if (k == n) break;
    }
    return std::exp(-params.r() * tau) * sum;
}

}  // namespace eeplab::oracle
