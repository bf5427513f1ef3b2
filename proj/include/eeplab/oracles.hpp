#pragma once

// Reference prices that share no code with the grid or Monte Carlo solvers.

#include "eeplab/model.hpp"
#include "eeplab/payoff.hpp"

#include <cstddef>
#include <vector>

namespace eeplab::oracle {

enum class Exercise { european, american };

/// Cox-Ross-Rubinstein tree for a single asset with continuous dividend yield.
double crr_price(double spot, double strike, double rate, double dividend, double vol, double maturity,
                 bool is_call, Exercise style, std::size_t steps);

double black_scholes(double spot, double strike, double rate, double dividend, double vol, double maturity,
                     bool is_call);

struct GaussHermiteRule {
    std::vector<double> nodes;    // for weight exp(-z^2 / 2)
    std::vector<double> weights;  // normalised to sum 1
};

/// Golub-Welsch rule for a standard normal expectation.
GaussHermiteRule gauss_hermite(std::size_t points);

/// E exp(-r tau) psi(X_T) by a tensor Gauss-Hermite rule on the driving
/// normals (n <= 3).
double european_quadrature(const ModelParams& params, const PayoffSpec& payoff, std::span<const double> spot,
                           double tau, std::size_t points_per_axis);

}  // namespace eeplab::oracle
