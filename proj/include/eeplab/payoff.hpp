#pragma once

#include "eeplab/model.hpp"

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace eeplab {

// (sum_i w_i x_i - K)^+
struct IndexCall {
    std::vector<double> w;
    double strike;
};

// (K - sum_i w_i x_i)^+
struct IndexPut {
    std::vector<double> w;
    double strike;
};

// (max_i x_i - K)^+
struct MaxCall {
    double strike;
};

// (K - min_i x_i)^+
struct MinPut {
    double strike;
};

// (max_i (x_i - K_i))^+
struct MultiStrike {
    std::vector<double> strikes;
};

// ((x_1 ... x_n)^gamma - K)^+ on the positive orthant
struct PowerProduct {
    double gamma;
    double strike;
};

using PayoffSpec = std::variant<IndexCall, IndexPut, MaxCall, MinPut, MultiStrike, PowerProduct>;

std::string_view family_name(const PayoffSpec& spec);

/// Checks parameter ranges and, when n > 0, that vector parameters have length n.
void validate(const PayoffSpec& spec, std::size_t n = 0);

/// Characteristic price scale: the strike, or the largest strike for MultiStrike.
double strike_scale(const PayoffSpec& spec);

/// Payoff psi(x).
double evaluate(const PayoffSpec& spec, std::span<const double> x);

/// Early-exercise premium density Psi^-(x): the negative part of
/// -r psi + L_BS psi, in closed form for each family. Meaningful on
/// {psi > 0}; the same formula is returned elsewhere.
///
/// Argmax/argmin ties are resolved towards the lowest asset index.
double premium_density(const PayoffSpec& spec, const ModelParams& params,
                       std::span<const double> x);

/// Euclidean distance from x to the nearest surface on which psi fails to be
/// smooth (the psi = 0 boundary, argmax/argmin switches, f = K).
double kink_distance(const PayoffSpec& spec, std::span<const double> x);

/// Finite-difference estimate of Psi^-: central differences of psi with
/// relative bump `h` (asset i is bumped by h * x_i), assembled into
/// -r psi + sum (r - d_i) x_i psi_i + 1/2 sum a_ij x_i x_j psi_ij.
///
/// Throws OracleInvalidError unless kink_distance(x) > 10 * h * max_i x_i.
double density_oracle(const PayoffSpec& spec, const ModelParams& params,
                      std::span<const double> x, double h = 1e-4);

/// Coefficient c in Psi^- = (c f(x) - r K)^+ for the power-product family,
/// derived with the Ito 1/2 factors:
/// c = r - gamma sum_i (r - d_i - a_ii / 2) - gamma^2 / 2 sum_ij a_ij.
double power_product_coefficient(const PowerProduct& p, const ModelParams& params);

/// The same coefficient written without the 1/2 factors,
/// r - gamma sum_i (r - d_i - a_ii) - gamma^2 sum_ij a_ij. Reported for
/// comparison only; it does not match -r psi + L_BS psi.
double power_product_coefficient_unhalved(const PowerProduct& p, const ModelParams& params);

/// True when psi is invariant under every permutation of the assets.
bool exchangeable(const PayoffSpec& spec);

/// Payoff with assets reordered consistently with ModelParams::permuted.
PayoffSpec permuted(const PayoffSpec& spec, std::span<const std::size_t> perm);

}  // namespace eeplab
