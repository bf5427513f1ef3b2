#include "eeplab/payoff.hpp"

#include "eeplab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eeplab {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

std::size_t argmin(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] < v[best]) best = i;
    }
    return best;
}

// Gap between the largest and second largest entries.
double top_gap(std::span<const double> v) {
    if (v.size() < 2) return std::numeric_limits<double>::infinity();
    double first = -std::numeric_limits<double>::infinity();
    double second = first;
    for (double e : v) {
        if (e > first) {
            second = first;
            first = e;
        } else if (e > second) {
            second = e;
        }
    }
    return first - second;
}

double weighted_sum(std::span<const double> w, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
    return s;
}

double product_power(double gamma, std::span<const double> x) {
    // Sum of logs keeps large baskets from overflowing the product.
    double log_sum = 0.0;
    for (double xi : x) log_sum += std::log(std::abs(xi));
    return std::exp(gamma * log_sum);
}

void check_vector(const std::vector<double>& v, std::size_t n, const char* field) {
    if (v.empty()) throw ValidationError("must be non-empty", field);
    if (n != 0 && v.size() != n) throw ValidationError("length must equal asset count", field);
    for (double e : v) {
        if (!std::isfinite(e)) throw ValidationError("entries must be finite", field);
    }
}

void check_strike(double k, const char* field) {
    if (!std::isfinite(k) || k <= 0.0) throw ValidationError("strike must be > 0", field);
}

}  // namespace

std::string_view family_name(const PayoffSpec& spec) {
    return std::visit(overloaded{
                          [](const IndexCall&) { return std::string_view("index_call"); },
                          [](const IndexPut&) { return std::string_view("index_put"); },
                          [](const MaxCall&) { return std::string_view("max_call"); },
                          [](const MinPut&) { return std::string_view("min_put"); },
                          [](const MultiStrike&) { return std::string_view("multi_strike"); },
                          [](const PowerProduct&) { return std::string_view("power_product"); },
                      },
                      spec);
}

void validate(const PayoffSpec& spec, std::size_t n) {
    std::visit(overloaded{
                   [n](const IndexCall& p) {
                       check_vector(p.w, n, "payoff.w");
                       check_strike(p.strike, "payoff.K");
                   },
                   [n](const IndexPut& p) {
                       check_vector(p.w, n, "payoff.w");
                       check_strike(p.strike, "payoff.K");
                   },
                   [](const MaxCall& p) { check_strike(p.strike, "payoff.K"); },
                   [](const MinPut& p) { check_strike(p.strike, "payoff.K"); },
                   [n](const MultiStrike& p) {
                       check_vector(p.strikes, n, "payoff.K");
                       for (double k : p.strikes) check_strike(k, "payoff.K");
                   },
                   [](const PowerProduct& p) {
                       if (!std::isfinite(p.gamma) || p.gamma <= 0.0) {
                           throw ValidationError("gamma must be > 0", "payoff.gamma");
                       }
                       check_strike(p.strike, "payoff.K");
                   },
               },
               spec);
}

double strike_scale(const PayoffSpec& spec) {
    return std::visit(overloaded{
                          [](const MultiStrike& p) {
                              return *std::max_element(p.strikes.begin(), p.strikes.end());
                          },
                          [](const auto& p) { return p.strike; },
                      },
                      spec);
}

double evaluate(const PayoffSpec& spec, std::span<const double> x) {
    return std::visit(
        overloaded{
            [x](const IndexCall& p) { return std::max(weighted_sum(p.w, x) - p.strike, 0.0); },
            [x](const IndexPut& p) { return std::max(p.strike - weighted_sum(p.w, x), 0.0); },
            [x](const MaxCall& p) { return std::max(x[argmax(x)] - p.strike, 0.0); },
            [x](const MinPut& p) { return std::max(p.strike - x[argmin(x)], 0.0); },
            [x](const MultiStrike& p) {
                double best = x[0] - p.strikes[0];
                for (std::size_t i = 1; i < x.size(); ++i) best = std::max(best, x[i] - p.strikes[i]);
                return std::max(best, 0.0);
            },
            [x](const PowerProduct& p) { return std::max(product_power(p.gamma, x) - p.strike, 0.0); },
        },
        spec);
}

double power_product_coefficient(const PowerProduct& p, const ModelParams& params) {
    double drift = 0.0;
    for (std::size_t i = 0; i < params.n(); ++i) drift += params.log_drift(i);
    return params.r() - p.gamma * drift - 0.5 * p.gamma * p.gamma * params.a().sum();
}

double power_product_coefficient_unhalved(const PowerProduct& p, const ModelParams& params) {
    double drift = 0.0;
    for (std::size_t i = 0; i < params.n(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        drift += params.r() - params.d()[ii] - params.a()(ii, ii);
    }
    return params.r() - p.gamma * drift - p.gamma * p.gamma * params.a().sum();
}

double premium_density(const PayoffSpec& spec, const ModelParams& params,
                       std::span<const double> x) {
    const double r = params.r();
    const Vector& d = params.d();
    auto di = [&d](std::size_t i) { return d[static_cast<Eigen::Index>(i)]; };
    return std::visit(
        overloaded{
            [&](const IndexCall& p) {
                double s = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) s += p.w[i] * di(i) * x[i];
                return std::max(s - r * p.strike, 0.0);
            },
            [&](const IndexPut& p) {
                double s = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) s += p.w[i] * di(i) * x[i];
                return std::max(r * p.strike - s, 0.0);
            },
            [&](const MaxCall& p) {
                const std::size_t i = argmax(x);
                return std::max(di(i) * x[i] - r * p.strike, 0.0);
            },
            [&](const MinPut& p) {
                const std::size_t i = argmin(x);
                return std::max(r * p.strike - di(i) * x[i], 0.0);
            },
            [&](const MultiStrike& p) {
                std::size_t best = 0;
                for (std::size_t i = 1; i < x.size(); ++i) {
                    if (x[i] - p.strikes[i] > x[best] - p.strikes[best]) best = i;
                }
                return std::max(di(best) * x[best] - r * p.strikes[best], 0.0);
            },
            [&](const PowerProduct& p) {
                const double f = product_power(p.gamma, x);
                return std::max(power_product_coefficient(p, params) * f - r * p.strike, 0.0);
            },
        },
        spec);
}

double kink_distance(const PayoffSpec& spec, std::span<const double> x) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    return std::visit(
        overloaded{
            [x](const IndexCall& p) {
                double norm = 0.0;
                for (double w : p.w) norm += w * w;
                return std::abs(weighted_sum(p.w, x) - p.strike) / std::sqrt(norm);
            },
            [x](const IndexPut& p) {
                double norm = 0.0;
                for (double w : p.w) norm += w * w;
                return std::abs(weighted_sum(p.w, x) - p.strike) / std::sqrt(norm);
            },
            [x](const MaxCall& p) {
                return std::min(std::abs(x[argmax(x)] - p.strike), top_gap(x) * inv_sqrt2);
            },
            [x](const MinPut& p) {
                std::vector<double> neg(x.begin(), x.end());
                for (double& e : neg) e = -e;
                return std::min(std::abs(x[argmin(x)] - p.strike), top_gap(neg) * inv_sqrt2);
            },
            [x](const MultiStrike& p) {
                std::vector<double> y(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - p.strikes[i];
                return std::min(std::abs(y[argmax(y)]), top_gap(y) * inv_sqrt2);
            },
            [x](const PowerProduct& p) {
                const double f = product_power(p.gamma, x);
                double grad2 = 0.0;
                for (double xi : x) grad2 += (p.gamma * f / xi) * (p.gamma * f / xi);
                return std::abs(f - p.strike) / std::sqrt(grad2);
            },
        },
        spec);
}

double density_oracle(const PayoffSpec& spec, const ModelParams& params,
                      std::span<const double> x, double h) {
    const std::size_t n = x.size();
    if (n != params.n()) throw ValidationError("density_oracle: dimension mismatch");
    if (!(h > 0.0)) throw ValidationError("density_oracle: bump must be > 0");
    const double xmax = *std::max_element(x.begin(), x.end());
    if (!(kink_distance(spec, x) > 10.0 * h * xmax)) {
        throw OracleInvalidError("density_oracle: point lies within 10 bumps of a payoff kink");
    }

    std::vector<double> y(x.begin(), x.end());
    auto psi_at = [&](std::size_t i, double si, std::size_t j, double sj) {
        std::copy(x.begin(), x.end(), y.begin());
        y[i] += si * h * x[i];
        y[j] += sj * h * x[j];
        return evaluate(spec, y);
    };

    const double psi0 = evaluate(spec, x);
    const double r = params.r();
    double generator = -r * psi0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double hi = h * x[i];
        std::copy(x.begin(), x.end(), y.begin());
        y[i] = x[i] + hi;
        const double up = evaluate(spec, y);
        y[i] = x[i] - hi;
        const double down = evaluate(spec, y);
        const double first = (up - down) / (2.0 * hi);
        const double second = (up - 2.0 * psi0 + down) / (hi * hi);
        generator += (r - params.d()[ii]) * x[i] * first;
        generator += 0.5 * params.a()(ii, ii) * x[i] * x[i] * second;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double hj = h * x[j];
            const double cross = (psi_at(i, 1, j, 1) - psi_at(i, 1, j, -1) -
                                  psi_at(i, -1, j, 1) + psi_at(i, -1, j, -1)) /
                                 (4.0 * hi * hj);
            generator += params.a()(ii, static_cast<Eigen::Index>(j)) * x[i] * x[j] * cross;
        }
    }
    return std::max(-generator, 0.0);
}

bool exchangeable(const PayoffSpec& spec) {
    auto all_equal = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [&v](double e) { return e == v.front(); });
    };
    return std::visit(overloaded{
                          [&](const IndexCall& p) { return all_equal(p.w); },
                          [&](const IndexPut& p) { return all_equal(p.w); },
                          [&](const MultiStrike& p) { return all_equal(p.strikes); },
                          [](const auto&) { return true; },
                      },
                      spec);
}

PayoffSpec permuted(const PayoffSpec& spec, std::span<const std::size_t> perm) {
    auto reorder = [perm](const std::vector<double>& v) {
        std::vector<double> out(v.size());
        for (std::size_t k = 0; k < perm.size(); ++k) out[k] = v[perm[k]];
        return out;
    };
    return std::visit(overloaded{
                          [&](const IndexCall& p) -> PayoffSpec { return IndexCall{reorder(p.w), p.strike}; },
                          [&](const IndexPut& p) -> PayoffSpec { return IndexPut{reorder(p.w), p.strike}; },
                          [&](const MultiStrike& p) -> PayoffSpec { return MultiStrike{reorder(p.strikes)}; },
                          [](const auto& p) -> PayoffSpec { return p; },
                      },
                      spec);
}

}  // namespace eeplab
