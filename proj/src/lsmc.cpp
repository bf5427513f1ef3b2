#include "eeplab/errors.hpp"
#include "eeplab/mc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace eeplab {
namespace {

// Exponent tuples of all monomials in n variables with total degree <= degree.
std::vector<std::vector<int>> monomials(std::size_t n, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(n, 0);
    for (int total = 0; total <= degree; ++total) {
        // Enumerate compositions of `total` into n parts.
        std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
            if (i + 1 == n) {
                cur[i] = left;
                out.push_back(cur);
                return;
            }
            for (int e = left; e >= 0; --e) {
                cur[i] = e;
                rec(i + 1, left - e);
            }
        };
        rec(0, total);
    }
    return out;
}

double monomial(const std::vector<int>& e, std::span<const double> z) {
    double v = 1.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        for (int p = 0; p < e[i]; ++p) v *= z[i];
    }
    return v;
}

}  // namespace

void StoppingRule::coordinates(std::span<const double> x, std::span<double> z) const {
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] / scale_[i];
    if (sorted_) std::sort(z.begin(), z.end());
}

StoppingRule::StoppingRule(PayoffSpec payoff, std::vector<double> times, std::vector<double> scale,
                           bool sorted, std::vector<DateFit> fits)
    : payoff_(std::move(payoff)),
      times_(std::move(times)),
      scale_(std::move(scale)),
      sorted_(sorted),
      payoff_scale_(strike_scale(payoff_)),
      fits_(std::move(fits)) {}

double StoppingRule::continuation(std::size_t date, std::span<const double> x) const {
    const auto& fit = fits_.at(date);
    if (fit.coefficients.size() == 0) return 0.0;
    double z[16];
    std::vector<double> zh;
    double* zp = z;
    if (x.size() > 16) {
        zh.resize(x.size());
        zp = zh.data();
    }
    coordinates(x, std::span<double>(zp, x.size()));
    const std::span<const double> zs(zp, x.size());
    double c = 0.0;
    Eigen::Index q = 0;
    for (const auto& e : fit.exponents) c += fit.coefficients[q++] * monomial(e, zs);
    if (fit.uses_payoff) c += fit.coefficients[q] * evaluate(payoff_, x) / payoff_scale_;
    return c;
}

bool StoppingRule::exercise(std::size_t date, std::span<const double> x) const {
    const double psi = evaluate(payoff_, x);
    if (!(psi > 0.0)) return false;
    if (date + 1 == times_.size()) return true;
    if (fits_.at(date).coefficients.size() == 0) return false;
    return psi >= continuation(date, x);
}

bool StoppingRule::exercise_at(double t, std::span<const double> x) const {
    const std::size_t last = times_.size() - 1;
    const double pos = (t - times_.front()) / (times_.back() - times_.front()) * static_cast<double>(last);
    auto date = static_cast<std::size_t>(std::clamp(std::lround(pos), 1L, static_cast<long>(last)));
    return exercise(date, x);
}

std::size_t StoppingRule::degree(std::size_t date) const {
    int deg = 0;
    for (const auto& e : fits_.at(date).exponents) {
        int total = 0;
        for (int p : e) total += p;
        deg = std::max(deg, total);
    }
    return static_cast<std::size_t>(deg);
}

LsResult longstaff_schwartz(const PayoffSpec& payoff, const PathBatch& paths, int degree,
                            std::size_t pricing_paths, const Execution& exec) {
    const ModelParams& params = paths.params();
    validate(payoff, params.n());
    const std::size_t n = paths.dim();
    const std::size_t dates = paths.steps();
    if (dates < 25) throw ValidationError("least-squares Monte Carlo needs >= 25 exercise dates", "lsmc.steps");
    if (degree < 1 || degree > 3) throw ValidationError("basis degree must be 1, 2 or 3", "lsmc.degree");

    LsResult result;
    const auto& times = paths.times();
    const std::vector<double> data = paths.materialize();
    const std::size_t per = (dates + 1) * n;
    const std::size_t n_paths = paths.n_paths();
    const double payoff_scale = strike_scale(payoff);
    // Exchangeable payoffs regress on the order statistics of the prices,
    // all scaled by the strike; otherwise each asset is scaled by its spot.
    const bool sorted = exchangeable(payoff);
    std::vector<double> scale(paths.spot().x.begin(), paths.spot().x.end());
    if (sorted) std::fill(scale.begin(), scale.end(), payoff_scale);
    const StoppingRule shape(payoff, times, scale, sorted, {});

    auto at = [&](std::size_t p, std::size_t k) { return std::span<const double>(data.data() + p * per + k * n, n); };

    std::vector<double> value(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) value[p] = evaluate(payoff, at(p, dates));

    std::vector<StoppingRule::DateFit> fits(dates + 1);
    std::vector<std::size_t> itm;
    std::vector<double> psi_itm;
    std::vector<double> z(n);
    for (std::size_t k = dates; k-- > 1;) {
        const double disc = std::exp(-params.r() * (times[k + 1] - times[k]));
        for (double& v : value) v *= disc;
        itm.clear();
        psi_itm.clear();
        for (std::size_t p = 0; p < n_paths; ++p) {
            const double psi = evaluate(payoff, at(p, k));
            if (psi > 0.0) {
                itm.push_back(p);
                psi_itm.push_back(psi);
            }
        }
        const auto rows = static_cast<Eigen::Index>(itm.size());
        Eigen::VectorXd y(rows);
        for (Eigen::Index q = 0; q < rows; ++q) y[q] = value[itm[static_cast<std::size_t>(q)]];

        auto& fit = fits[k];
        for (int deg = degree; deg >= 1; --deg) {
            fit.exponents = monomials(n, deg);
            const auto cols = static_cast<Eigen::Index>(fit.exponents.size());
            if (rows < 2 * (cols + 1)) {
                fit.coefficients.resize(0);
                continue;
            }
            Matrix design(rows, cols + 1);
            for (Eigen::Index q = 0; q < rows; ++q) {
                const auto x = at(itm[static_cast<std::size_t>(q)], k);
                shape.coordinates(x, z);
                for (Eigen::Index c = 0; c < cols; ++c) design(q, c) = monomial(fit.exponents[static_cast<std::size_t>(c)], z);
                design(q, cols) = psi_itm[static_cast<std::size_t>(q)] / payoff_scale;
            }
            Eigen::ColPivHouseholderQR<Matrix> mono(design.leftCols(cols));
            if (mono.rank() < cols) {
                result.warnings.push_back("date " + std::to_string(k) + ": rank-deficient basis at degree " +
                                          std::to_string(deg) + ", reducing degree");
                fit.coefficients.resize(0);
                continue;
            }
            Eigen::ColPivHouseholderQR<Matrix> full(design);
            // When psi is itself polynomial on the in-the-money set it adds nothing.
            fit.uses_payoff = full.rank() == cols + 1;
            fit.coefficients = fit.uses_payoff ? Eigen::VectorXd(full.solve(y)) : Eigen::VectorXd(mono.solve(y));
            break;
        }
        if (fit.coefficients.size() == 0) continue;
        for (Eigen::Index q = 0; q < rows; ++q) {
            const std::size_t p = itm[static_cast<std::size_t>(q)];
            const auto x = at(p, k);
            shape.coordinates(x, z);
            double cont = 0.0;
            Eigen::Index c = 0;
            for (const auto& e : fit.exponents) cont += fit.coefficients[c++] * monomial(e, z);
            if (fit.uses_payoff) cont += fit.coefficients[c] * psi_itm[static_cast<std::size_t>(q)] / payoff_scale;
            if (psi_itm[static_cast<std::size_t>(q)] >= cont) value[p] = psi_itm[static_cast<std::size_t>(q)];
        }
    }

    result.rule = StoppingRule(payoff, times, scale, sorted, std::move(fits));

    const PathBatch pricing = paths.with_stream(kPricingStream, pricing_paths);
    std::vector<double> discount(dates + 1);
    for (std::size_t k = 0; k <= dates; ++k) discount[k] = std::exp(-params.r() * (times[k] - times[0]));
    const std::size_t per_sample = pricing.antithetic() ? 2 : 1;
    const StoppingRule& rule = result.rule;
    auto acc = parallel_accumulate(pricing.n_paths() / per_sample, exec,
                                   [&](std::size_t b, std::size_t e, Accumulator& a) {
                                       std::vector<double> buf(per);
                                       for (std::size_t s = b; s < e; ++s) {
                                           double total = 0.0;
                                           for (std::size_t q = 0; q < per_sample; ++q) {
                                               pricing.generate(s * per_sample + q, buf);
                                               for (std::size_t k = 1; k <= dates; ++k) {
                                                   const std::span<const double> x(buf.data() + k * n, n);
                                                   if (rule.exercise(k, x)) {
                                                       total += discount[k] * evaluate(payoff, x);
                                                       break;
                                                   }
                                               }
                                           }
                                           a.add(total / static_cast<double>(per_sample));
                                       }
                                   });
    result.price = acc.estimate();
    const double immediate = evaluate(payoff, paths.spot().x);
    if (immediate > result.price.value) result.price = Estimate{immediate, 0.0, result.price.n_samples};
    return result;
}

}  // namespace eeplab
