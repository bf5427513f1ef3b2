#include "eeplab/mc.hpp"

#include "eeplab/errors.hpp"
#include "eeplab/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

namespace eeplab {

void Accumulator::merge(const Accumulator& other) noexcept {
    if (other.count_ == 0) return;
    if (count_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double delta = other.mean_ - mean_;
    const double total = na + nb;
    mean_ += delta * nb / total;
    m2_ += other.m2_ + delta * delta * na * nb / total;
    count_ += other.count_;
}

Estimate Accumulator::estimate() const noexcept {
    Estimate e;
    e.value = mean_;
    e.n_samples = count_;
    if (count_ > 1) {
        const double var = std::max(m2_, 0.0) / static_cast<double>(count_ - 1);
        e.std_error = std::sqrt(var / static_cast<double>(count_));
    }
    return e;
}

Accumulator parallel_accumulate(std::size_t n, const Execution& exec,
                                const std::function<void(std::size_t, std::size_t, Accumulator&)>& body) {
    constexpr std::size_t chunk = 4096;
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<Accumulator> parts(n_chunks);
    std::size_t threads = exec.threads ? exec.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(n_chunks, 1));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_chunks || failed.load()) return;
            try {
                body(c * chunk, std::min(n, (c + 1) * chunk), parts[c]);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    Accumulator total;
    for (const auto& p : parts) total.merge(p);
    return total;
}

PathBatch::PathBatch(ModelParams params, SpotPoint spot, std::size_t steps, std::size_t n_paths,
                     std::uint64_t seed, std::uint32_t stream, bool antithetic)
    : params_(std::move(params)),
      spot_(std::move(spot)),
      n_paths_(n_paths),
      seed_(seed),
      stream_(stream),
      antithetic_(antithetic) {
    validate_spot(params_, spot_);
    if (steps == 0) throw ValidationError("path mesh needs at least one step", "mc.steps");
    if (antithetic_ && n_paths_ % 2 != 0) {
        throw ValidationError("antithetic pairing needs an even path count", "mc.paths");
    }
    const double horizon = params_.maturity() - spot_.s;
    times_.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        times_[k] = spot_.s + horizon * static_cast<double>(k) / static_cast<double>(steps);
    }
    times_[steps] = params_.maturity();
    const std::size_t n = params_.n();
    drift_dt_.resize(steps * n);
    sqrt_dt_.resize(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double dt = times_[k + 1] - times_[k];
        sqrt_dt_[k] = std::sqrt(dt);
        for (std::size_t i = 0; i < n; ++i) drift_dt_[k * n + i] = params_.log_drift(i) * dt;
    }
}

void PathBatch::generate(std::size_t index, std::span<double> out) const {
    const std::size_t n = dim();
    const std::size_t steps = this->steps();
    if (out.size() != (steps + 1) * n) throw ValidationError("path buffer has the wrong size");
    const std::uint64_t base = antithetic_ ? index / 2 : index;
    const double sign = (antithetic_ && index % 2 == 1) ? -1.0 : 1.0;
    double z[16];
    double shock[16];
    std::vector<double> zh, sh;
    double* zp = z;
    double* sp = shock;
    if (n > 16) {
        zh.resize(n);
        sh.resize(n);
        zp = zh.data();
        sp = sh.data();
    }
    const Matrix& sigma = params_.sigma();
    std::copy(spot_.x.begin(), spot_.x.end(), out.begin());
    for (std::size_t k = 0; k < steps; ++k) {
        normals_at(seed_, stream_, base, static_cast<std::uint32_t>(k), std::span<double>(zp, n));
        for (std::size_t i = 0; i < n; ++i) {
            double sz = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                sz += sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * zp[j];
            }
            sp[i] = drift_dt_[k * n + i] + sqrt_dt_[k] * sign * sz;
        }
        for (std::size_t i = 0; i < n; ++i) out[(k + 1) * n + i] = out[k * n + i] * std::exp(sp[i]);
    }
}

std::vector<double> PathBatch::materialize() const {
    const std::size_t per = (steps() + 1) * dim();
    std::vector<double> all(per * n_paths_);
    for (std::size_t p = 0; p < n_paths_; ++p) generate(p, std::span<double>(all.data() + p * per, per));
    return all;
}

PathBatch PathBatch::with_stream(std::uint32_t stream, std::size_t n_paths) const {
    return PathBatch(params_, spot_, steps(), n_paths, seed_, stream, antithetic_);
}

PathBatch simulate_paths(const ModelParams& params, const SpotPoint& spot, std::size_t steps,
                         std::size_t n_paths, std::uint64_t seed, bool antithetic, std::uint32_t stream) {
    if (steps < 10) throw ValidationError("path mesh needs at least 10 steps", "mc.steps");
    return PathBatch(params, spot, steps, n_paths, seed, stream, antithetic);
}

void write_paths_csv(std::ostream& os, const PathBatch& paths, std::size_t max_paths) {
    const std::size_t n = paths.dim();
    os << "path,t";
    for (std::size_t i = 0; i < n; ++i) os << ",x" << (i + 1);
    os << '\n';
    std::vector<double> buf((paths.steps() + 1) * n);
    char num[32];
    for (std::size_t p = 0; p < std::min(max_paths, paths.n_paths()); ++p) {
        paths.generate(p, buf);
        for (std::size_t k = 0; k <= paths.steps(); ++k) {
            std::snprintf(num, sizeof num, "%.17g", paths.times()[k]);
            os << p << ',' << num;
            for (std::size_t i = 0; i < n; ++i) {
                std::snprintf(num, sizeof num, "%.17g", buf[k * n + i]);
                os << ',' << num;
            }
            os << '\n';
        }
    }
}

Estimate price_european(const ModelParams& params, const PayoffFn& payoff, const SpotPoint& spot,
                        std::size_t n_paths, std::uint64_t seed, const McOptions& opts) {
    const PathBatch batch(params, spot, 1, n_paths, seed, opts.stream, opts.antithetic);
    const double discount = std::exp(-params.r() * (params.maturity() - spot.s));
    const std::size_t n = params.n();
    const std::size_t samples = opts.antithetic ? n_paths / 2 : n_paths;
    const std::size_t per_sample = opts.antithetic ? 2 : 1;
    auto acc = parallel_accumulate(samples, opts.exec, [&](std::size_t b, std::size_t e, Accumulator& a) {
        std::vector<double> buf(2 * n);
        for (std::size_t s = b; s < e; ++s) {
            double v = 0.0;
            for (std::size_t q = 0; q < per_sample; ++q) {
                batch.generate(s * per_sample + q, buf);
                v += payoff(std::span<const double>(buf.data() + n, n));
            }
            a.add(discount * v / static_cast<double>(per_sample));
        }
    });
    return acc.estimate();
}

Estimate price_european(const ModelParams& params, const PayoffSpec& payoff, const SpotPoint& spot,
                        std::size_t n_paths, std::uint64_t seed, const McOptions& opts) {
    validate(payoff, params.n());
    return price_european(params, [&payoff](std::span<const double> x) { return evaluate(payoff, x); },
                          spot, n_paths, seed, opts);
}

Estimate estimate_premium(const ModelParams& params, const PayoffSpec& payoff, const PathBatch& paths,
                          const RegionFn& region, const Execution& exec) {
    validate(payoff, params.n());
    const std::size_t n = paths.dim();
    const std::size_t steps = paths.steps();
    const auto& times = paths.times();
    const double s = paths.spot().s;
    std::vector<double> discount(steps + 1), weight(steps + 1, 0.0);
    for (std::size_t k = 0; k <= steps; ++k) discount[k] = std::exp(-params.r() * (times[k] - s));
    for (std::size_t k = 0; k < steps; ++k) {
        const double half = 0.5 * (times[k + 1] - times[k]);
        weight[k] += half;
        weight[k + 1] += half;
    }
    const bool pairs = paths.antithetic();
    const std::size_t per_sample = pairs ? 2 : 1;
    const std::size_t samples = paths.n_paths() / per_sample;
    auto acc = parallel_accumulate(samples, exec, [&](std::size_t b, std::size_t e, Accumulator& a) {
        std::vector<double> buf((steps + 1) * n);
        for (std::size_t smp = b; smp < e; ++smp) {
            double total = 0.0;
            for (std::size_t q = 0; q < per_sample; ++q) {
                paths.generate(smp * per_sample + q, buf);
                double integral = 0.0;
                for (std::size_t k = 0; k <= steps; ++k) {
                    const std::span<const double> x(buf.data() + k * n, n);
                    const double density = premium_density(payoff, params, x);
                    if (density > 0.0 && region(times[k], x)) integral += weight[k] * discount[k] * density;
                }
                total += integral;
            }
            a.add(total / static_cast<double>(per_sample));
        }
    });
    return acc.estimate();
}

}  // namespace eeplab
