#pragma once

#include "eeplab/model.hpp"
#include "eeplab/payoff.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace eeplab {

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
};

/// Streaming mean/variance (Welford), mergeable across chunks (Chan et al.).
class Accumulator {
public:
    void add(double x) noexcept {
        ++count_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (x - mean_);
    }
    void merge(const Accumulator& other) noexcept;
    std::size_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }
    Estimate estimate() const noexcept;

private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Worker threads for Monte Carlo loops; 0 means hardware concurrency.
// Results do not depend on the thread count.
struct Execution {
    std::size_t threads = 0;
};

/// Runs body(begin, end, acc) over fixed chunks of [0, n) and merges the
/// chunk accumulators in chunk order.
Accumulator parallel_accumulate(std::size_t n, const Execution& exec,
                                const std::function<void(std::size_t, std::size_t, Accumulator&)>& body);

// Random streams used by the pipeline.
inline constexpr std::uint32_t kPremiumStream = 0;
inline constexpr std::uint32_t kEuropeanStream = 1;
inline constexpr std::uint32_t kRegressionStream = 2;
inline constexpr std::uint32_t kPricingStream = 3;

/// Description of a batch of exact GBM paths on a time mesh. Paths are not
/// stored: any path is regenerated on demand from (seed, stream, index).
/// With antithetic pairing, paths 2k and 2k+1 share normals of opposite sign.
class PathBatch {
public:
    PathBatch(ModelParams params, SpotPoint spot, std::size_t steps, std::size_t n_paths,
              std::uint64_t seed, std::uint32_t stream = kPremiumStream, bool antithetic = false);

    const ModelParams& params() const noexcept { return params_; }
    const SpotPoint& spot() const noexcept { return spot_; }
    const std::vector<double>& times() const noexcept { return times_; }
    std::size_t steps() const noexcept { return times_.size() - 1; }
    std::size_t n_paths() const noexcept { return n_paths_; }
    std::size_t dim() const noexcept { return params_.n(); }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint32_t stream() const noexcept { return stream_; }
    bool antithetic() const noexcept { return antithetic_; }

    /// Path `index` into out[(step * dim) + asset], out.size() == (steps + 1) * dim.
    void generate(std::size_t index, std::span<double> out) const;

    /// All paths, path-major. Only for batches that fit in memory.
    std::vector<double> materialize() const;

    /// Same mesh and seed on a different stream, optionally resized.
    PathBatch with_stream(std::uint32_t stream, std::size_t n_paths) const;

private:
    ModelParams params_;
    SpotPoint spot_;
    std::vector<double> times_;
    std::vector<double> drift_dt_;  // per step and asset
    std::vector<double> sqrt_dt_;
    std::size_t n_paths_;
    std::uint64_t seed_;
    std::uint32_t stream_;
    bool antithetic_;
};

/// Requires steps >= 10.
PathBatch simulate_paths(const ModelParams& params, const SpotPoint& spot, std::size_t steps,
                         std::size_t n_paths, std::uint64_t seed, bool antithetic = false,
                         std::uint32_t stream = kPremiumStream);

void write_paths_csv(std::ostream& os, const PathBatch& paths, std::size_t max_paths);

using PayoffFn = std::function<double(std::span<const double>)>;
using RegionFn = std::function<bool(double, std::span<const double>)>;

struct McOptions {
    bool antithetic = false;
    std::uint32_t stream = kEuropeanStream;
    Execution exec;
};

/// Discounted terminal payoff mean, one exact step to maturity.
/// With antithetic pairing each pair average is one sample.
Estimate price_european(const ModelParams& params, const PayoffFn& payoff, const SpotPoint& spot,
                        std::size_t n_paths, std::uint64_t seed, const McOptions& opts = {});
Estimate price_european(const ModelParams& params, const PayoffSpec& payoff, const SpotPoint& spot,
                        std::size_t n_paths, std::uint64_t seed, const McOptions& opts = {});

/// Per path, the trapezoidal integral over the mesh of
/// exp(-r (t - s)) 1_region(t, X_t) Psi^-(X_t); mean and standard error over paths.
/// The region callback is only consulted where Psi^- > 0 and must be safe
/// for concurrent calls.
Estimate estimate_premium(const ModelParams& params, const PayoffSpec& payoff, const PathBatch& paths,
                          const RegionFn& region, const Execution& exec = {});

/// Regression-based exercise rule on a date mesh: exercise at date k when
/// psi(x) > 0 and psi(x) >= fitted continuation value.
class StoppingRule {
public:
    StoppingRule() = default;
    // Per exercise date: the monomial exponents, whether psi itself is a
    // regressor (last coefficient), and the coefficients (empty = no exercise).
    struct DateFit {
        std::vector<std::vector<int>> exponents;
        bool uses_payoff = false;
        Vector coefficients;
    };

    StoppingRule(PayoffSpec payoff, std::vector<double> times, std::vector<double> scale, bool sorted,
                 std::vector<DateFit> fits);

    // Regression coordinates: x_i / scale_i, sorted ascending when the rule
    // was fitted on order statistics.
    void coordinates(std::span<const double> x, std::span<double> z) const;

    const std::vector<double>& times() const noexcept { return times_; }
    double continuation(std::size_t date, std::span<const double> x) const;
    bool exercise(std::size_t date, std::span<const double> x) const;
    // Uses the nearest exercise date; usable as a RegionFn.
    bool exercise_at(double t, std::span<const double> x) const;
    std::size_t degree(std::size_t date) const;

private:
    PayoffSpec payoff_{MaxCall{1.0}};
    std::vector<double> times_;
    std::vector<double> scale_;
    bool sorted_ = false;
    double payoff_scale_ = 1.0;
    std::vector<DateFit> fits_;
};

struct LsResult {
    Estimate price;
    StoppingRule rule;
    std::vector<std::string> warnings;
};

/// Least-squares Monte Carlo. Regresses discounted continuation values on
/// in-the-money paths of `paths` against monomials of total degree <= degree
/// plus psi itself. For payoffs symmetric under exchanging assets the
/// monomials are taken in the sorted prices. The rule is then priced on an independent batch of
/// pricing_paths paths (stream kPricingStream). Requires >= 25 dates.
/// Rank-deficient regressions are retried at lower degree with a warning.
LsResult longstaff_schwartz(const PayoffSpec& payoff, const PathBatch& paths, int degree,
                            std::size_t pricing_paths, const Execution& exec = {});

}  // namespace eeplab
