#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace eeplab {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// the output is a pure function of (key, counter).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) noexcept {
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

// Uniform in the open interval (0, 1) from 53 random bits.
inline double open_uniform(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Standard normal draws addressed by (seed, stream, path, step, component).
/// Components 2j and 2j+1 come from one Philox block via Box-Muller.
inline void normals_at(std::uint64_t seed, std::uint32_t stream, std::uint64_t path,
                       std::uint32_t step, std::span<double> z) noexcept {
    constexpr double two_pi = 6.283185307179586476925;
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                              static_cast<std::uint32_t>(seed >> 32)};
    for (std::size_t j = 0; 2 * j < z.size(); ++j) {
        const std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), step,
            (stream << 16) | static_cast<std::uint32_t>(j)};
        const auto w = philox4x32(ctr, key);
        const double u1 = open_uniform(w[0], w[1]);
        const double u2 = open_uniform(w[2], w[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        z[2 * j] = radius * std::cos(two_pi * u2);
        if (2 * j + 1 < z.size()) z[2 * j + 1] = radius * std::sin(two_pi * u2);
    }
}

}  // namespace eeplab
