#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace brl {

/// Random stream used throughout the library. Every stochastic operation
/// takes one explicitly; nothing draws from hidden global state.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/**
 * Counter-based seed derivation.
 *
 * A root seed expands into independent per-replication (and per-purpose)
 * streams without shared state: the seed for (root, index, stream) is a pure
 * function of its three arguments, so replications can be scheduled on any
 * number of threads and still reproduce bit-identical draws.
 *
 *   seed = splitmix64(splitmix64(root + (index + 1) * 0x9E3779B97F4A7C15)
 *                     ^ (stream * 0xD1B54A32D192ED03))
 */
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index,
                          std::uint64_t stream = 0) noexcept;

inline Rng make_rng(std::uint64_t root, std::uint64_t index = 0,
                    std::uint64_t stream = 0) {
    return Rng(derive_seed(root, index, stream));
}

/// Uniform draw in [0, 1) built from the top 53 bits of one engine output.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng);

/// Gamma(shape, 1) draw.
double gamma_draw(double shape, Rng& rng);

/// Dirichlet draw by normalized Gamma(shape = count, scale = 1) variates.
void sample_dirichlet(std::span<const double> counts, Rng& rng, std::span<double> out);

}  // namespace brl
