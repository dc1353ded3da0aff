#include "brl/random.hpp"

#include <stdexcept>

namespace brl {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index,
                          std::uint64_t stream) noexcept {
    const std::uint64_t a = splitmix64(root + (index + 1) * 0x9E3779B97F4A7C15ULL);
    return splitmix64(a ^ (stream * 0xD1B54A32D192ED03ULL));
}

double standard_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

double gamma_draw(double shape, Rng& rng) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(rng);
}

void sample_dirichlet(std::span<const double> counts, Rng& rng, std::span<double> out) {
    if (counts.size() != out.size()) {
        throw std::invalid_argument("sample_dirichlet: size mismatch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out[i] = counts[i] > 0.0 ? gamma_draw(counts[i], rng) : 0.0;
        total += out[i];
    }
    if (!(total > 0.0)) {
        throw std::domain_error("sample_dirichlet: all gamma variates vanished");
    }
    for (double& x : out) x /= total;
}

}  // namespace brl
