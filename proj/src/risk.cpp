#include "brl/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>

namespace brl {

namespace {

void check_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("risk level alpha must lie in [0, 1), got " +
                                    std::to_string(alpha));
    }
}

const boost::math::normal& standard() {
    static const boost::math::normal dist(0.0, 1.0);
    return dist;
}

}  // namespace

double normal_pdf(double x) { return boost::math::pdf(standard(), x); }

double normal_cdf(double x) {
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    return boost::math::cdf(standard(), x);
}

double normal_quantile(double p) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    return boost::math::quantile(standard(), p);
}

std::size_t derived_sample_size(double alpha) {
    check_alpha(alpha);
    const double x = 1.0 / (1.0 - alpha);
    const double nearest = std::round(x);
    if (std::abs(x - nearest) <= kIntegralTolerance) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::ceil(x));
}

RiskConfig RiskConfig::from_alpha(double alpha) { return {alpha, derived_sample_size(alpha)}; }

RiskConfig RiskConfig::with_sample_size(double alpha, std::size_t n) {
    check_alpha(alpha);
    if (n == 0) throw std::invalid_argument("sample size must be positive");
    return {alpha, n};
}

bool RiskConfig::tail_count_is_integral() const noexcept {
    const double x = 1.0 / (1.0 - alpha_);
    return std::abs(x - std::round(x)) <= kIntegralTolerance;
}

double empirical_cvar_inplace(std::span<double> scratch, double alpha) {
    check_alpha(alpha);
    const std::size_t n = scratch.size();
    if (n == 0) throw std::invalid_argument("empirical_cvar: empty sample");
    double m = static_cast<double>(n) * (1.0 - alpha);
    const double m_round = std::round(m);
    if (std::abs(m - m_round) <= 1e-12 * static_cast<double>(n)) m = m_round;
    std::size_t k = static_cast<std::size_t>(std::floor(m));
    // Anchor at X_(k+1), or at the maximum when the tail is the whole sample.
    const std::size_t anchor_index = std::min(k, n - 1);
    auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(anchor_index);
    std::nth_element(scratch.begin(), nth, scratch.end());
    const double anchor = *nth;
    // value = X_(k+1) - (1/m) * sum_{i<=k} (X_(k+1) - X_(i)); the subtracted term
    // is nonnegative, so the result never exceeds the anchor.
    double shortfall = 0.0;
    for (std::size_t i = 0; i < k; ++i) shortfall += anchor - scratch[i];
    return anchor - shortfall / m;
}

double empirical_cvar(std::span<const double> samples, double alpha) {
    std::vector<double> scratch(samples.begin(), samples.end());
    return empirical_cvar_inplace(scratch, alpha);
}

double modified_cvar(std::span<const double> samples, const RiskConfig& risk) {
    if (samples.size() != risk.sample_size()) {
        throw std::invalid_argument("modified_cvar: expected " + std::to_string(risk.sample_size()) +
                                    " samples, got " + std::to_string(samples.size()));
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    if (risk.tail_count_is_integral()) {
        return *std::min_element(sorted.begin(), sorted.end());
    }
    if (sorted.size() < 2) {
        throw std::invalid_argument("modified_cvar: second order statistic needs n >= 2");
    }
    std::nth_element(sorted.begin(), sorted.begin() + 1, sorted.end());
    return sorted[1];
}

double normal_cvar(double mu, double sigma, double alpha) {
    check_alpha(alpha);
    if (sigma < 0.0) throw std::invalid_argument("normal_cvar: sigma must be nonnegative");
    if (alpha == 0.0 || sigma == 0.0) return mu;
    return mu - sigma * normal_cvar_coefficient(alpha);
}

double normal_cvar_coefficient(double alpha) {
    check_alpha(alpha);
    if (alpha == 0.0) return 0.0;
    return normal_pdf(normal_quantile(alpha)) / (1.0 - alpha);
}

double truncated_normal_cvar(double mu, double sigma, double alpha) {
    check_alpha(alpha);
    if (sigma < 0.0) throw std::invalid_argument("truncated_normal_cvar: sigma must be nonnegative");
    const double tail = 1.0 - alpha;
    if (sigma == 0.0) return std::clamp(mu, 0.0, 1.0);

    // Quantile of X: 0 below beta0, sigma*Phi^{-1}(beta)+mu in between, 1 above beta1.
    const double y_low = -mu / sigma;
    const double y_high = (1.0 - mu) / sigma;
    const double beta1 = normal_cdf(y_high);

    // Beyond |y| = 40 the normal density is below 1e-340 and contributes nothing.
    constexpr double kCut = 40.0;
    const double lo = std::max(y_low, -kCut);
    const double hi = std::min({normal_quantile(tail), y_high, kCut});

    // Integral of (sigma*y + mu) * phi(y) over [lo, hi].
    double middle = 0.0;
    if (hi > lo)
        middle = mu * (normal_cdf(hi) - normal_cdf(lo)) + sigma * (normal_pdf(lo) - normal_pdf(hi));
    const double upper = tail > beta1 ? tail - beta1 : 0.0;
    return (middle + upper) / tail;
}

}  // namespace brl
