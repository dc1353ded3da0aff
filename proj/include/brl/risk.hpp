#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace brl {

/// Risk level alpha and the posterior sample size n used by the CVaR estimators.
class RiskConfig {
public:
    /// n = ceil(1 / (1 - alpha)), with 1 / (1 - alpha) snapped to the nearest
    /// integer when it is within 1e-9 of one (alpha = 0.8 gives 4.999...).
    static RiskConfig from_alpha(double alpha);
    /// Explicit sample size, e.g. the 5000-kernel evaluation ensembles.
    static RiskConfig with_sample_size(double alpha, std::size_t n);

    double alpha() const noexcept { return alpha_; }
    std::size_t sample_size() const noexcept { return n_; }

    /// Whether 1 / (1 - alpha) is an integer (within 1e-9).
    bool tail_count_is_integral() const noexcept;

private:
    RiskConfig(double alpha, std::size_t n) : alpha_(alpha), n_(n) {}
    double alpha_;
    std::size_t n_;
};

inline constexpr double kIntegralTolerance = 1e-9;

/// ceil(1 / (1 - alpha)) with the integrality snap described above.
std::size_t derived_sample_size(double alpha);

/**
 * CVaR at level alpha of the empirical distribution of `samples`: the mean of
 * the worst (1 - alpha) fraction. With m = n (1 - alpha) and k = floor(m),
 *
 *     value = (sum_{i<=k} X_(i) + (m - k) X_(k+1)) / m,
 *
 * which is the maximum over x of  x - sum_i (x - X_i)^+ / (n (1 - alpha)).
 * Evaluated in O(n) by selection; the input is not modified.
 */
double empirical_cvar(std::span<const double> samples, double alpha);

/// Same as empirical_cvar but reorders `scratch` in place (no allocation).
double empirical_cvar_inplace(std::span<double> scratch, double alpha);

/// Order-statistic estimator: X_(1) if 1/(1-alpha) is integral, else X_(2).
/// Requires samples.size() == risk.sample_size().
double modified_cvar(std::span<const double> samples, const RiskConfig& risk);

/// Left-tail CVaR of N(mu, sigma^2): mu - sigma * phi(Phi^{-1}(alpha)) / (1 - alpha).
double normal_cvar(double mu, double sigma, double alpha);

/// phi(Phi^{-1}(alpha)) / (1 - alpha), so normal_cvar = mu - sigma * coefficient.
double normal_cvar_coefficient(double alpha);

/**
 * Left-tail CVaR of X = min{1, max{Y, 0}}, Y ~ N(mu, sigma^2), computed as
 * (1 / (1 - alpha)) * integral_0^{1-alpha} VaR_beta(X) d beta with the
 * three-piece quantile of X (0, sigma Phi^{-1}(beta) + mu, 1). The middle piece
 * is integrated by adaptive Gauss-Kronrod after the substitution beta = Phi(y).
 */
double truncated_normal_cvar(double mu, double sigma, double alpha);

// Standard normal helpers.
double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace brl
