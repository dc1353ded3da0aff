#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace brl {

/// Streaming mean/variance (Welford) with exact pairwise merging (Chan et al.).
class RunningStats {
public:
    void add(double x) noexcept;
    void merge(const RunningStats& other) noexcept;

    std::size_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }
    /// Unbiased sample variance; zero with fewer than two observations.
    double variance() const noexcept;
    double stddev() const noexcept;
    double standard_error() const noexcept;

    /// Half-width of the two-sided Student-t confidence interval for the mean.
    /// Zero with fewer than two observations.
    double ci_half_width(double level = 0.95) const;

private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Kolmogorov-Smirnov statistic sup |F_n - F| of a sample against a continuous CDF.
double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Asymptotic KS critical value sqrt(-ln(level / 2) / 2) / sqrt(n).
double ks_critical_value(std::size_t n, double level);

}  // namespace brl
