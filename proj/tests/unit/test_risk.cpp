#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "../common/oracles.hpp"
#include "brl/random.hpp"
#include "brl/risk.hpp"
#include "brl/stats.hpp"

using namespace brl;

TEST_CASE("sample size derivation") {
    CHECK(RiskConfig::from_alpha(0.0).sample_size() == 1);
    CHECK(RiskConfig::from_alpha(0.5).sample_size() == 2);
    CHECK(RiskConfig::from_alpha(0.6).sample_size() == 3);
    CHECK(RiskConfig::from_alpha(0.8).sample_size() == 5);
    CHECK(RiskConfig::from_alpha(0.9).sample_size() == 10);
    CHECK(RiskConfig::from_alpha(0.99).sample_size() == 100);
    CHECK(RiskConfig::from_alpha(0.8).tail_count_is_integral());
    CHECK_FALSE(RiskConfig::from_alpha(0.6).tail_count_is_integral());
    CHECK_THROWS(RiskConfig::from_alpha(1.0));
    CHECK_THROWS(RiskConfig::from_alpha(-0.1));
    for (double a = 0.0; a < 0.995; a += 0.0137) {
        const auto n = static_cast<double>(RiskConfig::from_alpha(a).sample_size());
        CHECK(n - 1 < 1.0 / (1.0 - a) + 1e-9);
        CHECK(1.0 / (1.0 - a) <= n + 1e-9);
    }
}

TEST_CASE("empirical CVaR examples") {
    const std::vector<double> xs{1, 2, 3, 4};
    CHECK(empirical_cvar(xs, 0.5) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(oracle::cvar_grid(xs, 0.5) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(empirical_cvar(xs, 0.0) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(empirical_cvar(std::vector<double>{5.0}, 0.9) == 5.0);
    CHECK_THROWS(empirical_cvar(std::vector<double>{}, 0.5));
    CHECK_THROWS(empirical_cvar(xs, 1.0));
}

TEST_CASE("empirical CVaR matches grid maximization of the Rockafellar-Uryasev objective") {
    Rng rng = make_rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        std::vector<double> xs(n);
        for (auto& x : xs) x = 10.0 * standard_normal(rng);
        const double alpha = 0.95 * uniform01(rng);
        REQUIRE(std::abs(empirical_cvar(xs, alpha) - oracle::cvar_grid(xs, alpha)) <= 1e-7);
    }
}

TEST_CASE("coherence of the empirical CVaR") {
    Rng rng = make_rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        std::vector<double> xs(n), ys(n), scaled(n), shifted(n);
        for (auto& x : xs) x = standard_normal(rng);
        const double alpha = 0.99 * uniform01(rng);
        const double base = empirical_cvar(xs, alpha);

        // Powers of two scale without rounding, so homogeneity holds bit for bit.
        const double lambda = std::ldexp(1.0, static_cast<int>(rng() % 9) - 4);
        for (std::size_t i = 0; i < n; ++i) scaled[i] = lambda * xs[i];
        REQUIRE(empirical_cvar(scaled, alpha) == lambda * base);

        const double c = 5.0 * standard_normal(rng);
        for (std::size_t i = 0; i < n; ++i) shifted[i] = xs[i] + c;
        const double scale = std::abs(base) + std::abs(c) + 1.0;
        REQUIRE(std::abs(empirical_cvar(shifted, alpha) - (base + c)) <= 8.0 * 0x1p-52 * scale);

        for (std::size_t i = 0; i < n; ++i) ys[i] = xs[i] + std::abs(standard_normal(rng));
        REQUIRE(empirical_cvar(ys, alpha) >= base);

        REQUIRE(empirical_cvar(xs, std::min(0.999, alpha + 0.01 + 0.2 * uniform01(rng))) <= base + 1e-12);
    }
}

TEST_CASE("modified CVaR examples") {
    CHECK(modified_cvar(std::vector<double>{3, 7}, RiskConfig::from_alpha(0.5)) == 3);
    CHECK(modified_cvar(std::vector<double>{9, 1, 4}, RiskConfig::from_alpha(0.6)) == 4);
    CHECK(modified_cvar(std::vector<double>{2.5}, RiskConfig::from_alpha(0.0)) == 2.5);
    CHECK_THROWS(modified_cvar(std::vector<double>{1, 2, 3}, RiskConfig::from_alpha(0.5)));
}

TEST_CASE("modified CVaR dominates the empirical CVaR on n = ceil(1/(1-alpha)) samples") {
    Rng rng = make_rng(33);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto risk = RiskConfig::from_alpha(0.99 * uniform01(rng));
        std::vector<double> xs(risk.sample_size());
        for (auto& x : xs) x = standard_normal(rng);
        REQUIRE(modified_cvar(xs, risk) >= empirical_cvar(xs, risk.alpha()));
    }
}

TEST_CASE("normal CVaR") {
    CHECK(normal_cvar(0.0, 1.0, 0.5) == doctest::Approx(-2.0 * oracle::phi(0.0)).epsilon(1e-14));
    CHECK(normal_cvar(3.0, 0.0, 0.7) == 3.0);
    CHECK(normal_cvar(1.5, 2.0, 1e-12) == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(normal_cvar(1.5, 2.0, 0.0) == 1.5);

    // Monte Carlo: mean of the draws below the median.
    Rng rng = make_rng(55);
    RunningStats tail;
    for (int i = 0; i < 10'000'000; ++i) {
        const double z = standard_normal(rng);
        tail.add(z < 0.0 ? 2.0 * z : 0.0);
    }
    CHECK(std::abs(tail.mean() - normal_cvar(0.0, 1.0, 0.5)) <= 3.0 * tail.standard_error());
}

TEST_CASE("truncated normal CVaR") {
    CHECK(truncated_normal_cvar(0.4, 0.0, 0.8) == 0.4);
    CHECK(truncated_normal_cvar(1.0, 0.0, 0.3) == 1.0);

    Rng rng = make_rng(66);
    for (int trial = 0; trial < 1000; ++trial) {
        const double mu = uniform01(rng);
        const double sigma = 0.01 + 2.0 * uniform01(rng);
        const double alpha = 0.5 + 0.49 * uniform01(rng);
        const double value = truncated_normal_cvar(mu, sigma, alpha);
        REQUIRE(std::abs(value - oracle::truncated_cvar(mu, sigma, alpha)) <= 1e-8);
        const double bound =
            mu - (1.0 / std::sqrt(2.0 * M_PI) + oracle::phi(oracle::Phi_inv(alpha))) * sigma / (1.0 - alpha);
        REQUIRE(value >= bound);
    }

    // Monte Carlo: CVaR_0.8 is the mean of the lowest 20% of clipped draws.
    const int draws = 10'000'000;
    std::vector<double> xs(draws);
    for (auto& x : xs) x = std::clamp(0.5 + 0.1 * standard_normal(rng), 0.0, 1.0);
    const auto cut = xs.begin() + draws / 5;
    std::nth_element(xs.begin(), cut, xs.end());
    RunningStats low;
    for (auto it = xs.begin(); it != cut; ++it) low.add(*it);
    CHECK(std::abs(low.mean() - truncated_normal_cvar(0.5, 0.1, 0.8)) <= 3.0 * low.standard_error());
}

TEST_CASE("order statistics dominate CVaR at tail masses 1/n and 2/n") {
    Rng rng = make_rng(77);
    const int trials = 200'000;
    for (int n = 2; n <= 10; ++n) {
        RunningStats first, second, first_tn, second_tn;
        std::vector<double> xs(static_cast<std::size_t>(n));
        for (int t = 0; t < trials; ++t) {
            for (auto& x : xs) x = uniform01(rng);
            std::partial_sort(xs.begin(), xs.begin() + 2, xs.end());
            first.add(xs[0]);
            second.add(xs[1]);
            for (auto& x : xs) x = std::clamp(0.5 + 0.3 * standard_normal(rng), 0.0, 1.0);
            std::partial_sort(xs.begin(), xs.begin() + 2, xs.end());
            first_tn.add(xs[0]);
            second_tn.add(xs[1]);
        }
        // Uniform[0,1]: CVaR at tail mass q is q / 2.
        CHECK(first.mean() - 0.5 / n >= -3.0 * first.standard_error());
        CHECK(second.mean() - 1.0 / n >= -3.0 * second.standard_error());
        const double q1 = truncated_normal_cvar(0.5, 0.3, 1.0 - 1.0 / n);
        const double q2 = truncated_normal_cvar(0.5, 0.3, 1.0 - 2.0 / n);
        CHECK(first_tn.mean() - q1 >= -3.0 * first_tn.standard_error());
        CHECK(second_tn.mean() - q2 >= -3.0 * second_tn.standard_error());
    }
}

TEST_CASE("modified CVaR tail bound for truncated normal samples") {
    Rng rng = make_rng(88);
    const double mu = 0.5, sigma = 0.3;
    for (double alpha : {0.5, 0.8, 0.9}) {
        const auto risk = RiskConfig::from_alpha(alpha);
        for (double delta : {0.1, 0.01}) {
            const double threshold = mu + std::sqrt(2.0 * (1.0 - alpha) * sigma * sigma * std::log(1.0 / delta));
            const int trials = 100'000;
            int exceed = 0;
            std::vector<double> xs(risk.sample_size());
            for (int t = 0; t < trials; ++t) {
                for (auto& x : xs) x = std::clamp(mu + sigma * standard_normal(rng), 0.0, 1.0);
                if (modified_cvar(xs, risk) > threshold) ++exceed;
            }
            CHECK(static_cast<double>(exceed) / trials <= delta);
        }
    }
}

TEST_CASE("normal helpers agree with the C library") {
    for (double x : {-5.0, -1.3, 0.0, 0.4, 2.2, 6.0}) {
        CHECK(normal_pdf(x) == doctest::Approx(oracle::phi(x)).epsilon(1e-14));
        CHECK(normal_cdf(x) == doctest::Approx(oracle::Phi(x)).epsilon(1e-13));
    }
    for (double p : {1e-8, 0.01, 0.3, 0.5, 0.77, 0.999}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
}
