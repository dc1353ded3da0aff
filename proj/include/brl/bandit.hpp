#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "brl/posteriors.hpp"
#include "brl/random.hpp"
#include "brl/risk.hpp"

namespace brl {

enum class ContextDistribution {
    /// s ~ Uniform[0, 1]^d
    uniform_cube,
    /// Uniform[0, 1]^d scaled by 1 / sqrt(d), so that ||s|| <= 1.
    scaled_cube,
};

enum class RewardModel {
    /// R = s^T theta + eps, eps ~ N(0, noise^2)
    gaussian,
    /// The Gaussian reward clipped to [0, 1].
    clipped,
};

/// Linear-payoff contextual bandit with K arms in dimension d.
struct LinearBanditEnv {
    Eigen::MatrixXd theta;  // K x d, row k is theta_k
    double noise_scale = 1.0;
    ContextDistribution contexts = ContextDistribution::uniform_cube;
    RewardModel rewards = RewardModel::gaussian;

    std::size_t num_arms() const noexcept { return static_cast<std::size_t>(theta.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(theta.cols()); }

    /// Bounded regime: nonnegative contexts with ||s|| <= 1, rewards in [0, 1].
    bool bounded() const noexcept {
        return contexts == ContextDistribution::scaled_cube && rewards == RewardModel::clipped;
    }

    void validate() const;

    Eigen::VectorXd sample_context(Rng& rng) const;
    double mean_reward(std::size_t arm, const Eigen::VectorXd& context) const;
    double sample_reward(std::size_t arm, const Eigen::VectorXd& context, Rng& rng) const;

    /// K = 10, d = 3, theta_i = (0.5, 0.5 + sin i, 0.5 + cos i), s ~ Uniform[0, 1]^3, unit noise.
    static LinearBanditEnv standard();
    /// The same arms with every coordinate mapped to [0, 1] and divided by sqrt(3),
    /// scaled contexts and clipped rewards, so that s^T theta and R lie in [0, 1].
    static LinearBanditEnv bounded_standard();
};

enum class BanditVariant {
    /// Gaussian posterior draws.
    plain,
    /// Draws mapped to [0, 1].
    truncated,
    /// Posterior scale replaced by nu_t at step t.
    inflated,
};

struct BanditRunConfig {
    RiskConfig risk = RiskConfig::from_alpha(0.0);
    BanditVariant variant = BanditVariant::plain;
    double delta = 0.05;
    /// Constant posterior scale used for sampling instead of the prior scale.
    std::optional<double> fixed_scale;
    std::uint64_t seed = 0;
    std::size_t steps = 0;
    /// Prior N(0, prior_scale^2 I) for every arm.
    double prior_scale = 1.0;
    /// Risk level of the BR-Regret objective; defaults to risk.alpha().
    std::optional<double> br_alpha;

    void validate(const LinearBanditEnv& env) const;
};

struct BanditTrace {
    std::size_t dim = 0;
    std::vector<double> contexts;  // steps x dim, row-major
    std::vector<std::size_t> arms;
    std::vector<double> rewards;
    std::vector<std::size_t> optimal_arm;     // under the true parameters
    std::vector<std::size_t> br_optimal_arm;  // under the posterior CVaR objective
    std::vector<double> regret;
    std::vector<double> cumulative_regret;
    std::vector<double> br_regret;
    std::vector<double> cumulative_br_regret;

    std::size_t size() const noexcept { return arms.size(); }
};

/// nu_t = (3/4) sqrt(d ln(4 t / delta))
double nu_t(std::size_t t, std::size_t dim, double delta);

/// CVaR_alpha of s^T theta under the arm's posterior N(s^T theta_a, nu^2 s^T V_a^{-1} s);
/// truncated mode takes the CVaR of the draw mapped to [0, 1].
double br_objective(const GaussianLinearPosterior& posterior, std::size_t arm, const Eigen::VectorXd& context,
                    double alpha, PayoffSampling mode);

/// Bayesian risk-averse posterior sampling: per step, n posterior draws of each
/// arm's payoff, pull the arm with the largest empirical CVaR.
BanditTrace run_brps_cmab(const LinearBanditEnv& env, const BanditRunConfig& config);

/// Classical Thompson sampling (one draw per arm). config.risk is ignored
/// except through br_alpha, which sets the BR-Regret comparison level.
BanditTrace run_thompson(const LinearBanditEnv& env, const BanditRunConfig& config);

}  // namespace brl
