#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "brl/mdp.hpp"

namespace brl {

/**
 * Limit law of sqrt(N) (V_N - V^pi) for the sampled Bayesian-risk value of a
 * fixed policy:
 *
 *   sigma_s^2 = V^T (diag(P_s) - P_s P_s^T) V / nbar_s,   P_s = P(s, pi(s))
 *   lambda_s  = -sigma_s phi(Phi^{-1}(alpha)) / (1 - alpha)
 *   mean      = (I - gamma P^pi)^{-1} gamma lambda
 *   cov       = (I - gamma P^pi)^{-1} diag((gamma sigma)^2) (I - gamma P^pi)^{-T}
 */
struct LimitParams {
    Eigen::VectorXd lambda;
    Eigen::VectorXd sigma;
    Eigen::VectorXd mean_full;
    Eigen::MatrixXd cov_full;
};

/// `nbar` holds the long-run visit frequency of each state; every entry must be positive.
LimitParams limit_params(const TabularMdp& mdp, const DeterministicPolicy& policy, const Eigen::VectorXd& nbar,
                         double alpha);

struct DeviationOptions {
    std::size_t data_size = 0;
    std::size_t replications = 0;
    std::size_t posterior_samples = 5000;
    std::size_t vi_iterations = 100;
    double alpha = 0.0;
    /// A replication in which some (s, pi(s)) is visited fewer times is redrawn.
    std::size_t min_visits = 10;
    std::size_t max_redraws = 1000;
    StateId initial_state = 0;
    std::uint64_t seed = 0;
};

/**
 * One replication: a length-N trajectory under `policy`, a Dirichlet(1 + counts)
 * posterior on every row P(s, pi(s)), `posterior_samples` sampled rows per
 * state, `vi_iterations` sweeps of the sampled CVaR policy operator from V = 0,
 * and finally sqrt(N) (V_N - V^pi). Replication `rep` (attempt k) uses the
 * stream derive_seed(seed, rep, k).
 */
Eigen::VectorXd simulate_deviation(const TabularMdp& mdp, const DeterministicPolicy& policy,
                                   const ValueFunction& v_pi, const DeviationOptions& options, std::size_t rep);

/// Replications x |S| matrix of deviations, replication r in row r.
Eigen::MatrixXd simulate_deviations(const TabularMdp& mdp, const DeterministicPolicy& policy,
                                    const DeviationOptions& options);

/// (Phi^{-1}((i - 0.5) / reps) * sd + mean, i-th smallest deviation) for one state.
std::vector<std::pair<double, double>> qq_export(const Eigen::MatrixXd& deviations, const LimitParams& limit,
                                                 StateId state);

}  // namespace brl
