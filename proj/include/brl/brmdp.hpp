#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "brl/mdp.hpp"
#include "brl/posteriors.hpp"
#include "brl/random.hpp"
#include "brl/risk.hpp"

namespace brl {

/// Q(s, a) with states as rows and actions as columns.
using QFunction = Eigen::MatrixXd;

/// Expected one-step reward of every (s, a) row under `kernel` for a
/// transition reward R(s, a, s') stored like a kernel.
std::vector<double> expected_rewards(const TransitionKernel& kernel, std::span<const double> transition_reward);

/// R(s, a, s') = r(s, a) for every successor: a reward that does not depend on the model.
std::vector<double> constant_transition_reward(const TabularMdp& mdp);

/**
 * n sampled models theta_1..theta_n sharing a state/action space, used by the
 * approximate Bayesian-risk Bellman operator
 *
 *     (T V)(s) = max_a CVaR_alpha({ r_i(s, a) + gamma P_i(s, a) . V }_{i=1..n}).
 *
 * Rewards are either one known table shared by all models or one table per
 * model (when the reward depends on the unknown dynamics).
 */
class SampledEnsemble {
public:
    SampledEnsemble(std::vector<TransitionKernel> kernels, std::vector<double> shared_reward, double discount,
                    RiskConfig risk);
    SampledEnsemble(std::vector<TransitionKernel> kernels, std::vector<std::vector<double>> per_model_reward,
                    double discount, RiskConfig risk);

    /// Draws risk.sample_size() kernels from the posterior. An empty transition
    /// reward means `shared_reward` is known and used for every model.
    static SampledEnsemble draw(const KernelPosterior& posterior, std::span<const double> shared_reward,
                                std::span<const double> transition_reward, double discount, RiskConfig risk,
                                Rng& rng);

    std::size_t size() const noexcept { return size_; }
    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }
    double discount() const noexcept { return discount_; }
    const RiskConfig& risk() const noexcept { return risk_; }

    std::span<const double> row(std::size_t model, StateId s, ActionId a) const;
    double reward(std::size_t model, StateId s, ActionId a) const {
        return rewards_[(model * num_states_ + s) * num_actions_ + a];
    }

    /// All n*|S|*|A| values r_i(s, a) + gamma P_i(s, a) . V, model-major.
    Eigen::VectorXd reward_to_go(const ValueFunction& v) const;

private:
    void validate(std::vector<TransitionKernel>& kernels);

    std::size_t size_ = 0;
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    double discount_;
    RiskConfig risk_;
    std::vector<double> stacked_;  // (model, s, a, s')
    std::vector<double> rewards_;  // (model, s, a)
};

struct BellmanBackup {
    QFunction q;
    ValueFunction v;
    DeterministicPolicy greedy;
};

/// One application of the approximate operator; greedy ties go to the lowest action.
BellmanBackup approx_bellman(const SampledEnsemble& ensemble, const ValueFunction& v);

struct SolveOptions {
    double tol = 1e-10;
    std::size_t max_iter = 100'000;
    /// Run exactly this many sweeps instead of iterating to `tol`.
    std::optional<std::size_t> fixed_iterations;
};

struct BrmdpSolution {
    QFunction q;
    ValueFunction v;
    DeterministicPolicy policy;
    std::size_t iterations = 0;
    /// max-norm gap between the last two iterates.
    double residual = 0.0;
};

/// Q-value iteration on the approximate operator, from V = 0.
BrmdpSolution solve_brmdp(const SampledEnsemble& ensemble, const SolveOptions& options = {});

/**
 * Sampled rows of P(s, pi(s)) for one fixed policy: for each state, n rows.
 * This is all the policy-restricted operator
 *
 *     (T^pi V)(s) = CVaR_alpha({ r_i(s, pi(s)) + gamma P_i(s, pi(s)) . V }_i)
 *
 * ever reads, so it is the working form for policy evaluation.
 */
struct PolicyEnsemble {
    std::size_t num_states = 0;
    std::size_t size = 0;
    std::vector<double> rows;     // (s, model, s')
    std::vector<double> rewards;  // (s, model)
    double discount = 0.0;
    RiskConfig risk = RiskConfig::from_alpha(0.0);

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> rows_of(
        StateId s) const {
        return {rows.data() + s * size * num_states, static_cast<Eigen::Index>(size),
                static_cast<Eigen::Index>(num_states)};
    }
};

PolicyEnsemble restrict_to_policy(const SampledEnsemble& ensemble, const DeterministicPolicy& policy);

/// One application of T^pi.
ValueFunction apply_policy_operator(const PolicyEnsemble& ensemble, const ValueFunction& v);

/// Exactly `iterations` applications of T^pi starting from `v0`.
ValueFunction iterate_policy_operator(const PolicyEnsemble& ensemble, ValueFunction v0, std::size_t iterations);

/// Fixed point of T^pi to max-norm gap <= tol, starting from V = 0.
ValueFunction evaluate_policy_ensemble(const PolicyEnsemble& ensemble, double tol, std::size_t max_iter = 100'000);

/// V^{psi, pi} under the sampled posterior.
ValueFunction evaluate_brmdp_policy(const SampledEnsemble& ensemble, const DeterministicPolicy& policy,
                                    double tol, std::size_t max_iter = 100'000);

// ---------------------------------------------------------------------------
// Bayesian risk-averse posterior sampling for RL (episodic)

struct BrpsRlOptions {
    std::size_t episodes = 0;
    std::size_t episode_length = 10;
    RiskConfig risk = RiskConfig::from_alpha(0.0);
    SolveOptions solve{1e-10, 100'000, 100};
    StateId initial_state = 0;
    /// R(s, a, s') used to derive rewards of sampled models; empty means the
    /// environment's reward table is known to the agent.
    std::vector<double> transition_reward;
    /// When positive, also records approximate BR-Regret using an evaluation
    /// ensemble of this many kernels per episode (drawn from a separate stream).
    std::size_t br_eval_kernels = 0;
    std::uint64_t br_eval_seed = 0;
};

struct MdpRegretTrace {
    std::vector<StateId> states;        // s_{t, l} per stage
    std::vector<ActionId> actions;
    std::vector<double> regret;         // V*(s) - V^{pi_t}(s) per stage
    std::vector<double> cumulative_regret;
    std::vector<DeterministicPolicy> policies;  // one per episode
    std::vector<double> br_regret;      // approximate, only with br_eval_kernels > 0
    std::vector<double> cumulative_br_regret;
};

/// Episodes continue one trajectory: the last state of an episode starts the next.
MdpRegretTrace run_brps_rl(const TabularMdp& env, KernelPosterior& posterior, const BrpsRlOptions& options,
                           Rng& rng);

// ---------------------------------------------------------------------------
// Online Bayesian risk-averse value iteration with a UCB bonus

struct OnlineBrviOptions {
    std::size_t steps = 0;
    RiskConfig risk = RiskConfig::from_alpha(0.0);
    double delta = 0.05;
    StateId initial_state = 0;
};

struct OnlineBrviTrace {
    std::vector<StateId> states;
    std::vector<ActionId> actions;
    std::vector<double> regret;
    std::vector<double> cumulative_regret;
    QFunction final_q;
};

/// Called with (t, Q_t) for t = 0..T.
using QObserver = std::function<void(std::size_t, const QFunction&)>;

/// (3 gamma / (1 - gamma)) sqrt(|S|^2 / (2 (N + 1)) log(4 (n + 1) |S|^2 |A| T / delta))
double ucb_bonus(double discount, std::size_t num_states, std::size_t num_actions, std::size_t visits,
                 std::size_t sample_size, std::size_t horizon, double delta);

/// High-probability regret bound of online BRVI after T steps.
double online_brvi_regret_bound(double discount, std::size_t num_states, std::size_t num_actions, double alpha,
                                std::size_t horizon, double delta);

OnlineBrviTrace run_online_brvi(const TabularMdp& env, const OnlineBrviOptions& options, Rng& rng,
                                const QObserver& observer = {});

}  // namespace brl
