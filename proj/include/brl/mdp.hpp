#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "brl/random.hpp"

namespace brl {

using StateId = std::size_t;
using ActionId = std::size_t;

/// Value function indexed by state.
using ValueFunction = Eigen::VectorXd;

/// Raised when a model violates its structural invariants.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative method stops before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, std::size_t iterations)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + " after " +
                             std::to_string(iterations) + " iterations)"),
          residual_(residual),
          iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double residual_;
    std::size_t iterations_;
};

/**
 * Row-stochastic transition tensor P(s' | s, a).
 *
 * Stored densely with the (s, a) row contiguous, so the whole tensor is also
 * an (|S||A|) x |S| row-major matrix.
 */
class TransitionKernel {
public:
    using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    TransitionKernel() = default;
    TransitionKernel(std::size_t num_states, std::size_t num_actions);
    TransitionKernel(std::size_t num_states, std::size_t num_actions, std::vector<double> probabilities);

    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }

    std::span<const double> row(StateId s, ActionId a) const;
    std::span<double> row(StateId s, ActionId a);

    double operator()(StateId s, ActionId a, StateId next) const {
        return data_[(s * num_actions_ + a) * num_states_ + next];
    }

    const std::vector<double>& data() const noexcept { return data_; }

    /// The tensor viewed as a (|S||A|) x |S| matrix.
    Eigen::Map<const RowMajorMatrix> as_matrix() const {
        return {data_.data(), static_cast<Eigen::Index>(num_states_ * num_actions_),
                static_cast<Eigen::Index>(num_states_)};
    }

    /// Throws ModelError unless every row is nonnegative and sums to one within `tol`.
    void check_stochastic(double tol = 1e-12) const;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<double> data_;
};

/// Deterministic stationary policy.
struct DeterministicPolicy {
    std::vector<ActionId> action_of;

    ActionId operator()(StateId s) const { return action_of.at(s); }
    std::size_t size() const noexcept { return action_of.size(); }
    bool operator==(const DeterministicPolicy&) const = default;
};

/// Finite discounted MDP with deterministic rewards r(s, a).
class TabularMdp {
public:
    TabularMdp(TransitionKernel transition, std::vector<double> reward, double discount);

    std::size_t num_states() const noexcept { return transition_.num_states(); }
    std::size_t num_actions() const noexcept { return transition_.num_actions(); }
    double discount() const noexcept { return discount_; }

    const TransitionKernel& transition() const noexcept { return transition_; }
    std::span<const double> row(StateId s, ActionId a) const { return transition_.row(s, a); }

    double reward(StateId s, ActionId a) const { return reward_[s * num_actions() + a]; }
    const std::vector<double>& rewards() const noexcept { return reward_; }

    /// P^pi as a dense |S| x |S| matrix.
    Eigen::MatrixXd policy_matrix(const DeterministicPolicy& policy) const;
    /// r^pi.
    Eigen::VectorXd policy_reward(const DeterministicPolicy& policy) const;

    void check_policy(const DeterministicPolicy& policy) const;

private:
    TransitionKernel transition_;
    std::vector<double> reward_;
    double discount_;
};

struct StepResult {
    StateId next;
    double reward;
};

/// Solves (I - gamma P^pi) V = r^pi. Dense LU up to `kDenseSolveLimit` states,
/// otherwise iterates T^pi until the max-norm residual is below 1e-10.
ValueFunction evaluate_policy_exact(const TabularMdp& mdp, const DeterministicPolicy& policy);

inline constexpr std::size_t kDenseSolveLimit = 2048;

/// Iterative policy evaluation, exposed for large models and for tests.
ValueFunction evaluate_policy_iterative(const TabularMdp& mdp, const DeterministicPolicy& policy,
                                        double tol, std::size_t max_iter);

/// Q(s, a) = r(s, a) + gamma * P(s, a) . V
Eigen::MatrixXd q_values(const TabularMdp& mdp, const ValueFunction& v);

/// Argmax over actions per state; ties go to the lowest action index.
DeterministicPolicy greedy_policy(const Eigen::MatrixXd& q);

/// max-norm of T V - V for the optimal Bellman operator.
double bellman_residual(const TabularMdp& mdp, const ValueFunction& v);

struct ValueIterationResult {
    ValueFunction values;
    DeterministicPolicy policy;
    std::size_t iterations = 0;
    double residual = 0.0;
};

/// Value iteration from V = 0. The returned V has Bellman residual <= tol and
/// the policy is greedy with respect to it. Throws ConvergenceError past max_iter.
ValueIterationResult value_iteration(const TabularMdp& mdp, double tol, std::size_t max_iter);

/// Stationary distribution of P^pi by power iteration on the lazy chain (I + P^pi) / 2.
Eigen::VectorXd stationary_distribution(const TabularMdp& mdp, const DeterministicPolicy& policy,
                                        double tol = 1e-13, std::size_t max_iter = 10'000'000);

/// Samples s' by inverse CDF over a single uniform draw; r = reward(s, a).
StepResult step(const TabularMdp& mdp, StateId s, ActionId a, Rng& rng);

/// Inverse-CDF draw from one probability row.
StateId sample_from_row(std::span<const double> row, Rng& rng);

}  // namespace brl
