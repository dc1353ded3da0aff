#include "brl/mdp.hpp"

#include <algorithm>
#include <cmath>

namespace brl {

TransitionKernel::TransitionKernel(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      data_(num_states * num_actions * num_states, 0.0) {}

TransitionKernel::TransitionKernel(std::size_t num_states, std::size_t num_actions,
                                   std::vector<double> probabilities)
    : num_states_(num_states), num_actions_(num_actions), data_(std::move(probabilities)) {
    if (data_.size() != num_states * num_actions * num_states) {
        throw ModelError("transition tensor has " + std::to_string(data_.size()) +
                         " entries, expected |S|*|A|*|S| = " +
                         std::to_string(num_states * num_actions * num_states));
    }
}

std::span<const double> TransitionKernel::row(StateId s, ActionId a) const {
    return {data_.data() + (s * num_actions_ + a) * num_states_, num_states_};
}

std::span<double> TransitionKernel::row(StateId s, ActionId a) {
    return {data_.data() + (s * num_actions_ + a) * num_states_, num_states_};
}

void TransitionKernel::check_stochastic(double tol) const {
    for (StateId s = 0; s < num_states_; ++s) {
        for (ActionId a = 0; a < num_actions_; ++a) {
            double total = 0.0;
            for (double p : row(s, a)) {
                if (!(p >= 0.0) || !std::isfinite(p)) {
                    throw ModelError("negative or non-finite transition probability at (" +
                                     std::to_string(s) + ", " + std::to_string(a) + ")");
                }
                total += p;
            }
            if (std::abs(total - 1.0) > tol) {
                throw ModelError("transition row (" + std::to_string(s) + ", " + std::to_string(a) +
                                 ") sums to " + std::to_string(total));
            }
        }
    }
}

TabularMdp::TabularMdp(TransitionKernel transition, std::vector<double> reward, double discount)
    : transition_(std::move(transition)), reward_(std::move(reward)), discount_(discount) {
    if (num_states() == 0 || num_actions() == 0) {
        throw ModelError("MDP needs at least one state and one action");
    }
    if (!(discount_ >= 0.0 && discount_ < 1.0)) {
        throw ModelError("discount must lie in [0, 1)");
    }
    if (reward_.size() != num_states() * num_actions()) {
        throw ModelError("reward table must have |S|*|A| entries");
    }
    for (double r : reward_) {
        if (!std::isfinite(r)) throw ModelError("reward table contains a non-finite entry");
    }
    transition_.check_stochastic();
}

void TabularMdp::check_policy(const DeterministicPolicy& policy) const {
    if (policy.size() != num_states()) {
        throw ModelError("policy covers " + std::to_string(policy.size()) + " states, MDP has " +
                         std::to_string(num_states()));
    }
    for (ActionId a : policy.action_of) {
        if (a >= num_actions()) throw ModelError("policy action index out of range");
    }
}

Eigen::MatrixXd TabularMdp::policy_matrix(const DeterministicPolicy& policy) const {
    check_policy(policy);
    const auto n = static_cast<Eigen::Index>(num_states());
    Eigen::MatrixXd p(n, n);
    for (StateId s = 0; s < num_states(); ++s) {
        const auto r = row(s, policy(s));
        for (StateId t = 0; t < num_states(); ++t) p(s, t) = r[t];
    }
    return p;
}

Eigen::VectorXd TabularMdp::policy_reward(const DeterministicPolicy& policy) const {
    check_policy(policy);
    Eigen::VectorXd r(num_states());
    for (StateId s = 0; s < num_states(); ++s) r(s) = reward(s, policy(s));
    return r;
}

ValueFunction evaluate_policy_iterative(const TabularMdp& mdp, const DeterministicPolicy& policy,
                                        double tol, std::size_t max_iter) {
    mdp.check_policy(policy);
    const std::size_t n = mdp.num_states();
    const Eigen::VectorXd r = mdp.policy_reward(policy);
    ValueFunction v = ValueFunction::Zero(n);
    ValueFunction next(n);
    double residual = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        for (StateId s = 0; s < n; ++s) {
            const auto row = mdp.row(s, policy(s));
            double ev = 0.0;
            for (StateId t = 0; t < n; ++t) ev += row[t] * v(t);
            next(s) = r(s) + mdp.discount() * ev;
        }
        residual = (next - v).lpNorm<Eigen::Infinity>();
        v.swap(next);
        if (residual <= tol) return v;
    }
    throw ConvergenceError("iterative policy evaluation did not converge", residual, max_iter);
}

ValueFunction evaluate_policy_exact(const TabularMdp& mdp, const DeterministicPolicy& policy) {
    if (mdp.num_states() > kDenseSolveLimit) {
        return evaluate_policy_iterative(mdp, policy, 1e-10 * (1.0 - mdp.discount()), 1'000'000);
    }
    const Eigen::Index n = static_cast<Eigen::Index>(mdp.num_states());
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(n, n) - mdp.discount() * mdp.policy_matrix(policy);
    return a.partialPivLu().solve(mdp.policy_reward(policy));
}

Eigen::MatrixXd q_values(const TabularMdp& mdp, const ValueFunction& v) {
    const auto expected = (mdp.transition().as_matrix() * v).eval();
    Eigen::MatrixXd q(mdp.num_states(), mdp.num_actions());
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        for (ActionId a = 0; a < mdp.num_actions(); ++a) {
            q(s, a) = mdp.reward(s, a) +
                      mdp.discount() * expected(static_cast<Eigen::Index>(s * mdp.num_actions() + a));
        }
    }
    return q;
}

DeterministicPolicy greedy_policy(const Eigen::MatrixXd& q) {
    DeterministicPolicy policy;
    policy.action_of.resize(static_cast<std::size_t>(q.rows()));
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        Eigen::Index best = 0;
        for (Eigen::Index a = 1; a < q.cols(); ++a) {
            if (q(s, a) > q(s, best)) best = a;
        }
        policy.action_of[static_cast<std::size_t>(s)] = static_cast<ActionId>(best);
    }
    return policy;
}

double bellman_residual(const TabularMdp& mdp, const ValueFunction& v) {
    const ValueFunction tv = q_values(mdp, v).rowwise().maxCoeff();
    return (tv - v).lpNorm<Eigen::Infinity>();
}

ValueIterationResult value_iteration(const TabularMdp& mdp, double tol, std::size_t max_iter) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    ValueFunction v = ValueFunction::Zero(mdp.num_states());
    double gap = 0.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        ValueFunction next = q_values(mdp, v).rowwise().maxCoeff();
        gap = (next - v).lpNorm<Eigen::Infinity>();
        v.swap(next);
        // residual(v_k) <= gamma * ||v_k - v_{k-1}||
        if (gap <= tol) {
            const Eigen::MatrixXd q = q_values(mdp, v);
            ValueIterationResult out;
            out.policy = greedy_policy(q);
            out.residual = (q.rowwise().maxCoeff() - v).lpNorm<Eigen::Infinity>();
            out.values = std::move(v);
            out.iterations = it;
            return out;
        }
    }
    throw ConvergenceError("value iteration did not converge", gap, max_iter);
}

Eigen::VectorXd stationary_distribution(const TabularMdp& mdp, const DeterministicPolicy& policy,
                                        double tol, std::size_t max_iter) {
    const Eigen::MatrixXd p = mdp.policy_matrix(policy);
    const Eigen::Index n = p.rows();
    const Eigen::MatrixXd lazy_t = (0.5 * (Eigen::MatrixXd::Identity(n, n) + p)).transpose();
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    double change = 0.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd next = lazy_t * x;
        next /= next.sum();
        change = (next - x).lpNorm<1>();
        x.swap(next);
        if (change <= tol) {
            const double residual = (p.transpose() * x - x).lpNorm<Eigen::Infinity>();
            if (residual > 1e-10) {
                throw ConvergenceError("stationary distribution residual too large", residual, it);
            }
            return x.cwiseMax(0.0) / x.cwiseMax(0.0).sum();
        }
    }
    throw ConvergenceError("power iteration for the stationary distribution did not converge",
                           change, max_iter);
}

StateId sample_from_row(std::span<const double> row, Rng& rng) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    StateId last_positive = 0;
    for (StateId t = 0; t < row.size(); ++t) {
        if (row[t] <= 0.0) continue;
        cumulative += row[t];
        last_positive = t;
        if (u < cumulative) return t;
    }
    // u landed in the rounding gap above the accumulated mass.
    return last_positive;
}

StepResult step(const TabularMdp& mdp, StateId s, ActionId a, Rng& rng) {
    if (s >= mdp.num_states() || a >= mdp.num_actions()) {
        throw ModelError("step: state or action index out of range");
    }
    return {sample_from_row(mdp.row(s, a), rng), mdp.reward(s, a)};
}

}  // namespace brl
