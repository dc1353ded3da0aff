#include "brl/brmdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace brl {

std::vector<double> expected_rewards(const TransitionKernel& kernel, std::span<const double> transition_reward) {
    const std::size_t rows = kernel.num_states() * kernel.num_actions();
    if (transition_reward.size() != rows * kernel.num_states())
        throw ModelError("transition reward size does not match the kernel");
    std::vector<double> out(rows);
    const auto& p = kernel.data();
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t j = 0; j < kernel.num_states(); ++j)
            acc += p[r * kernel.num_states() + j] * transition_reward[r * kernel.num_states() + j];
        out[r] = acc;
    }
    return out;
}

std::vector<double> constant_transition_reward(const TabularMdp& mdp) {
    const std::size_t S = mdp.num_states();
    std::vector<double> out;
    out.reserve(S * mdp.num_actions() * S);
    for (double r : mdp.rewards()) out.insert(out.end(), S, r);
    return out;
}

// --- SampledEnsemble -------------------------------------------------------

void SampledEnsemble::validate(std::vector<TransitionKernel>& kernels) {
    if (kernels.empty()) throw ModelError("ensemble needs at least one kernel");
    if (!(discount_ >= 0.0 && discount_ < 1.0)) throw ModelError("discount must lie in [0, 1)");
    size_ = kernels.size();
    num_states_ = kernels.front().num_states();
    num_actions_ = kernels.front().num_actions();
    stacked_.reserve(size_ * num_states_ * num_actions_ * num_states_);
    for (auto& k : kernels) {
        if (k.num_states() != num_states_ || k.num_actions() != num_actions_)
            throw ModelError("ensemble kernels have different shapes");
        k.check_stochastic(1e-9);
        stacked_.insert(stacked_.end(), k.data().begin(), k.data().end());
    }
}

SampledEnsemble::SampledEnsemble(std::vector<TransitionKernel> kernels, std::vector<double> shared_reward,
                                 double discount, RiskConfig risk)
    : discount_(discount), risk_(risk) {
    validate(kernels);
    if (shared_reward.size() != num_states_ * num_actions_) throw ModelError("reward table has the wrong size");
    rewards_.reserve(size_ * shared_reward.size());
    for (std::size_t i = 0; i < size_; ++i) rewards_.insert(rewards_.end(), shared_reward.begin(), shared_reward.end());
}

SampledEnsemble::SampledEnsemble(std::vector<TransitionKernel> kernels,
                                 std::vector<std::vector<double>> per_model_reward, double discount, RiskConfig risk)
    : discount_(discount), risk_(risk) {
    validate(kernels);
    if (per_model_reward.size() != size_) throw ModelError("need one reward table per kernel");
    rewards_.reserve(size_ * num_states_ * num_actions_);
    for (const auto& r : per_model_reward) {
        if (r.size() != num_states_ * num_actions_) throw ModelError("reward table has the wrong size");
        rewards_.insert(rewards_.end(), r.begin(), r.end());
    }
}

SampledEnsemble SampledEnsemble::draw(const KernelPosterior& posterior, std::span<const double> shared_reward,
                                      std::span<const double> transition_reward, double discount, RiskConfig risk,
                                      Rng& rng) {
    std::vector<TransitionKernel> kernels;
    kernels.reserve(risk.sample_size());
    for (std::size_t i = 0; i < risk.sample_size(); ++i) kernels.push_back(posterior.sample_kernel(rng));
    if (transition_reward.empty())
        return SampledEnsemble(std::move(kernels), std::vector<double>(shared_reward.begin(), shared_reward.end()),
                               discount, risk);
    std::vector<std::vector<double>> rewards;
    rewards.reserve(kernels.size());
    for (const auto& k : kernels) rewards.push_back(expected_rewards(k, transition_reward));
    return SampledEnsemble(std::move(kernels), std::move(rewards), discount, risk);
}

std::span<const double> SampledEnsemble::row(std::size_t model, StateId s, ActionId a) const {
    return {stacked_.data() + ((model * num_states_ + s) * num_actions_ + a) * num_states_, num_states_};
}

Eigen::VectorXd SampledEnsemble::reward_to_go(const ValueFunction& v) const {
    if (static_cast<std::size_t>(v.size()) != num_states_) throw ModelError("value function has the wrong size");
    const Eigen::Index rows = static_cast<Eigen::Index>(size_ * num_states_ * num_actions_);
    Eigen::Map<const TransitionKernel::RowMajorMatrix> p(stacked_.data(), rows,
                                                         static_cast<Eigen::Index>(num_states_));
    Eigen::Map<const Eigen::VectorXd> r(rewards_.data(), rows);
    return r + discount_ * (p * v);
}

// --- optimal operator ------------------------------------------------------

BellmanBackup approx_bellman(const SampledEnsemble& ensemble, const ValueFunction& v) {
    const std::size_t S = ensemble.num_states();
    const std::size_t A = ensemble.num_actions();
    const std::size_t n = ensemble.size();
    const Eigen::VectorXd z = ensemble.reward_to_go(v);
    const double alpha = ensemble.risk().alpha();

    BellmanBackup out{QFunction(S, A), ValueFunction(S), DeterministicPolicy{std::vector<ActionId>(S)}};
    std::vector<double> scratch(n);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            for (std::size_t i = 0; i < n; ++i) scratch[i] = z[static_cast<Eigen::Index>((i * S + s) * A + a)];
            out.q(s, a) = empirical_cvar_inplace(scratch, alpha);
        }
    }
    out.greedy = greedy_policy(out.q);
    for (std::size_t s = 0; s < S; ++s) out.v[s] = out.q(s, out.greedy.action_of[s]);
    return out;
}

BrmdpSolution solve_brmdp(const SampledEnsemble& ensemble, const SolveOptions& options) {
    ValueFunction v = ValueFunction::Zero(static_cast<Eigen::Index>(ensemble.num_states()));
    BrmdpSolution sol;
    const std::size_t limit = options.fixed_iterations.value_or(options.max_iter);
    if (options.fixed_iterations && *options.fixed_iterations == 0) {
        auto b = approx_bellman(ensemble, v);
        sol.q = std::move(b.q);
        sol.policy = std::move(b.greedy);
        sol.v = std::move(v);
        return sol;
    }
    for (std::size_t it = 1; it <= limit; ++it) {
        auto b = approx_bellman(ensemble, v);
        sol.residual = (b.v - v).lpNorm<Eigen::Infinity>();
        sol.iterations = it;
        v = b.v;
        sol.q = std::move(b.q);
        sol.policy = std::move(b.greedy);
        if (!options.fixed_iterations && sol.residual <= options.tol) break;
    }
    if (!options.fixed_iterations && sol.residual > options.tol)
        throw ConvergenceError("approximate Bellman iteration did not converge", sol.residual, sol.iterations);
    sol.v = std::move(v);
    return sol;
}

// --- policy operator -------------------------------------------------------

PolicyEnsemble restrict_to_policy(const SampledEnsemble& ensemble, const DeterministicPolicy& policy) {
    const std::size_t S = ensemble.num_states();
    if (policy.size() != S) throw ModelError("policy has the wrong number of states");
    PolicyEnsemble out;
    out.num_states = S;
    out.size = ensemble.size();
    out.discount = ensemble.discount();
    out.risk = ensemble.risk();
    out.rows.reserve(S * out.size * S);
    out.rewards.reserve(S * out.size);
    for (std::size_t s = 0; s < S; ++s) {
        const ActionId a = policy.action_of[s];
        if (a >= ensemble.num_actions()) throw ModelError("policy action out of range");
        for (std::size_t i = 0; i < out.size; ++i) {
            auto r = ensemble.row(i, s, a);
            out.rows.insert(out.rows.end(), r.begin(), r.end());
            out.rewards.push_back(ensemble.reward(i, s, a));
        }
    }
    return out;
}

ValueFunction apply_policy_operator(const PolicyEnsemble& ensemble, const ValueFunction& v) {
    const std::size_t S = ensemble.num_states;
    const std::size_t n = ensemble.size;
    ValueFunction out(static_cast<Eigen::Index>(S));
    Eigen::VectorXd scratch(static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < S; ++s) {
        scratch.noalias() = ensemble.rows_of(s) * v;
        for (std::size_t i = 0; i < n; ++i)
            scratch[static_cast<Eigen::Index>(i)] =
                ensemble.rewards[s * n + i] + ensemble.discount * scratch[static_cast<Eigen::Index>(i)];
        out[static_cast<Eigen::Index>(s)] =
            empirical_cvar_inplace(std::span<double>(scratch.data(), n), ensemble.risk.alpha());
    }
    return out;
}

ValueFunction iterate_policy_operator(const PolicyEnsemble& ensemble, ValueFunction v0, std::size_t iterations) {
    for (std::size_t k = 0; k < iterations; ++k) v0 = apply_policy_operator(ensemble, v0);
    return v0;
}

ValueFunction evaluate_policy_ensemble(const PolicyEnsemble& ensemble, double tol, std::size_t max_iter) {
    ValueFunction v = ValueFunction::Zero(static_cast<Eigen::Index>(ensemble.num_states));
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= max_iter; ++it) {
        ValueFunction next = apply_policy_operator(ensemble, v);
        gap = (next - v).lpNorm<Eigen::Infinity>();
        v = std::move(next);
        if (gap <= tol) return v;
    }
    throw ConvergenceError("policy evaluation did not converge", gap, max_iter);
}

ValueFunction evaluate_brmdp_policy(const SampledEnsemble& ensemble, const DeterministicPolicy& policy, double tol,
                                    std::size_t max_iter) {
    return evaluate_policy_ensemble(restrict_to_policy(ensemble, policy), tol, max_iter);
}

// --- BRPS-RL ---------------------------------------------------------------

namespace {

class PolicyValueCache {
public:
    explicit PolicyValueCache(const TabularMdp& env) : env_(env) {}
    const ValueFunction& operator()(const DeterministicPolicy& pi) {
        auto it = cache_.find(pi.action_of);
        if (it == cache_.end()) it = cache_.emplace(pi.action_of, evaluate_policy_exact(env_, pi)).first;
        return it->second;
    }

private:
    const TabularMdp& env_;
    std::map<std::vector<ActionId>, ValueFunction> cache_;
};

ValueFunction optimal_values(const TabularMdp& env) {
    return value_iteration(env, 1e-12, 1'000'000).values;
}

void check_start(const TabularMdp& env, StateId s) {
    if (s >= env.num_states()) throw ModelError("initial state out of range");
}

}  // namespace

MdpRegretTrace run_brps_rl(const TabularMdp& env, KernelPosterior& posterior, const BrpsRlOptions& options,
                           Rng& rng) {
    check_start(env, options.initial_state);
    if (posterior.num_states() != env.num_states() || posterior.num_actions() != env.num_actions())
        throw ModelError("posterior and environment shapes differ");
    if (options.episode_length == 0) throw ModelError("episode length must be positive");

    const ValueFunction v_star = optimal_values(env);
    PolicyValueCache values(env);
    MdpRegretTrace trace;
    const std::size_t stages = options.episodes * options.episode_length;
    trace.states.reserve(stages);
    trace.actions.reserve(stages);
    trace.regret.reserve(stages);
    trace.cumulative_regret.reserve(stages);
    trace.policies.reserve(options.episodes);

    const bool diagnose = options.br_eval_kernels > 0;
    const RiskConfig eval_risk = RiskConfig::with_sample_size(options.risk.alpha(), std::max<std::size_t>(
                                                                                        options.br_eval_kernels, 1));
    const SolveOptions eval_solve{1e-8, 100'000, std::nullopt};

    StateId s = options.initial_state;
    double total = 0.0;
    double total_br = 0.0;
    for (std::size_t t = 0; t < options.episodes; ++t) {
        auto ensemble = SampledEnsemble::draw(posterior, env.rewards(), options.transition_reward, env.discount(),
                                              options.risk, rng);
        DeterministicPolicy pi = solve_brmdp(ensemble, options.solve).policy;
        const ValueFunction& v_pi = values(pi);

        ValueFunction br_star, br_pi;
        if (diagnose) {
            Rng eval_rng = make_rng(derive_seed(options.br_eval_seed, t, 0));
            auto eval = SampledEnsemble::draw(posterior, env.rewards(), options.transition_reward, env.discount(),
                                              eval_risk, eval_rng);
            br_star = solve_brmdp(eval, eval_solve).v;
            br_pi = evaluate_brmdp_policy(eval, pi, 1e-8);
        }

        for (std::size_t l = 0; l < options.episode_length; ++l) {
            const ActionId a = pi(s);
            const double r = v_star[static_cast<Eigen::Index>(s)] - v_pi[static_cast<Eigen::Index>(s)];
            total += r;
            trace.states.push_back(s);
            trace.actions.push_back(a);
            trace.regret.push_back(r);
            trace.cumulative_regret.push_back(total);
            if (diagnose) {
                const double b = br_star[static_cast<Eigen::Index>(s)] - br_pi[static_cast<Eigen::Index>(s)];
                total_br += b;
                trace.br_regret.push_back(b);
                trace.cumulative_br_regret.push_back(total_br);
            }
            const StateId next = sample_from_row(env.row(s, a), rng);
            posterior.observe(s, a, next);
            s = next;
        }
        trace.policies.push_back(std::move(pi));
    }
    return trace;
}

// --- online BRVI -----------------------------------------------------------

double ucb_bonus(double discount, std::size_t num_states, std::size_t num_actions, std::size_t visits,
                 std::size_t sample_size, std::size_t horizon, double delta) {
    const double S = static_cast<double>(num_states);
    const double arg = 4.0 * (static_cast<double>(sample_size) + 1.0) * S * S * static_cast<double>(num_actions) *
                       static_cast<double>(horizon) / delta;
    return 3.0 * discount / (1.0 - discount) *
           std::sqrt(S * S / (2.0 * (static_cast<double>(visits) + 1.0)) * std::log(arg));
}

double online_brvi_regret_bound(double discount, std::size_t num_states, std::size_t num_actions, double alpha,
                                std::size_t horizon, double delta) {
    const double S = static_cast<double>(num_states);
    const double T = static_cast<double>(horizon);
    const double g = discount;
    const double c = (1.0 - g) * (1.0 - g);
    const double log_term =
        std::log(4.0 * (3.0 - 2.0 * alpha) * S * S * static_cast<double>(num_actions) * T / ((1.0 - alpha) * delta));
    const double count_term = std::min(S * std::sqrt(T + 1.0), std::sqrt(S * (T + 1.0) * std::log(T + 1.0)));
    return 6.0 * g / c * std::sqrt(S * S / 2.0 * log_term) * count_term + g * (2.0 * S + 2.0) / c +
           2.0 * g / c * std::sqrt(2.0 * T * std::log(2.0 / delta));
}

OnlineBrviTrace run_online_brvi(const TabularMdp& env, const OnlineBrviOptions& options, Rng& rng,
                                const QObserver& observer) {
    check_start(env, options.initial_state);
    if (!(options.delta > 0.0 && options.delta < 1.0)) throw ModelError("delta must lie in (0, 1)");
    const std::size_t S = env.num_states();
    const std::size_t A = env.num_actions();
    const std::size_t n = options.risk.sample_size();
    const double gamma = env.discount();
    const double alpha = options.risk.alpha();
    const std::size_t horizon = std::max<std::size_t>(options.steps, 1);

    const ValueFunction v_star = optimal_values(env);
    PolicyValueCache values(env);
    DirichletTransitionPosterior posterior(S, A);
    std::vector<std::size_t> visits(S * A, 0);

    const double initial = 1.0 / (1.0 - gamma);
    QFunction q = QFunction::Constant(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A), initial);
    ValueFunction v = ValueFunction::Constant(static_cast<Eigen::Index>(S), initial);
    if (observer) observer(0, q);

    OnlineBrviTrace trace;
    trace.states.reserve(options.steps);
    trace.actions.reserve(options.steps);
    trace.regret.reserve(options.steps);
    trace.cumulative_regret.reserve(options.steps);

    std::vector<double> row(S);
    std::vector<double> z(n);
    StateId s = options.initial_state;
    double total = 0.0;
    for (std::size_t t = 0; t < options.steps; ++t) {
        const DeterministicPolicy pi = greedy_policy(q);
        const ActionId a = pi(s);
        const double r = v_star[static_cast<Eigen::Index>(s)] - values(pi)[static_cast<Eigen::Index>(s)];
        total += r;
        trace.states.push_back(s);
        trace.actions.push_back(a);
        trace.regret.push_back(r);
        trace.cumulative_regret.push_back(total);
        const StateId next = sample_from_row(env.row(s, a), rng);

        // Every candidate r + gamma * CVaR + bonus is at least r + gamma * min V + bonus,
        // so when that already reaches Q_t(s, a) the min leaves Q unchanged and the
        // posterior draws can be skipped.
        const double v_min = v.minCoeff();
        QFunction q_next = q;
        for (std::size_t si = 0; si < S; ++si) {
            for (std::size_t ai = 0; ai < A; ++ai) {
                const double bonus = ucb_bonus(gamma, S, A, visits[si * A + ai], n, horizon, options.delta);
                const double base = env.reward(si, ai) + bonus;
                const auto qi = static_cast<Eigen::Index>(si);
                const auto qa = static_cast<Eigen::Index>(ai);
                if (base + gamma * v_min >= q(qi, qa)) continue;
                for (std::size_t i = 0; i < n; ++i) {
                    posterior.sample_row(si, ai, rng, row);
                    double acc = 0.0;
                    for (std::size_t j = 0; j < S; ++j) acc += row[j] * v[static_cast<Eigen::Index>(j)];
                    z[i] = acc;
                }
                const double rho = empirical_cvar_inplace(z, alpha);
                q_next(qi, qa) = std::min(q(qi, qa), base + gamma * rho);
            }
        }
        posterior.observe(s, a, next);
        ++visits[s * A + a];
        q = std::move(q_next);
        v = q.rowwise().maxCoeff();
        if (observer) observer(t + 1, q);
        s = next;
    }
    trace.final_q = std::move(q);
    return trace;
}

}  // namespace brl
