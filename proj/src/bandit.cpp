#include "brl/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "brl/mdp.hpp"

namespace brl {

void LinearBanditEnv::validate() const {
    if (theta.rows() < 1 || theta.cols() < 1) throw ModelError("bandit needs at least one arm and one dimension");
    if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) throw ModelError("noise scale must be nonnegative");
    if (!theta.allFinite()) throw ModelError("arm parameters must be finite");
}

Eigen::VectorXd LinearBanditEnv::sample_context(Rng& rng) const {
    Eigen::VectorXd s(theta.cols());
    for (Eigen::Index j = 0; j < s.size(); ++j) s[j] = uniform01(rng);
    if (contexts == ContextDistribution::scaled_cube) s /= std::sqrt(static_cast<double>(s.size()));
    return s;
}

double LinearBanditEnv::mean_reward(std::size_t arm, const Eigen::VectorXd& context) const {
    return theta.row(static_cast<Eigen::Index>(arm)).dot(context);
}

double LinearBanditEnv::sample_reward(std::size_t arm, const Eigen::VectorXd& context, Rng& rng) const {
    const double r = mean_reward(arm, context) + noise_scale * standard_normal(rng);
    return rewards == RewardModel::clipped ? std::clamp(r, 0.0, 1.0) : r;
}

LinearBanditEnv LinearBanditEnv::standard() {
    LinearBanditEnv env;
    env.theta.resize(10, 3);
    for (int i = 1; i <= 10; ++i) env.theta.row(i - 1) << 0.5, 0.5 + std::sin(i), 0.5 + std::cos(i);
    return env;
}

LinearBanditEnv LinearBanditEnv::bounded_standard() {
    LinearBanditEnv env = standard();
    // 0.5 + sin i lies in [-0.5, 1.5]; (x + 0.5) / 2 maps it into [0, 1].
    env.theta = ((env.theta.array() + 0.5) / 2.0).matrix() / std::sqrt(3.0);
    env.contexts = ContextDistribution::scaled_cube;
    env.rewards = RewardModel::clipped;
    return env;
}

void BanditRunConfig::validate(const LinearBanditEnv& env) const {
    env.validate();
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    if (fixed_scale && !(*fixed_scale > 0.0)) throw std::invalid_argument("fixed scale must be positive");
    if (!(prior_scale > 0.0)) throw std::invalid_argument("prior scale must be positive");
    if (br_alpha && !(*br_alpha >= 0.0 && *br_alpha < 1.0)) throw std::invalid_argument("br_alpha must lie in [0, 1)");
    if (variant == BanditVariant::truncated && !env.bounded())
        throw std::invalid_argument("the truncated variant requires the bounded bandit regime");
}

double nu_t(std::size_t t, std::size_t dim, double delta) {
    if (t < 1) throw std::invalid_argument("nu_t: t must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("nu_t: delta must lie in (0, 1)");
    return 0.75 * std::sqrt(static_cast<double>(dim) * std::log(4.0 * static_cast<double>(t) / delta));
}

double br_objective(const GaussianLinearPosterior& posterior, std::size_t arm, const Eigen::VectorXd& context,
                    double alpha, PayoffSampling mode) {
    const double mu = posterior.mean_payoff(arm, context);
    const double sigma = posterior.noise_scale() * std::sqrt(posterior.payoff_variance_factor(arm, context));
    return mode == PayoffSampling::truncated ? truncated_normal_cvar(mu, sigma, alpha)
                                             : normal_cvar(mu, sigma, alpha);
}

namespace {

std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

BanditTrace run(const LinearBanditEnv& env, const BanditRunConfig& config) {
    config.validate(env);
    const std::size_t K = env.num_arms();
    const std::size_t d = env.dim();
    const std::size_t n = config.risk.sample_size();
    const double alpha = config.risk.alpha();
    const double eval_alpha = config.br_alpha.value_or(alpha);
    const PayoffSampling mode =
        config.variant == BanditVariant::truncated ? PayoffSampling::truncated : PayoffSampling::plain;
    const double coefficient = normal_cvar_coefficient(eval_alpha);

    Rng env_rng = make_rng(config.seed, 0, 1);
    Rng agent_rng = make_rng(config.seed, 0, 2);
    GaussianLinearPosterior posterior(K, d, config.prior_scale);

    BanditTrace trace;
    trace.dim = d;
    trace.contexts.reserve(config.steps * d);
    for (auto* v : {&trace.rewards, &trace.regret, &trace.cumulative_regret, &trace.br_regret,
                    &trace.cumulative_br_regret})
        v->reserve(config.steps);

    std::vector<double> draws(n);
    std::vector<double> estimate(K);
    std::vector<double> objective(K);
    std::vector<double> truth(K);
    double total = 0.0;
    double total_br = 0.0;
    for (std::size_t t = 1; t <= config.steps; ++t) {
        const Eigen::VectorXd s = env.sample_context(env_rng);
        const double noise = standard_normal(env_rng);

        std::optional<double> scale = config.fixed_scale;
        if (config.variant == BanditVariant::inflated && !scale) scale = nu_t(t, d, config.delta);
        for (std::size_t k = 0; k < K; ++k) {
            posterior.sample_payoffs_into(k, s, agent_rng, mode, scale, draws);
            estimate[k] = empirical_cvar_inplace(draws, alpha);
            if (mode == PayoffSampling::truncated) {
                objective[k] = br_objective(posterior, k, s, eval_alpha, mode);
            } else {
                const double sigma = posterior.noise_scale() * std::sqrt(posterior.payoff_variance_factor(k, s));
                objective[k] = posterior.mean_payoff(k, s) - sigma * coefficient;
            }
            truth[k] = env.mean_reward(k, s);
        }
        const std::size_t a = argmax(estimate);
        const std::size_t a_star = argmax(truth);
        const std::size_t a_br = argmax(objective);

        double reward = truth[a] + env.noise_scale * noise;
        if (env.rewards == RewardModel::clipped) reward = std::clamp(reward, 0.0, 1.0);

        const double r = truth[a_star] - truth[a];
        const double b = objective[a_br] - objective[a];
        total += r;
        total_br += b;
        trace.contexts.insert(trace.contexts.end(), s.data(), s.data() + d);
        trace.arms.push_back(a);
        trace.rewards.push_back(reward);
        trace.optimal_arm.push_back(a_star);
        trace.br_optimal_arm.push_back(a_br);
        trace.regret.push_back(r);
        trace.cumulative_regret.push_back(total);
        trace.br_regret.push_back(b);
        trace.cumulative_br_regret.push_back(total_br);

        posterior.update(a, s, reward);
    }
    return trace;
}

}  // namespace

BanditTrace run_brps_cmab(const LinearBanditEnv& env, const BanditRunConfig& config) { return run(env, config); }

BanditTrace run_thompson(const LinearBanditEnv& env, const BanditRunConfig& config) {
    BanditRunConfig ts = config;
    ts.risk = RiskConfig::from_alpha(0.0);
    ts.variant = BanditVariant::plain;
    ts.br_alpha = config.br_alpha.value_or(0.0);
    return run(env, ts);
}

}  // namespace brl
