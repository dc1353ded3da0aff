#include "brl/normality.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "brl/posteriors.hpp"
#include "brl/risk.hpp"

namespace brl {

LimitParams limit_params(const TabularMdp& mdp, const DeterministicPolicy& policy, const Eigen::VectorXd& nbar,
                         double alpha) {
    mdp.check_policy(policy);
    const auto S = static_cast<Eigen::Index>(mdp.num_states());
    if (nbar.size() != S) throw ModelError("visit frequencies have the wrong size");
    if ((nbar.array() <= 0.0).any()) throw ModelError("every visit frequency must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("limit_params: alpha must lie in (0, 1)");

    const ValueFunction v = evaluate_policy_exact(mdp, policy);
    const double coefficient = normal_cvar_coefficient(alpha);
    const double gamma = mdp.discount();

    LimitParams out;
    out.lambda.resize(S);
    out.sigma.resize(S);
    for (Eigen::Index s = 0; s < S; ++s) {
        const auto row = mdp.row(static_cast<StateId>(s), policy(static_cast<StateId>(s)));
        const Eigen::Map<const Eigen::VectorXd> p(row.data(), S);
        // V^T (diag(p) - p p^T) V = sum p V^2 - (p . V)^2, evaluated centred for accuracy.
        const double mean = p.dot(v);
        const double var = std::max(0.0, p.dot((v.array() - mean).square().matrix()));
        out.sigma[s] = std::sqrt(var / nbar[s]);
        out.lambda[s] = -out.sigma[s] * coefficient;
    }
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(S, S) - gamma * mdp.policy_matrix(policy);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    out.mean_full = lu.solve(gamma * out.lambda);
    const Eigen::MatrixXd b = lu.solve(Eigen::MatrixXd((gamma * out.sigma).asDiagonal()));
    out.cov_full = b * b.transpose();
    return out;
}

Eigen::VectorXd simulate_deviation(const TabularMdp& mdp, const DeterministicPolicy& policy,
                                   const ValueFunction& v_pi, const DeviationOptions& options, std::size_t rep) {
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    const std::size_t n = options.posterior_samples;
    if (options.data_size < S * A) throw std::invalid_argument("simulate_deviation: data size below |S||A|");
    if (n == 0) throw std::invalid_argument("simulate_deviation: need at least one posterior sample");
    if (options.initial_state >= S) throw ModelError("initial state out of range");

    for (std::size_t attempt = 0; attempt <= options.max_redraws; ++attempt) {
        Rng rng = make_rng(options.seed, rep, attempt);
        DirichletTransitionPosterior posterior(S, A);
        StateId s = options.initial_state;
        for (std::size_t k = 0; k < options.data_size; ++k) {
            const ActionId a = policy(s);
            const StateId next = sample_from_row(mdp.row(s, a), rng);
            posterior.observe(s, a, next);
            s = next;
        }
        bool enough = true;
        for (StateId x = 0; x < S; ++x) enough = enough && posterior.observations(x, policy(x)) >= options.min_visits;
        if (!enough) continue;

        // rows(s) is an n x |S| block of sampled P(s, pi(s)).
        std::vector<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> rows(S);
        for (StateId x = 0; x < S; ++x) {
            rows[x].resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(S));
            for (std::size_t i = 0; i < n; ++i)
                posterior.sample_row(x, policy(x), rng,
                                     std::span<double>(rows[x].data() + i * S, S));
        }
        const Eigen::VectorXd r = mdp.policy_reward(policy);
        const double gamma = mdp.discount();
        ValueFunction v = ValueFunction::Zero(static_cast<Eigen::Index>(S));
        Eigen::VectorXd z(static_cast<Eigen::Index>(n));
        for (std::size_t it = 0; it < options.vi_iterations; ++it) {
            ValueFunction next(static_cast<Eigen::Index>(S));
            for (StateId x = 0; x < S; ++x) {
                z.noalias() = rows[x] * v;
                z = (r[static_cast<Eigen::Index>(x)] + gamma * z.array()).matrix();
                next[static_cast<Eigen::Index>(x)] =
                    empirical_cvar_inplace(std::span<double>(z.data(), n), options.alpha);
            }
            v = std::move(next);
        }
        return std::sqrt(static_cast<double>(options.data_size)) * (v - v_pi);
    }
    throw std::runtime_error("simulate_deviation: every redraw left some state under-visited; increase the data size");
}

Eigen::MatrixXd simulate_deviations(const TabularMdp& mdp, const DeterministicPolicy& policy,
                                    const DeviationOptions& options) {
    mdp.check_policy(policy);
    const ValueFunction v_pi = evaluate_policy_exact(mdp, policy);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(options.replications), static_cast<Eigen::Index>(mdp.num_states()));
    for (std::size_t rep = 0; rep < options.replications; ++rep)
        out.row(static_cast<Eigen::Index>(rep)) = simulate_deviation(mdp, policy, v_pi, options, rep).transpose();
    return out;
}

std::vector<std::pair<double, double>> qq_export(const Eigen::MatrixXd& deviations, const LimitParams& limit,
                                                 StateId state) {
    const auto reps = deviations.rows();
    if (reps < 2) throw std::invalid_argument("qq_export: need at least two replications");
    const auto s = static_cast<Eigen::Index>(state);
    if (s >= deviations.cols()) throw std::invalid_argument("qq_export: state out of range");
    std::vector<double> sorted(deviations.col(s).data(), deviations.col(s).data() + reps);
    std::sort(sorted.begin(), sorted.end());
    const double mean = limit.mean_full[s];
    const double sd = std::sqrt(std::max(0.0, limit.cov_full(s, s)));
    std::vector<std::pair<double, double>> out;
    out.reserve(sorted.size());
    for (Eigen::Index i = 0; i < reps; ++i) {
        const double q = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(reps));
        out.emplace_back(q * sd + mean, sorted[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace brl
