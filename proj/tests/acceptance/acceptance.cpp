// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: brl_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../common/oracles.hpp"
#include "brl/bandit.hpp"
#include "brl/brmdp.hpp"
#include "brl/config.hpp"
#include "brl/environments.hpp"
#include "brl/experiment.hpp"
#include "brl/format.hpp"
#include "brl/normality.hpp"
#include "brl/posteriors.hpp"
#include "brl/risk.hpp"
#include "brl/stats.hpp"

using namespace brl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            note("violated: " + what);
        }
    }
    void note(const std::string& text) {
        if (!detail.empty()) detail += "; ";
        detail += text;
    }
};

std::string fmt(double x, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << x;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::size_t thread_budget() { return resolve_threads(1, std::nullopt); }

const Curve& find_curve(const AggregateResult& r, const std::string& algorithm, double alpha) {
    for (const auto& c : r.curves)
        if (c.algorithm == algorithm && c.alpha == alpha) return c;
    throw std::runtime_error("missing curve " + algorithm + " " + fmt(alpha));
}

// ---------------------------------------------------------------------------

Outcome cvar_oracle() {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    Rng rng = make_rng(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        std::vector<double> xs(n);
        for (auto& x : xs) x = 10.0 * standard_normal(rng);
        const double alpha = 0.95 * uniform01(rng);
        worst = std::max(worst, std::abs(empirical_cvar(xs, alpha) - oracle::cvar_grid(xs, alpha)));
    }
    const double elapsed = seconds_since(start);
    out.require(worst <= 1e-7, "max error " + fmt(worst) + " > 1e-7");
    out.require(elapsed < 10.0, "runtime " + fmt(elapsed) + " s");
    out.note("max |error| " + fmt(worst, 3) + " over 1000 instances in " + fmt(elapsed, 2) + " s");
    return out;
}

Outcome coherence() {
    Outcome out;
    Rng rng = make_rng(1002);
    const double alphas[] = {0.0, 0.5, 0.75, 0.875};
    std::size_t exact_checks = 0;
    // Dyadic samples and levels keep every intermediate exact, so equalities are bitwise.
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = std::size_t{1} << (1 + rng() % 5);
        std::vector<double> xs(n), shifted(n), scaled(n);
        for (auto& x : xs) x = static_cast<double>(static_cast<int>(rng() % 2001) - 1000) / 8.0;
        const double alpha = alphas[rng() % 4];
        const double c = static_cast<double>(static_cast<int>(rng() % 201) - 100) / 4.0;
        const double lambda = static_cast<double>(rng() % 64) / 16.0;
        for (std::size_t i = 0; i < n; ++i) {
            shifted[i] = xs[i] + c;
            scaled[i] = lambda * xs[i];
        }
        const double base = empirical_cvar(xs, alpha);
        if (empirical_cvar(shifted, alpha) != base + c) out.require(false, "translation invariance");
        if (empirical_cvar(scaled, alpha) != lambda * base) out.require(false, "positive homogeneity");
        exact_checks += 2;
    }
    // Generic doubles: equal up to rounding of the final average.
    double worst_rel = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        std::vector<double> xs(n), shifted(n), scaled(n);
        for (auto& x : xs) x = standard_normal(rng);
        const double alpha = 0.99 * uniform01(rng);
        const double c = 3.0 * standard_normal(rng);
        const double lambda = 5.0 * uniform01(rng);
        for (std::size_t i = 0; i < n; ++i) {
            shifted[i] = xs[i] + c;
            scaled[i] = lambda * xs[i];
        }
        const double base = empirical_cvar(xs, alpha);
        const double scale = 1.0 + std::abs(base) + std::abs(c) + lambda;
        worst_rel = std::max(worst_rel, std::abs(empirical_cvar(shifted, alpha) - (base + c)) / scale);
        worst_rel = std::max(worst_rel, std::abs(empirical_cvar(scaled, alpha) - lambda * base) / scale);
    }
    out.require(worst_rel <= 1e-13, "generic-double deviation " + fmt(worst_rel));
    std::size_t dominated = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        std::vector<double> xs(n), ys(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = standard_normal(rng);
            ys[i] = xs[i] + std::abs(standard_normal(rng));
        }
        const double alpha = 0.99 * uniform01(rng);
        if (empirical_cvar(ys, alpha) < empirical_cvar(xs, alpha)) out.require(false, "monotonicity");
        ++dominated;
    }
    std::size_t level_checks = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        std::vector<double> xs(n);
        for (auto& x : xs) x = standard_normal(rng);
        double prev = empirical_cvar(xs, 0.0);
        for (int k = 1; k < 100; ++k) {
            const double cur = empirical_cvar(xs, k / 100.0);
            if (cur > prev + 1e-14 * (1.0 + std::abs(prev))) out.require(false, "non-increasing in alpha");
            prev = cur;
            ++level_checks;
        }
    }
    out.note(std::to_string(exact_checks) + " bit-exact dyadic checks, generic rel. dev " + fmt(worst_rel, 2) + ", " +
             std::to_string(dominated) + " dominated pairs, " + std::to_string(level_checks) + " level steps");
    return out;
}

Outcome order_statistics() {
    Outcome out;
    Rng rng = make_rng(1003);
    const int draws = 1'000'000;
    double worst_z = INFINITY;
    for (int family = 0; family < 2; ++family) {
        for (int n = 2; n <= 10; ++n) {
            RunningStats first, second;
            std::vector<double> xs(static_cast<std::size_t>(n));
            for (int t = 0; t < draws; ++t) {
                for (auto& x : xs)
                    x = family == 0 ? uniform01(rng) : std::clamp(0.5 + 0.3 * standard_normal(rng), 0.0, 1.0);
                std::partial_sort(xs.begin(), xs.begin() + 2, xs.end());
                first.add(xs[0]);
                second.add(xs[1]);
            }
            const double c1 = family == 0 ? 0.5 / n : oracle::truncated_cvar(0.5, 0.3, 1.0 - 1.0 / n);
            const double c2 = family == 0 ? 1.0 / n : oracle::truncated_cvar(0.5, 0.3, 1.0 - 2.0 / n);
            const double z1 = (first.mean() - c1) / first.standard_error();
            const double z2 = (second.mean() - c2) / second.standard_error();
            worst_z = std::min({worst_z, z1, z2});
            const std::string tag = std::string(family == 0 ? "uniform" : "truncated normal") + " n=" + std::to_string(n);
            out.require(z1 > -3.0, tag + " first order statistic z=" + fmt(z1));
            out.require(z2 > -3.0, tag + " second order statistic z=" + fmt(z2));
        }
    }
    out.note("smallest standardized gap " + fmt(worst_z, 3) + " SE over 36 comparisons");
    return out;
}

Outcome normality() {
    Outcome out;
    const double z99 = normal_quantile(0.995);
    {
        Rng inst = make_rng(1004);
        const TabularMdp mdp = random_mdp(3, 2, 0.8, inst);
        const auto vi = value_iteration(mdp, 1e-12, 100'000);
        const Eigen::VectorXd nbar = stationary_distribution(mdp, vi.policy);
        const auto lp = limit_params(mdp, vi.policy, nbar, 0.8);
        DeviationOptions options;
        options.data_size = 100'000;
        options.replications = 500;
        options.alpha = 0.8;
        options.seed = 1005;
        const Eigen::MatrixXd dev = simulate_deviations(mdp, vi.policy, options);
        for (Eigen::Index s = 0; s < 3; ++s) {
            RunningStats st;
            for (Eigen::Index r = 0; r < dev.rows(); ++r) st.add(dev(r, s));
            const double sd = std::sqrt(lp.cov_full(s, s));
            const double half = z99 * sd / std::sqrt(static_cast<double>(dev.rows()));
            const std::string tag = "s" + std::to_string(s);
            out.require(std::abs(st.mean() - lp.mean_full(s)) <= half,
                        tag + " mean " + fmt(st.mean()) + " outside " + fmt(lp.mean_full(s)) + " +/- " + fmt(half));
            out.require(std::abs(st.stddev() / sd - 1.0) <= 0.10,
                        tag + " sd " + fmt(st.stddev()) + " vs " + fmt(sd));
            out.note(tag + ": mean " + fmt(st.mean()) + " (limit " + fmt(lp.mean_full(s)) + " +/- " + fmt(half) +
                     "), sd " + fmt(st.stddev()) + " (limit " + fmt(sd) + ")");
        }
    }
    {
        const FrozenLakeLayout layout;
        const TabularMdp mdp = build_frozen_lake(layout);
        const auto vi = value_iteration(mdp, 1e-12, 100'000);
        const Eigen::VectorXd nbar = stationary_distribution(mdp, vi.policy);
        const auto lp = limit_params(mdp, vi.policy, nbar, 0.8);
        DeviationOptions options;
        options.data_size = 10'000;
        options.replications = 100;
        options.alpha = 0.8;
        options.initial_state = layout.index(layout.start);
        options.seed = 1006;
        const Eigen::MatrixXd dev = simulate_deviations(mdp, vi.policy, options);
        const Eigen::Index s = 10;
        std::vector<double> column(static_cast<std::size_t>(dev.rows()));
        RunningStats st;
        for (Eigen::Index r = 0; r < dev.rows(); ++r) {
            column[static_cast<std::size_t>(r)] = dev(r, s);
            st.add(dev(r, s));
        }
        const double mean = lp.mean_full(s);
        const double sd = std::sqrt(lp.cov_full(s, s));
        const double d = ks_statistic(column, [&](double x) { return oracle::Phi((x - mean) / sd); });
        const double crit = ks_critical_value(column.size(), 0.01);
        out.require(st.mean() < 0.0, "frozen lake s10 empirical mean " + fmt(st.mean()) + " not negative");
        out.require(d < crit, "frozen lake s10 KS " + fmt(d) + " >= " + fmt(crit));
        out.note("frozen lake s10: mean " + fmt(st.mean()) + " (limit " + fmt(mean) + "), KS " + fmt(d, 3) +
                 (d < crit ? " < " : " >= ") + fmt(crit, 3));
    }
    return out;
}

Outcome negative_bias() {
    Outcome out;
    Rng rng = make_rng(1007);
    std::size_t checked = 0;
    double largest = -INFINITY;
    auto check = [&](const TabularMdp& mdp, const DeterministicPolicy& pi) {
        const Eigen::VectorXd nbar = stationary_distribution(mdp, pi);
        for (double alpha : {0.5, 0.8, 0.9}) {
            const auto lp = limit_params(mdp, pi, nbar, alpha);
            largest = std::max(largest, lp.mean_full.maxCoeff());
            if (lp.mean_full.maxCoeff() > 0.0) out.require(false, "positive bias entry");
            ++checked;
        }
    };
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t S = 2 + rng() % 7;
        const std::size_t A = 1 + rng() % 3;
        const TabularMdp mdp = random_mdp(S, A, 0.5 + 0.45 * uniform01(rng), rng);
        DeterministicPolicy pi{std::vector<ActionId>(S)};
        for (auto& a : pi.action_of) a = rng() % A;
        check(mdp, pi);
    }
    for (double p_h : {0.1, 0.5, 0.8}) {
        FrozenLakeLayout layout;
        layout.hole_exit = p_h;
        const TabularMdp mdp = build_frozen_lake(layout);
        check(mdp, value_iteration(mdp, 1e-12, 100'000).policy);
    }
    out.note(std::to_string(checked) + " (MDP, alpha) cases, largest entry " + fmt(largest, 3));
    return out;
}

// Criteria 6 and 7 share the bandit experiment.
const AggregateResult& bandit_result(double* seconds = nullptr) {
    static std::optional<AggregateResult> cached;
    static double elapsed = 0.0;
    if (!cached) {
        ExperimentConfig c;
        c.kind = ExperimentKind::bandit_regret;
        c.preset = "linear-bandit";
        c.replications = 50;
        c.seed = 2024;
        c.steps = 20'000;
        c.alphas = {0.5, 0.8, 0.9};
        c.threads = thread_budget();
        c.validate();
        const auto start = std::chrono::steady_clock::now();
        cached = compute_experiment(c);
        elapsed = seconds_since(start);
    }
    if (seconds) *seconds = elapsed;
    return *cached;
}

Outcome bandit_ordering() {
    Outcome out;
    double elapsed = 0.0;
    const auto& r = bandit_result(&elapsed);
    for (double a : {0.5, 0.8, 0.9}) {
        const auto& ours = find_curve(r, "brps-cmab-br", a);
        const auto& ts = find_curve(r, "thompson-br", a);
        const double hi = ours.mean.back() + ours.half_width.back();
        const double lo = ts.mean.back() - ts.half_width.back();
        out.require(hi < lo, "alpha " + fmt(a) + " intervals overlap");
        out.note("alpha " + fmt(a) + ": BRPS-CMAB " + fmt(ours.mean.back()) + " +/- " + fmt(ours.half_width.back()) +
                 " vs Thompson " + fmt(ts.mean.back()) + " +/- " + fmt(ts.half_width.back()));
    }
    out.require(elapsed < 600.0, "runtime " + fmt(elapsed) + " s");
    out.note("runtime " + fmt(elapsed, 3) + " s");
    return out;
}

Outcome sublinearity() {
    Outcome out;
    const auto& r = bandit_result();
    auto ratio = [](const Curve& c) { return c.mean[2 * 10'000 - 1] / c.mean[10'000 - 1]; };
    for (double a : {0.5, 0.8, 0.9}) {
        const double conv = ratio(find_curve(r, "brps-cmab", a));
        const double br = ratio(find_curve(r, "brps-cmab-br", a));
        out.require(conv < 2.0, "BRPS-CMAB regret ratio at alpha " + fmt(a) + " = " + fmt(conv));
        out.require(br < 2.0, "BRPS-CMAB BR-regret ratio at alpha " + fmt(a) + " = " + fmt(br));
        out.note("BRPS-CMAB alpha " + fmt(a) + " ratios " + fmt(conv, 3) + "/" + fmt(br, 3));
    }
    const double ts = ratio(find_curve(r, "thompson", 0.0));
    out.require(ts < 2.0, "Thompson ratio " + fmt(ts));
    out.note("Thompson " + fmt(ts, 3));

    // Online BRVI on Frozen Lake. Q stays at its upper bound for roughly half a
    // million steps while the bonus dominates, so the comparison is 2e6 vs 4e6.
    const TabularMdp env = build_frozen_lake(FrozenLakeLayout{});
    const std::size_t T = 2'000'000;
    const double alpha = 0.8;
    const double delta = 0.05;
    const std::size_t seeds = 3;
    std::vector<OnlineBrviTrace> traces(seeds);
    parallel_for(seeds, thread_budget(), [&](std::size_t i) {
        OnlineBrviOptions options;
        options.steps = 2 * T;
        options.risk = RiskConfig::from_alpha(alpha);
        options.delta = delta;
        Rng rng = make_rng(1008, i, 1);
        traces[i] = run_online_brvi(env, options, rng);
    });
    RunningStats at_t, at_2t;
    std::size_t bound_checks = 0;
    for (const auto& trace : traces) {
        at_t.add(trace.cumulative_regret[T - 1]);
        at_2t.add(trace.cumulative_regret[2 * T - 1]);
        for (std::size_t t = 1; t <= 2 * T; t *= 2) {
            const double bound = online_brvi_regret_bound(env.discount(), 16, 4, alpha, t, delta);
            if (trace.cumulative_regret[t - 1] > bound) out.require(false, "bound exceeded at t=" + std::to_string(t));
            ++bound_checks;
        }
        const double bound = online_brvi_regret_bound(env.discount(), 16, 4, alpha, 2 * T, delta);
        if (trace.cumulative_regret.back() > bound) out.require(false, "bound exceeded at the horizon");
        ++bound_checks;
    }
    const double brvi = at_2t.mean() / at_t.mean();
    out.require(brvi < 2.0, "online BRVI ratio " + fmt(brvi));
    out.note("online BRVI " + fmt(brvi, 3) + " (" + fmt(at_t.mean(), 6) + " -> " + fmt(at_2t.mean(), 6) + ", " +
             std::to_string(bound_checks) + " bound checks, bound at 4e6 " +
             fmt(online_brvi_regret_bound(env.discount(), 16, 4, alpha, 2 * T, delta), 3) + ")");
    return out;
}

AggregateResult frozen_lake_regret(double hole_exit, std::vector<double> alphas) {
    ExperimentConfig c;
    c.kind = ExperimentKind::mdp_regret;
    c.preset = "frozen-lake";
    c.hole_exit = hole_exit;
    c.replications = 100;
    c.seed = 2025;
    c.steps = 100;
    c.episode_length = 10;
    c.alphas = std::move(alphas);
    c.threads = thread_budget();
    c.validate();
    return compute_experiment(c);
}

Outcome frozen_lake_ordering() {
    Outcome out;
    auto final_of = [](const AggregateResult& r, double a) {
        const auto& c = find_curve(r, "brps-rl", a);
        return std::make_pair(c.mean.back(), c.half_width.back());
    };
    const auto low = frozen_lake_regret(0.1, {0.0, 0.8, 0.9});
    const auto base = final_of(low, 0.0);
    for (double a : {0.8, 0.9}) {
        const auto v = final_of(low, a);
        out.require(v.first < base.first, "p_h=0.1 alpha " + fmt(a) + " not below alpha 0");
        out.note("p_h=0.1 alpha " + fmt(a) + ": " + fmt(v.first) + " +/- " + fmt(v.second) + " vs alpha 0: " +
                 fmt(base.first) + " +/- " + fmt(base.second));
    }
    const auto high = frozen_lake_regret(0.8, {0.8, 0.99});
    const auto a8 = final_of(high, 0.8);
    const auto a99 = final_of(high, 0.99);
    out.require(a8.first < a99.first, "p_h=0.8 alpha 0.8 not below alpha 0.99");
    out.note("p_h=0.8 alpha 0.8: " + fmt(a8.first) + " +/- " + fmt(a8.second) + " vs alpha 0.99: " + fmt(a99.first) +
             " +/- " + fmt(a99.second));
    return out;
}

/// Solves A x = b by Gaussian elimination with partial pivoting in long double.
std::vector<long double> solve_dense(std::vector<std::vector<long double>> A, std::vector<long double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(A[r][col]) > std::fabs(A[pivot][col])) pivot = r;
        std::swap(A[col], A[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const long double f = A[r][col] / A[col][col];
            for (std::size_t k = col; k < n; ++k) A[r][k] -= f * A[col][k];
            b[r] -= f * b[col];
        }
    }
    std::vector<long double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        long double acc = b[i];
        for (std::size_t k = i + 1; k < n; ++k) acc -= A[i][k] * x[k];
        x[i] = acc / A[i][i];
    }
    return x;
}

Outcome conjugate_updates() {
    Outcome out;
    Rng rng = make_rng(1009);
    const std::size_t S = 6, A = 3, updates = 10'000;
    DirichletTransitionPosterior dir(S, A);
    std::vector<std::array<std::size_t, 3>> raw;
    for (std::size_t i = 0; i < updates; ++i) {
        const std::array<std::size_t, 3> obs{rng() % S, rng() % A, rng() % S};
        raw.push_back(obs);
        dir.observe(obs[0], obs[1], obs[2]);
    }
    double dir_err = 0.0;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t t = 0; t < S; ++t) {
                double expected = 1.0;
                for (const auto& o : raw)
                    if (o[0] == s && o[1] == a && o[2] == t) expected += 1.0;
                dir_err = std::max(dir_err, std::abs(dir.counts(s, a)[t] - expected));
            }
    out.require(dir_err <= 1e-10, "dirichlet count error " + fmt(dir_err));

    const std::size_t K = 3, d = 3;
    GaussianLinearPosterior gauss(K, d, 1.0);
    std::vector<std::vector<std::pair<Eigen::VectorXd, double>>> data(K);
    const auto env = LinearBanditEnv::bounded_standard();
    for (std::size_t i = 0; i < updates; ++i) {
        const std::size_t arm = rng() % K;
        const Eigen::VectorXd s = env.sample_context(rng);
        const double r = env.sample_reward(arm, s, rng);
        data[arm].emplace_back(s, r);
        gauss.update(arm, s, r);
    }
    double v_err = 0.0, b_err = 0.0, theta_err = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<std::vector<long double>> V(d, std::vector<long double>(d, 0.0L));
        std::vector<long double> b(d, 0.0L);
        for (std::size_t i = 0; i < d; ++i) V[i][i] = 1.0L;
        for (const auto& [s, r] : data[k])
            for (std::size_t i = 0; i < d; ++i) {
                b[i] += static_cast<long double>(s(static_cast<Eigen::Index>(i))) * r;
                for (std::size_t j = 0; j < d; ++j)
                    V[i][j] += static_cast<long double>(s(static_cast<Eigen::Index>(i))) * s(static_cast<Eigen::Index>(j));
            }
        const auto theta = solve_dense(V, b);
        for (std::size_t i = 0; i < d; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            for (std::size_t j = 0; j < d; ++j) {
                const long double ref = V[i][j];
                v_err = std::max(v_err, static_cast<double>(std::fabs(gauss.precision(k)(ii, static_cast<Eigen::Index>(j)) - ref) /
                                                            std::max(1.0L, std::fabs(ref))));
            }
            b_err = std::max(b_err, static_cast<double>(std::fabs(gauss.accumulator(k)(ii) - b[i]) /
                                                        std::max(1.0L, std::fabs(b[i]))));
            theta_err = std::max(theta_err, static_cast<double>(std::fabs(gauss.mean(k)(ii) - theta[i])));
        }
    }
    out.require(v_err <= 1e-10, "V relative error " + fmt(v_err));
    out.require(b_err <= 1e-10, "b relative error " + fmt(b_err));
    out.require(theta_err <= 1e-10, "theta error " + fmt(theta_err));
    out.note("dirichlet " + fmt(dir_err, 2) + ", V rel " + fmt(v_err, 2) + ", b rel " + fmt(b_err, 2) + ", theta " +
             fmt(theta_err, 2) + " after 1e4 updates each");
    return out;
}

Outcome brvi_invariants() {
    Outcome out;
    const std::size_t runs = 200;
    const double gamma = 0.7, delta = 0.05;
    std::vector<int> optimistic(runs, 0), monotone(runs, 0), bounded(runs, 0);
    parallel_for(runs, thread_budget(), [&](std::size_t i) {
        Rng inst = make_rng(1010, i, 0);
        const TabularMdp env = random_mdp(4, 2, gamma, inst);
        const auto q_star = q_values(env, value_iteration(env, 1e-13, 100'000).values);
        OnlineBrviOptions options;
        options.steps = 20'000;
        options.risk = RiskConfig::from_alpha(0.5);
        options.delta = delta;
        QFunction prev;
        bool opt = true, mono = true, bnd = true;
        Rng rng = make_rng(1010, i, 1);
        run_online_brvi(env, options, rng, [&](std::size_t, const QFunction& q) {
            if ((q - q_star).minCoeff() < -1e-12) opt = false;
            if (prev.size() > 0 && (q - prev).maxCoeff() > 0.0) mono = false;
            if (q.minCoeff() < 0.0 || q.maxCoeff() > 1.0 / (1.0 - gamma) + 1e-12) bnd = false;
            prev = q;
        });
        optimistic[i] = opt;
        monotone[i] = mono;
        bounded[i] = bnd;
    });
    const auto count = [](const std::vector<int>& v) { return std::count(v.begin(), v.end(), 1); };
    const double freq = static_cast<double>(count(optimistic)) / runs;
    out.require(count(monotone) == static_cast<long>(runs), "Q increased in some run");
    out.require(count(bounded) == static_cast<long>(runs), "Q left [0, 1/(1-gamma)] in some run");
    out.require(freq >= 1.0 - delta, "optimism frequency " + fmt(freq));
    out.note("monotone " + std::to_string(count(monotone)) + "/200, bounded " + std::to_string(count(bounded)) +
             "/200, Q_t >= Q* in " + std::to_string(count(optimistic)) + "/200");
    return out;
}

Outcome n_mapping() {
    Outcome out;
    const std::pair<double, std::size_t> cases[] = {{0.5, 2}, {0.8, 5}, {0.9, 10}, {0.99, 100}};
    for (auto [alpha, n] : cases) {
        const std::size_t got = RiskConfig::from_alpha(alpha).sample_size();
        out.require(got == n, "alpha " + fmt(alpha) + " gave " + std::to_string(got));
    }
    out.note("n = 2, 5, 10, 100");
    return out;
}

Outcome determinism() {
    Outcome out;
    const std::map<std::string, std::string> configs = {
        {"bandit", "[experiment]\nkind = bandit-regret\nreplications = 4\nseed = 3\n[risk]\nalphas = 0.5, 0.9\n"
                   "[horizon]\nsteps = 300\n[environment]\npreset = linear-bandit\n"},
        {"bandit-truncated", "[experiment]\nkind = bandit-regret\nreplications = 4\nseed = 3\n[risk]\nalphas = 0.8\n"
                             "variant = truncated\n[horizon]\nsteps = 200\n[environment]\npreset = linear-bandit-bounded\n"},
        {"mdp", "[experiment]\nkind = mdp-regret\nreplications = 4\nseed = 4\n[risk]\nalphas = 0, 0.8\n"
                "br_eval_kernels = 20\n[horizon]\nsteps = 8\n[environment]\npreset = frozen-lake\n"},
        {"brvi", "[experiment]\nkind = online-brvi\nreplications = 4\nseed = 5\n[risk]\nalphas = 0.5\n"
                 "[horizon]\nsteps = 2000\n[environment]\npreset = random-mdp\nstates = 4\nactions = 2\n"},
        {"normality", "[experiment]\nkind = normality\nreplications = 6\nseed = 6\n[risk]\nalphas = 0.8\n"
                      "[environment]\npreset = frozen-lake\n[normality]\ndata_sizes = 2000\nposterior_samples = 100\n"
                      "state = 10\n"},
        {"solve", "[experiment]\nkind = solve\nseed = 7\n[risk]\nalphas = 0.5, 0.8\n[environment]\npreset = frozen-lake\n"},
    };
    const fs::path root = fs::temp_directory_path() / "brl_acceptance_determinism";
    std::size_t files = 0;
    for (const auto& [name, text] : configs) {
        std::string reference;
        for (std::size_t threads : {1u, 8u}) {
            ExperimentConfig c = parse_config_text(text);
            c.threads = threads;
            const fs::path dir = root / (name + "_" + std::to_string(threads));
            fs::remove_all(dir);
            c.output = dir.string();
            run_experiment(c);
            std::string all;
            std::vector<fs::path> paths;
            for (const auto& e : fs::directory_iterator(dir)) paths.push_back(e.path());
            std::sort(paths.begin(), paths.end());
            for (const auto& p : paths) all += p.filename().string() + "\n" + oracle::read_file(p.string());
            if (threads == 1) {
                reference = all;
                files += paths.size();
            } else if (all != reference) {
                out.require(false, name + " differs between 1 and 8 threads");
            }
        }
    }
    fs::remove_all(root);
    out.note(std::to_string(configs.size()) + " experiments, " + std::to_string(files) + " files compared byte for byte");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"CVaR oracle equivalence", cvar_oracle},
        {"coherence suite", coherence},
        {"order statistics dominate CVaR", order_statistics},
        {"desk-scale normality", normality},
        {"negative bias of the limit mean", negative_bias},
        {"bandit BR-Regret ordering", bandit_ordering},
        {"sublinear regret growth and BRVI bound", sublinearity},
        {"Frozen Lake regret ordering", frozen_lake_ordering},
        {"conjugate-update exactness", conjugate_updates},
        {"online BRVI invariants", brvi_invariants},
        {"risk level to sample size mapping", n_mapping},
        {"determinism across thread budgets", determinism},
    };
    std::set<std::size_t> selected;
    for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::atoi(argv[i])));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const std::size_t id = i + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome result;
        try {
            result = criteria[i].second();
        } catch (const std::exception& e) {
            result.pass = false;
            result.note(std::string("exception: ") + e.what());
        }
        if (!result.pass) ++failures;
        std::printf("%s %2zu %s (%.1f s): %s\n", result.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    seconds_since(start), result.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
