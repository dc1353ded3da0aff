#include "brl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "brl/bandit.hpp"
#include "brl/brmdp.hpp"
#include "brl/environments.hpp"
#include "brl/format.hpp"
#include "brl/posteriors.hpp"
#include "brl/stats.hpp"

namespace brl {

std::string Curve::file_name() const { return "trace_" + algorithm + "_" + format_double(alpha) + ".csv"; }

Curve aggregate_curve(std::string algorithm, double alpha, std::string metric,
                      const std::vector<const std::vector<double>*>& series) {
    Curve curve{std::move(algorithm), alpha, std::move(metric), {}, {}};
    if (series.empty()) return curve;
    const std::size_t length = series.front()->size();
    for (const auto* s : series)
        if (s->size() != length) throw std::invalid_argument("aggregate_curve: series lengths differ");
    curve.mean.resize(length);
    curve.half_width.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
        RunningStats stats;
        for (const auto* s : series) stats.add((*s)[i]);
        curve.mean[i] = stats.mean();
        curve.half_width[i] = stats.ci_half_width(0.95);
    }
    return curve;
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    std::vector<std::exception_ptr> errors(count);
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::vector<std::thread> workers;
        workers.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w) {
            workers.emplace_back([&] {
                while (!failed.load()) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= count) return;
                    try {
                        job(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                        failed.store(true);
                    }
                }
            });
        }
        for (auto& t : workers) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::size_t resolve_threads(std::size_t config_threads, std::optional<std::size_t> cli_threads) {
    if (cli_threads) return std::max<std::size_t>(1, *cli_threads);
    if (const char* env = std::getenv("BRL_THREADS"); env && *env) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
        throw ConfigError("BRL_THREADS must be a positive integer");
    }
    return std::max<std::size_t>(1, config_threads);
}

namespace {

FrozenLakeLayout frozen_lake_layout(const ExperimentConfig& config) {
    FrozenLakeLayout layout;
    if (config.hole_exit) layout.hole_exit = *config.hole_exit;
    if (config.discount) layout.discount = *config.discount;
    return layout;
}

TabularMdp make_mdp(const ExperimentConfig& config) {
    if (config.preset == "frozen-lake") return build_frozen_lake(frozen_lake_layout(config));
    Rng rng = make_rng(config.instance_seed);
    return random_mdp(config.states, config.actions, config.discount.value_or(0.8), rng);
}

StateId initial_state(const ExperimentConfig& config) {
    if (config.preset == "frozen-lake") {
        const auto layout = frozen_lake_layout(config);
        return layout.index(layout.start);
    }
    return 0;
}

LinearBanditEnv make_bandit(const ExperimentConfig& config) {
    LinearBanditEnv env =
        config.preset == "linear-bandit-bounded" ? LinearBanditEnv::bounded_standard() : LinearBanditEnv::standard();
    if (config.noise) env.noise_scale = *config.noise;
    return env;
}

std::vector<std::uint64_t> replication_seeds(const ExperimentConfig& config) {
    std::vector<std::uint64_t> seeds(config.replications);
    for (std::size_t r = 0; r < seeds.size(); ++r) seeds[r] = derive_seed(config.seed, r, 0);
    return seeds;
}

template <typename Job>
void run_replications(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds, Job&& job) {
    parallel_for(seeds.size(), config.threads, [&](std::size_t r) {
        try {
            job(r, seeds[r]);
        } catch (const std::exception& e) {
            throw ExperimentError("replication " + std::to_string(r) + " (seed " + std::to_string(seeds[r]) +
                                  ") failed: " + e.what());
        }
    });
}

/// Per replication, one series per curve slot.
using SeriesTable = std::vector<std::vector<std::vector<double>>>;

struct Slot {
    std::string algorithm;
    double alpha;
    std::string metric;
};

void collect(AggregateResult& result, const std::vector<Slot>& slots, const SeriesTable& table) {
    for (std::size_t k = 0; k < slots.size(); ++k) {
        std::vector<const std::vector<double>*> series;
        series.reserve(table.size());
        for (const auto& rep : table) series.push_back(&rep[k]);
        result.curves.push_back(aggregate_curve(slots[k].algorithm, slots[k].alpha, slots[k].metric, series));
    }
}

void bandit_experiment(const ExperimentConfig& config, AggregateResult& result) {
    const LinearBanditEnv env = make_bandit(config);
    std::vector<Slot> slots;
    for (double a : config.alphas) {
        slots.push_back({"brps-cmab", a, "regret"});
        slots.push_back({"brps-cmab-br", a, "br-regret"});
        slots.push_back({"thompson-br", a, "br-regret"});
    }
    slots.push_back({"thompson", 0.0, "regret"});

    SeriesTable table(result.seeds.size());
    run_replications(config, result.seeds, [&](std::size_t r, std::uint64_t seed) {
        auto& out = table[r];
        std::vector<double> thompson_regret;
        for (double a : config.alphas) {
            BanditRunConfig run;
            run.risk = RiskConfig::from_alpha(a);
            run.variant = config.variant;
            run.delta = config.delta;
            run.fixed_scale = config.fixed_scale;
            run.seed = seed;
            run.steps = config.steps;
            BanditTrace brps = run_brps_cmab(env, run);
            BanditTrace ts = run_thompson(env, run);
            out.push_back(std::move(brps.cumulative_regret));
            out.push_back(std::move(brps.cumulative_br_regret));
            out.push_back(std::move(ts.cumulative_br_regret));
            // Thompson's actions do not depend on alpha, so its conventional regret is recorded once.
            if (thompson_regret.empty()) thompson_regret = std::move(ts.cumulative_regret);
        }
        out.push_back(std::move(thompson_regret));
    });
    collect(result, slots, table);
}

void mdp_experiment(const ExperimentConfig& config, AggregateResult& result) {
    const TabularMdp env = make_mdp(config);
    const bool frozen = config.preset == "frozen-lake";
    const std::vector<double> transition_reward =
        frozen ? frozen_lake_transition_reward(frozen_lake_layout(config)) : std::vector<double>{};
    const bool diagnose = config.br_eval_kernels > 0;

    std::vector<Slot> slots;
    for (double a : config.alphas) {
        slots.push_back({"brps-rl", a, "regret"});
        if (diagnose) slots.push_back({"brps-rl-br", a, "br-regret"});
    }
    SeriesTable table(result.seeds.size());
    run_replications(config, result.seeds, [&](std::size_t r, std::uint64_t seed) {
        for (std::size_t i = 0; i < config.alphas.size(); ++i) {
            std::unique_ptr<KernelPosterior> posterior;
            if (frozen)
                posterior = std::make_unique<HierarchicalFrozenLakePosterior>(frozen_lake_layout(config));
            else
                posterior = std::make_unique<DirichletTransitionPosterior>(env.num_states(), env.num_actions());
            BrpsRlOptions options;
            options.episodes = config.steps;
            options.episode_length = config.episode_length;
            options.risk = RiskConfig::from_alpha(config.alphas[i]);
            options.solve = SolveOptions{1e-10, 100'000, config.planning_iterations};
            options.initial_state = initial_state(config);
            options.transition_reward = transition_reward;
            options.br_eval_kernels = config.br_eval_kernels;
            options.br_eval_seed = derive_seed(seed, i, 2);
            Rng rng = make_rng(seed, 0, 1);
            MdpRegretTrace trace = run_brps_rl(env, *posterior, options, rng);
            table[r].push_back(std::move(trace.cumulative_regret));
            if (diagnose) table[r].push_back(std::move(trace.cumulative_br_regret));
        }
    });
    collect(result, slots, table);
}

void brvi_experiment(const ExperimentConfig& config, AggregateResult& result) {
    const TabularMdp env = make_mdp(config);
    std::vector<Slot> slots;
    for (double a : config.alphas) slots.push_back({"online-brvi", a, "regret"});
    SeriesTable table(result.seeds.size());
    run_replications(config, result.seeds, [&](std::size_t r, std::uint64_t seed) {
        for (double a : config.alphas) {
            OnlineBrviOptions options;
            options.steps = config.steps;
            options.risk = RiskConfig::from_alpha(a);
            options.delta = config.delta;
            options.initial_state = initial_state(config);
            Rng rng = make_rng(seed, 0, 1);
            table[r].push_back(run_online_brvi(env, options, rng).cumulative_regret);
        }
    });
    collect(result, slots, table);
}

void normality_experiment(const ExperimentConfig& config, AggregateResult& result) {
    const TabularMdp env = make_mdp(config);
    const auto vi = value_iteration(env, 1e-12, 1'000'000);
    const Eigen::VectorXd nbar = stationary_distribution(env, vi.policy);
    const ValueFunction v_pi = evaluate_policy_exact(env, vi.policy);
    std::size_t combo = 0;
    for (double a : config.alphas) {
        const LimitParams limit = limit_params(env, vi.policy, nbar, a);
        for (std::size_t n : config.data_sizes) {
            DeviationOptions options;
            options.data_size = n;
            options.replications = config.replications;
            options.posterior_samples = config.posterior_samples;
            options.vi_iterations = config.vi_iterations;
            options.alpha = a;
            options.min_visits = config.min_visits;
            options.initial_state = initial_state(config);
            options.seed = derive_seed(config.seed, combo++, 3);
            NormalityRun run{a, n, options.seed, limit, nbar,
                             Eigen::MatrixXd(static_cast<Eigen::Index>(config.replications),
                                             static_cast<Eigen::Index>(env.num_states()))};
            std::vector<std::uint64_t> seeds(config.replications);
            for (std::size_t r = 0; r < seeds.size(); ++r) seeds[r] = derive_seed(options.seed, r, 0);
            run_replications(config, seeds, [&](std::size_t r, std::uint64_t) {
                run.deviations.row(static_cast<Eigen::Index>(r)) =
                    simulate_deviation(env, vi.policy, v_pi, options, r).transpose();
            });
            result.normality.push_back(std::move(run));
        }
    }
}

void solve_experiment(const ExperimentConfig& config, AggregateResult& result) {
    const TabularMdp env = make_mdp(config);
    auto vi = value_iteration(env, 1e-12, 1'000'000);
    SolveSummary summary{vi.values, vi.policy, stationary_distribution(env, vi.policy), {}};
    for (double a : config.alphas)
        if (a > 0.0) summary.limits.emplace_back(a, limit_params(env, vi.policy, summary.stationary, a));
    result.solve = std::move(summary);
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

void close_output(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw std::runtime_error("error while writing '" + path.string() + "'");
}

void write_curve(const Curve& curve, std::size_t stride, const std::filesystem::path& dir) {
    const auto path = dir / curve.file_name();
    auto out = open_output(path);
    out << "iteration,mean_regret,ci_low,ci_high\n";
    const std::size_t n = curve.mean.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t iteration = i + 1;
        if (iteration % stride != 0 && iteration != n) continue;
        out << iteration << ',' << format_double(curve.mean[i]) << ','
            << format_double(curve.mean[i] - curve.half_width[i]) << ','
            << format_double(curve.mean[i] + curve.half_width[i]) << '\n';
    }
    close_output(out, path);
}

void write_limit_rows(std::ostream& out, double alpha, const Eigen::VectorXd& nbar, const LimitParams& limit) {
    for (Eigen::Index s = 0; s < limit.lambda.size(); ++s)
        out << format_double(alpha) << ',' << s << ',' << format_double(nbar[s]) << ','
            << format_double(limit.lambda[s]) << ',' << format_double(limit.sigma[s]) << ','
            << format_double(limit.mean_full[s]) << ',' << format_double(std::sqrt(limit.cov_full(s, s))) << '\n';
}

constexpr const char* kLimitHeader = "alpha,state,nbar,lambda,sigma,mean_full,sd_full\n";

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

}  // namespace

AggregateResult compute_experiment(const ExperimentConfig& config) {
    config.validate();
    AggregateResult result;
    result.kind = config.kind;
    result.seeds = replication_seeds(config);
    switch (config.kind) {
        case ExperimentKind::bandit_regret: bandit_experiment(config, result); break;
        case ExperimentKind::mdp_regret: mdp_experiment(config, result); break;
        case ExperimentKind::online_brvi: brvi_experiment(config, result); break;
        case ExperimentKind::normality: normality_experiment(config, result); break;
        case ExperimentKind::solve: solve_experiment(config, result); break;
    }
    return result;
}

void emit_plotdata(const AggregateResult& result, const std::filesystem::path& dir) {
    nlohmann::ordered_json plots = nlohmann::ordered_json::array();
    for (const char* metric : {"regret", "br-regret"}) {
        nlohmann::ordered_json curves = nlohmann::ordered_json::array();
        for (const auto& c : result.curves) {
            if (c.metric != metric) continue;
            curves.push_back({{"algorithm", c.algorithm},
                              {"alpha", c.alpha},
                              {"file", c.file_name()},
                              {"x", "iteration"},
                              {"y", "mean_regret"},
                              {"band", {"ci_low", "ci_high"}}});
        }
        if (curves.empty()) continue;
        const bool br = std::string(metric) == "br-regret";
        plots.push_back({{"id", metric},
                         {"title", br ? "Cumulative BR-Regret" : "Cumulative regret"},
                         {"x_label", "iteration"},
                         {"y_label", br ? "mean cumulative BR-Regret" : "mean cumulative regret"},
                         {"band", "95% confidence interval"},
                         {"curves", std::move(curves)}});
    }
    if (!result.normality.empty()) {
        plots.push_back({{"id", "normality-qq"},
                         {"title", "Q-Q plot of sqrt(N)(V_N - V^pi)"},
                         {"x_label", "theoretical quantile"},
                         {"y_label", "empirical quantile"},
                         {"file", "qq.csv"},
                         {"x", "theoretical"},
                         {"y", "empirical"},
                         {"group_by", {"alpha", "data_size"}}});
        plots.push_back({{"id", "normality-density"},
                         {"title", "Distribution of sqrt(N)(V_N - V^pi)"},
                         {"x_label", "deviation"},
                         {"y_label", "density"},
                         {"file", "deviations.csv"},
                         {"x", "value"},
                         {"group_by", {"alpha", "data_size", "state"}}});
    }
    nlohmann::ordered_json doc = {{"schema", 1}, {"kind", std::string(to_string(result.kind))}, {"plots", plots}};
    const auto path = dir / "plots.json";
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
    close_output(out, path);
}

void write_results(const AggregateResult& result, const ExperimentConfig& config, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    for (const auto& c : result.curves) {
        write_curve(c, config.stride, dir);
        files.push_back(c.file_name());
    }
    if (!result.normality.empty()) {
        auto dev = open_output(dir / "deviations.csv");
        auto qq = open_output(dir / "qq.csv");
        auto lim = open_output(dir / "limit_params.csv");
        dev << "alpha,data_size,rep,state,value\n";
        qq << "alpha,data_size,state,theoretical,empirical\n";
        lim << kLimitHeader;
        double last_alpha = -1.0;
        for (const auto& run : result.normality) {
            const std::string prefix = format_double(run.alpha) + ',' + std::to_string(run.data_size) + ',';
            for (Eigen::Index r = 0; r < run.deviations.rows(); ++r)
                for (Eigen::Index s = 0; s < run.deviations.cols(); ++s)
                    dev << prefix << r << ',' << s << ',' << format_double(run.deviations(r, s)) << '\n';
            if (run.deviations.rows() >= 2)
                for (const auto& [x, y] : qq_export(run.deviations, run.limit, config.state))
                    qq << prefix << config.state << ',' << format_double(x) << ',' << format_double(y) << '\n';
            if (run.alpha != last_alpha) write_limit_rows(lim, run.alpha, run.nbar, run.limit);
            last_alpha = run.alpha;
        }
        close_output(dev, dir / "deviations.csv");
        close_output(qq, dir / "qq.csv");
        close_output(lim, dir / "limit_params.csv");
        files.insert(files.end(), {"deviations.csv", "qq.csv", "limit_params.csv"});
    }
    if (result.solve) {
        const auto& s = *result.solve;
        auto out = open_output(dir / "solution.csv");
        out << "state,value,action,stationary\n";
        for (Eigen::Index i = 0; i < s.values.size(); ++i)
            out << i << ',' << format_double(s.values[i]) << ',' << s.policy.action_of[static_cast<std::size_t>(i)]
                << ',' << format_double(s.stationary[i]) << '\n';
        close_output(out, dir / "solution.csv");
        files.push_back("solution.csv");
        if (!s.limits.empty()) {
            auto lim = open_output(dir / "limit_params.csv");
            lim << kLimitHeader;
            for (const auto& [alpha, limit] : s.limits) write_limit_rows(lim, alpha, s.stationary, limit);
            close_output(lim, dir / "limit_params.csv");
            files.push_back("limit_params.csv");
        }
    }
    emit_plotdata(result, dir);
    files.push_back("plots.json");

    nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
    for (auto s : result.seeds) seeds.push_back(s);
    nlohmann::ordered_json manifest = {
        {"tool", "brl"},
        {"version", kVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"kind", std::string(to_string(config.kind))},
        {"config_hash", hex(config_hash(config))},
        {"base_seed", config.seed},
        {"replications", config.replications},
        {"seed_derivation", "derive_seed(base_seed, replication, 0)"},
        {"replication_seeds", seeds},
        {"files", files},
    };
    if (!result.normality.empty()) {
        nlohmann::ordered_json runs = nlohmann::ordered_json::array();
        for (const auto& run : result.normality)
            runs.push_back({{"alpha", run.alpha}, {"data_size", run.data_size}, {"seed", run.seed}});
        manifest["normality_runs"] = runs;
    }
    const auto path = dir / "manifest.json";
    auto out = open_output(path);
    out << manifest.dump(2) << '\n';
    close_output(out, path);
}

AggregateResult run_experiment(const ExperimentConfig& config) {
    AggregateResult result = compute_experiment(config);
    write_results(result, config, config.output);
    return result;
}

}  // namespace brl
