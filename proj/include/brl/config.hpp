#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "brl/bandit.hpp"

namespace brl {

enum class ExperimentKind { bandit_regret, mdp_regret, online_brvi, normality, solve };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view text);

std::string_view to_string(BanditVariant variant);
BanditVariant parse_bandit_variant(std::string_view text);

/// Schema or syntax problem in a configuration file; line is 0 when not tied to one.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, std::size_t line = 0);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/**
 * Experiment description. The file format is INI-style:
 *
 *   [experiment]  kind, replications, seed, threads, output, stride
 *   [risk]        alphas, delta, variant, fixed_scale, br_eval_kernels
 *   [horizon]     steps, episode_length, planning_iterations
 *   [environment] preset, hole_exit, discount, states, actions, instance_seed, noise
 *   [normality]   data_sizes, posterior_samples, vi_iterations, state, min_visits
 *
 * Lists are comma separated; '#' and ';' start comments. Unknown sections or
 * keys are errors.
 */
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::solve;
    std::size_t replications = 1;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string output = "out";
    /// Trace CSVs keep every stride-th iteration plus the last one.
    std::size_t stride = 1;

    std::vector<double> alphas{0.8};
    double delta = 0.05;
    BanditVariant variant = BanditVariant::plain;
    std::optional<double> fixed_scale;
    std::size_t br_eval_kernels = 0;

    /// Bandit rounds, BRPS-RL episodes, or online BRVI steps.
    std::size_t steps = 1000;
    std::size_t episode_length = 10;
    std::size_t planning_iterations = 100;

    /// linear-bandit, linear-bandit-bounded, frozen-lake or random-mdp.
    std::string preset = "frozen-lake";
    std::optional<double> hole_exit;
    std::optional<double> discount;
    std::size_t states = 3;
    std::size_t actions = 2;
    std::uint64_t instance_seed = 0;
    std::optional<double> noise;

    std::vector<std::size_t> data_sizes{10'000};
    std::size_t posterior_samples = 5000;
    std::size_t vi_iterations = 100;
    std::size_t state = 0;
    std::size_t min_visits = 10;

    bool operator==(const ExperimentConfig&) const = default;

    /// Throws ConfigError when fields are inconsistent.
    void validate() const;
};

ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Canonical text with every key; parse_config_text(serialize(c)) == c.
std::string serialize(const ExperimentConfig& config);

/// FNV-1a 64 of the canonical text without `threads` and `output`, which do
/// not affect results.
std::uint64_t config_hash(const ExperimentConfig& config);

bool is_bandit_preset(std::string_view preset);

}  // namespace brl
