#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "brl/config.hpp"
#include "brl/normality.hpp"

namespace brl {

inline constexpr const char* kVersion = "0.1.0";

/// A replication failed; the message names its index and seed.
class ExperimentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mean cumulative regret over replications with 95% Student-t half-widths.
struct Curve {
    std::string algorithm;
    double alpha = 0.0;
    /// "regret" or "br-regret".
    std::string metric;
    std::vector<double> mean;
    std::vector<double> half_width;

    /// trace_<algorithm>_<alpha>.csv
    std::string file_name() const;
};

struct NormalityRun {
    double alpha = 0.0;
    std::size_t data_size = 0;
    std::uint64_t seed = 0;
    LimitParams limit;
    Eigen::VectorXd nbar;
    Eigen::MatrixXd deviations;  // replications x |S|
};

struct SolveSummary {
    ValueFunction values;
    DeterministicPolicy policy;
    Eigen::VectorXd stationary;
    std::vector<std::pair<double, LimitParams>> limits;
};

struct AggregateResult {
    ExperimentKind kind = ExperimentKind::solve;
    std::vector<std::uint64_t> seeds;
    std::vector<Curve> curves;
    std::vector<NormalityRun> normality;
    std::optional<SolveSummary> solve;
};

/// Element-wise mean and 95% half-width of equally long series, reduced in index order.
Curve aggregate_curve(std::string algorithm, double alpha, std::string metric,
                      const std::vector<const std::vector<double>*>& series);

/// Calls job(i) for i in [0, count) on up to `threads` workers. Results must be
/// stored by index; the first failure (lowest index) is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job);

/// Thread budget: the command-line value if given, else BRL_THREADS, else the config.
std::size_t resolve_threads(std::size_t config_threads, std::optional<std::size_t> cli_threads);

/// Runs every replication; nothing is written to disk.
AggregateResult compute_experiment(const ExperimentConfig& config);

/// Writes trace/normality/solution CSVs, plots.json and manifest.json to `dir`.
void write_results(const AggregateResult& result, const ExperimentConfig& config, const std::filesystem::path& dir);

/// plots.json describing every curve file (axes, labels, columns).
void emit_plotdata(const AggregateResult& result, const std::filesystem::path& dir);

/// compute_experiment followed by write_results into config.output.
AggregateResult run_experiment(const ExperimentConfig& config);

}  // namespace brl
