#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "brl/environments.hpp"
#include "brl/mdp.hpp"
#include "brl/random.hpp"

namespace brl {

/// Posterior over transition kernels that can be updated with observed
/// transitions and sampled as a whole kernel.
class KernelPosterior {
public:
    virtual ~KernelPosterior() = default;
    virtual std::size_t num_states() const = 0;
    virtual std::size_t num_actions() const = 0;
    virtual void observe(StateId s, ActionId a, StateId next) = 0;
    virtual TransitionKernel sample_kernel(Rng& rng) const = 0;
};

/// Independent Dirichlet posterior per (s, a) row, direct parametrization.
class DirichletTransitionPosterior final : public KernelPosterior {
public:
    DirichletTransitionPosterior(std::size_t num_states, std::size_t num_actions, double prior_count = 1.0);

    std::size_t num_states() const override { return num_states_; }
    std::size_t num_actions() const override { return num_actions_; }

    /// counts(s, a, next) += 1.
    void observe(StateId s, ActionId a, StateId next) override;
    /// Every row drawn independently from Dirichlet(counts row).
    TransitionKernel sample_kernel(Rng& rng) const override;
    void sample_row(StateId s, ActionId a, Rng& rng, std::span<double> out) const;

    std::span<const double> counts(StateId s, ActionId a) const;
    /// Number of observed transitions from (s, a).
    std::size_t observations(StateId s, ActionId a) const { return observed_[s * num_actions_ + a]; }
    std::vector<double> posterior_mean(StateId s, ActionId a) const;
    double prior_count() const noexcept { return prior_; }

    void write_snapshot(std::ostream& os) const;
    static DirichletTransitionPosterior read_snapshot(std::istream& is);

private:
    std::size_t num_states_;
    std::size_t num_actions_;
    double prior_;
    std::vector<double> counts_;
    std::vector<std::size_t> observed_;
};

enum class PayoffSampling { plain, truncated };

/**
 * Gaussian posterior for a linear-payoff bandit: per arm,
 * theta ~ N(theta_a, nu^2 V_a^{-1}) with V_a = I + sum s s^T, theta_a = V_a^{-1} b_a,
 * b_a = sum s R.
 */
class GaussianLinearPosterior {
public:
    GaussianLinearPosterior(std::size_t num_arms, std::size_t dim, double noise_scale);

    std::size_t num_arms() const noexcept { return arms_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    double noise_scale() const noexcept { return nu_; }

    void update(std::size_t arm, const Eigen::VectorXd& context, double reward);

    const Eigen::MatrixXd& precision(std::size_t arm) const { return arms_.at(arm).v; }
    const Eigen::VectorXd& accumulator(std::size_t arm) const { return arms_.at(arm).b; }
    const Eigen::VectorXd& mean(std::size_t arm) const { return arms_.at(arm).theta; }

    /// s^T theta_a
    double mean_payoff(std::size_t arm, const Eigen::VectorXd& context) const;
    /// s^T V_a^{-1} s
    double payoff_variance_factor(std::size_t arm, const Eigen::VectorXd& context) const;

    /// n i.i.d. draws of s^T theta from N(s^T theta_a, scale^2 s^T V_a^{-1} s), where
    /// scale is nu or `scale_override`; truncated mode maps each draw Y to min{1, max{Y, 0}}.
    std::vector<double> sample_payoffs(std::size_t arm, const Eigen::VectorXd& context, std::size_t n,
                                       Rng& rng, PayoffSampling mode,
                                       std::optional<double> scale_override = std::nullopt) const;
    /// Allocation-free variant writing out.size() draws.
    void sample_payoffs_into(std::size_t arm, const Eigen::VectorXd& context, Rng& rng,
                             PayoffSampling mode, std::optional<double> scale_override,
                             std::span<double> out) const;

    void write_snapshot(std::ostream& os) const;
    static GaussianLinearPosterior read_snapshot(std::istream& is);

private:
    struct Arm {
        Eigen::MatrixXd v;
        Eigen::VectorXd b;
        Eigen::VectorXd theta;
        Eigen::LLT<Eigen::MatrixXd> factor;
    };
    void refresh(Arm& arm) const;

    std::size_t dim_;
    double nu_;
    std::vector<Arm> arms_;
};

/// Sampled unknowns of the Frozen Lake variant.
struct FrozenLakeParams {
    std::array<double, 3> slip{};
    double hole_exit = 0.0;
    std::vector<double> restart;
};

/// Outcome of attributing one observed transition to a latent Frozen Lake outcome.
enum class Attribution { slip, hole, restart, discarded };

/**
 * Three Dirichlet posteriors for the Frozen Lake variant: slip outcomes
 * {intended, ccw, cw}, hole outcomes {move, stay} (a Beta posterior on the
 * exit probability), and the relocation distribution over restart cells.
 *
 * An observation updates exactly one count when (s, a, s') identifies the
 * latent outcome uniquely. When several outcomes land on the same cell (moves
 * blocked by the boundary) the observation is discarded.
 */
class HierarchicalFrozenLakePosterior final : public KernelPosterior {
public:
    explicit HierarchicalFrozenLakePosterior(FrozenLakeLayout layout);

    std::size_t num_states() const override { return layout_.num_states(); }
    std::size_t num_actions() const override { return kNumDirections; }

    void observe(StateId s, ActionId a, StateId next) override;
    /// Throws ModelError for transitions the layout dynamics cannot produce.
    Attribution update(StateId s, ActionId a, StateId next);

    FrozenLakeParams sample_params(Rng& rng) const;
    TransitionKernel sample_kernel(Rng& rng) const override;

    const std::array<double, 3>& slip_counts() const noexcept { return slip_; }
    const std::array<double, 2>& hole_counts() const noexcept { return hole_; }
    const std::vector<double>& restart_counts() const noexcept { return restart_; }
    const FrozenLakeLayout& layout() const noexcept { return layout_; }

    void write_snapshot(std::ostream& os) const;

private:
    FrozenLakeLayout layout_;
    std::vector<StateId> restart_cells_;
    std::array<double, 3> slip_{1.0, 1.0, 1.0};
    std::array<double, 2> hole_{1.0, 1.0};
    std::vector<double> restart_;
};

}  // namespace brl
