#include "brl/posteriors.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "brl/format.hpp"

namespace brl {

// ---------------------------------------------------------------------------
// Dirichlet

DirichletTransitionPosterior::DirichletTransitionPosterior(std::size_t num_states, std::size_t num_actions,
                                                           double prior_count)
    : num_states_(num_states),
      num_actions_(num_actions),
      prior_(prior_count),
      counts_(num_states * num_actions * num_states, prior_count),
      observed_(num_states * num_actions, 0) {
    if (num_states == 0 || num_actions == 0) throw ModelError("posterior needs positive sizes");
    if (!(prior_count > 0.0)) throw ModelError("Dirichlet prior counts must be positive");
}

void DirichletTransitionPosterior::observe(StateId s, ActionId a, StateId next) {
    if (s >= num_states_ || a >= num_actions_ || next >= num_states_) {
        throw ModelError("dirichlet observation index out of range");
    }
    counts_[(s * num_actions_ + a) * num_states_ + next] += 1.0;
    ++observed_[s * num_actions_ + a];
}

std::span<const double> DirichletTransitionPosterior::counts(StateId s, ActionId a) const {
    return {counts_.data() + (s * num_actions_ + a) * num_states_, num_states_};
}

std::vector<double> DirichletTransitionPosterior::posterior_mean(StateId s, ActionId a) const {
    const auto c = counts(s, a);
    double total = 0.0;
    for (double x : c) total += x;
    std::vector<double> mean(c.begin(), c.end());
    for (double& x : mean) x /= total;
    return mean;
}

void DirichletTransitionPosterior::sample_row(StateId s, ActionId a, Rng& rng, std::span<double> out) const {
    sample_dirichlet(counts(s, a), rng, out);
}

TransitionKernel DirichletTransitionPosterior::sample_kernel(Rng& rng) const {
    TransitionKernel kernel(num_states_, num_actions_);
    for (StateId s = 0; s < num_states_; ++s) {
        for (ActionId a = 0; a < num_actions_; ++a) sample_row(s, a, rng, kernel.row(s, a));
    }
    return kernel;
}

void DirichletTransitionPosterior::write_snapshot(std::ostream& os) const {
    os << "dirichlet " << num_states_ << ' ' << num_actions_ << ' ' << format_double(prior_) << '\n';
    for (StateId s = 0; s < num_states_; ++s) {
        for (ActionId a = 0; a < num_actions_; ++a) {
            os << s << ' ' << a;
            for (double c : counts(s, a)) os << ' ' << format_double(c);
            os << '\n';
        }
    }
}

DirichletTransitionPosterior DirichletTransitionPosterior::read_snapshot(std::istream& is) {
    std::string tag;
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    double prior = 0.0;
    if (!(is >> tag >> n_states >> n_actions >> prior) || tag != "dirichlet") {
        throw std::runtime_error("malformed dirichlet snapshot header");
    }
    DirichletTransitionPosterior post(n_states, n_actions, prior);
    for (std::size_t line = 0; line < n_states * n_actions; ++line) {
        std::size_t s = 0;
        std::size_t a = 0;
        if (!(is >> s >> a) || s >= n_states || a >= n_actions) {
            throw std::runtime_error("malformed dirichlet snapshot row " + std::to_string(line));
        }
        double total_extra = 0.0;
        for (StateId t = 0; t < n_states; ++t) {
            double c = 0.0;
            if (!(is >> c)) throw std::runtime_error("truncated dirichlet snapshot");
            post.counts_[(s * n_actions + a) * n_states + t] = c;
            total_extra += c - prior;
        }
        post.observed_[s * n_actions + a] = static_cast<std::size_t>(std::llround(total_extra));
    }
    return post;
}

// ---------------------------------------------------------------------------
// Gaussian linear payoff

GaussianLinearPosterior::GaussianLinearPosterior(std::size_t num_arms, std::size_t dim, double noise_scale)
    : dim_(dim), nu_(noise_scale) {
    if (num_arms == 0 || dim == 0) throw ModelError("gaussian posterior needs positive sizes");
    if (!(noise_scale > 0.0)) throw ModelError("noise scale must be positive");
    arms_.resize(num_arms);
    for (Arm& arm : arms_) {
        arm.v = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        arm.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        refresh(arm);
    }
}

void GaussianLinearPosterior::refresh(Arm& arm) const {
    arm.factor.compute(arm.v);
    if (arm.factor.info() != Eigen::Success) {
        throw ModelError("posterior precision matrix is not positive definite");
    }
    arm.theta = arm.factor.solve(arm.b);
}

void GaussianLinearPosterior::update(std::size_t arm, const Eigen::VectorXd& context, double reward) {
    if (static_cast<std::size_t>(context.size()) != dim_) throw ModelError("context dimension mismatch");
    Arm& a = arms_.at(arm);
    a.v.noalias() += context * context.transpose();
    a.b += reward * context;
    refresh(a);
}

double GaussianLinearPosterior::mean_payoff(std::size_t arm, const Eigen::VectorXd& context) const {
    return context.dot(arms_.at(arm).theta);
}

double GaussianLinearPosterior::payoff_variance_factor(std::size_t arm, const Eigen::VectorXd& context) const {
    const Arm& a = arms_.at(arm);
    if (a.factor.info() != Eigen::Success) throw ModelError("posterior precision matrix is not positive definite");
    return std::max(0.0, context.dot(a.factor.solve(context)));
}

void GaussianLinearPosterior::sample_payoffs_into(std::size_t arm, const Eigen::VectorXd& context, Rng& rng,
                                                  PayoffSampling mode, std::optional<double> scale_override,
                                                  std::span<double> out) const {
    const double scale = scale_override.value_or(nu_);
    const double mu = mean_payoff(arm, context);
    const double sd = scale * std::sqrt(payoff_variance_factor(arm, context));
    for (double& x : out) {
        x = mu + sd * standard_normal(rng);
        if (mode == PayoffSampling::truncated) x = std::min(1.0, std::max(x, 0.0));
    }
}

std::vector<double> GaussianLinearPosterior::sample_payoffs(std::size_t arm, const Eigen::VectorXd& context,
                                                            std::size_t n, Rng& rng, PayoffSampling mode,
                                                            std::optional<double> scale_override) const {
    if (n == 0) throw std::invalid_argument("sample_payoffs: n must be positive");
    std::vector<double> out(n);
    sample_payoffs_into(arm, context, rng, mode, scale_override, out);
    return out;
}

void GaussianLinearPosterior::write_snapshot(std::ostream& os) const {
    os << "gaussian " << arms_.size() << ' ' << dim_ << ' ' << format_double(nu_) << '\n';
    for (std::size_t k = 0; k < arms_.size(); ++k) {
        const Arm& a = arms_[k];
        os << "arm " << k << "\nV";
        for (Eigen::Index i = 0; i < a.v.rows(); ++i) {
            for (Eigen::Index j = 0; j < a.v.cols(); ++j) os << ' ' << format_double(a.v(i, j));
        }
        os << "\nb";
        for (Eigen::Index i = 0; i < a.b.size(); ++i) os << ' ' << format_double(a.b(i));
        os << '\n';
    }
}

GaussianLinearPosterior GaussianLinearPosterior::read_snapshot(std::istream& is) {
    std::string tag;
    std::size_t arms = 0;
    std::size_t dim = 0;
    double nu = 0.0;
    if (!(is >> tag >> arms >> dim >> nu) || tag != "gaussian") {
        throw std::runtime_error("malformed gaussian snapshot header");
    }
    GaussianLinearPosterior post(arms, dim, nu);
    for (std::size_t k = 0; k < arms; ++k) {
        std::size_t index = 0;
        if (!(is >> tag >> index) || tag != "arm" || index != k) throw std::runtime_error("malformed arm record");
        Arm& a = post.arms_[k];
        if (!(is >> tag) || tag != "V") throw std::runtime_error("missing V block");
        for (Eigen::Index i = 0; i < a.v.rows(); ++i) {
            for (Eigen::Index j = 0; j < a.v.cols(); ++j) {
                if (!(is >> a.v(i, j))) throw std::runtime_error("truncated V block");
            }
        }
        if (!(is >> tag) || tag != "b") throw std::runtime_error("missing b block");
        for (Eigen::Index i = 0; i < a.b.size(); ++i) {
            if (!(is >> a.b(i))) throw std::runtime_error("truncated b block");
        }
        post.refresh(a);
    }
    return post;
}

// ---------------------------------------------------------------------------
// Frozen Lake

HierarchicalFrozenLakePosterior::HierarchicalFrozenLakePosterior(FrozenLakeLayout layout)
    : layout_(std::move(layout)) {
    layout_.validate();
    restart_cells_ = layout_.restart_cells();
    restart_.assign(restart_cells_.size(), 1.0);
}

Attribution HierarchicalFrozenLakePosterior::update(StateId s, ActionId a, StateId next) {
    if (s >= num_states() || a >= num_actions() || next >= num_states()) {
        throw ModelError("frozen lake observation index out of range");
    }
    const auto intended = static_cast<Direction>(a);
    if (layout_.is_goal(s)) {
        for (std::size_t i = 0; i < restart_cells_.size(); ++i) {
            if (restart_cells_[i] == next) {
                restart_[i] += 1.0;
                return Attribution::restart;
            }
        }
        throw ModelError("relocation into a cell outside the restart set");
    }
    if (layout_.is_hole(s)) {
        const StateId moved = layout_.move(s, intended);
        if (moved == s && next == s) return Attribution::discarded;
        if (next == moved) {
            hole_[0] += 1.0;
        } else if (next == s) {
            hole_[1] += 1.0;
        } else {
            throw ModelError("transition out of a hole is infeasible under the layout");
        }
        return Attribution::hole;
    }
    std::size_t matches = 0;
    std::size_t outcome = 0;
    for (std::size_t o = 0; o < 3; ++o) {
        if (layout_.move(s, slip_direction(intended, o)) == next) {
            ++matches;
            outcome = o;
        }
    }
    if (matches == 0) throw ModelError("slip transition is infeasible under the layout");
    if (matches > 1) return Attribution::discarded;
    slip_[outcome] += 1.0;
    return Attribution::slip;
}

void HierarchicalFrozenLakePosterior::observe(StateId s, ActionId a, StateId next) { update(s, a, next); }

FrozenLakeParams HierarchicalFrozenLakePosterior::sample_params(Rng& rng) const {
    FrozenLakeParams params;
    sample_dirichlet(slip_, rng, params.slip);
    std::array<double, 2> hole{};
    sample_dirichlet(hole_, rng, hole);
    params.hole_exit = hole[0];
    params.restart.resize(restart_.size());
    sample_dirichlet(restart_, rng, params.restart);
    return params;
}

TransitionKernel HierarchicalFrozenLakePosterior::sample_kernel(Rng& rng) const {
    const FrozenLakeParams p = sample_params(rng);
    return build_sampled_frozen_lake(layout_, p.slip, p.hole_exit, p.restart).transition();
}

void HierarchicalFrozenLakePosterior::write_snapshot(std::ostream& os) const {
    os << "frozen-lake\nslip";
    for (double c : slip_) os << ' ' << format_double(c);
    os << "\nhole";
    for (double c : hole_) os << ' ' << format_double(c);
    os << "\nrestart";
    for (double c : restart_) os << ' ' << format_double(c);
    os << '\n';
}

}  // namespace brl
