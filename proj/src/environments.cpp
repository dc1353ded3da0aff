#include "brl/environments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace brl {

Direction slip_direction(Direction intended, std::size_t outcome) {
    const auto a = static_cast<std::size_t>(intended);
    switch (outcome) {
        case 0: return intended;
        case 1: return static_cast<Direction>((a + 3) % kNumDirections);
        case 2: return static_cast<Direction>((a + 1) % kNumDirections);
        default: throw std::out_of_range("slip outcome index must be 0, 1 or 2");
    }
}

namespace {

bool inside(const FrozenLakeLayout& layout, Cell c) {
    return c.row >= 0 && c.row < layout.rows && c.col >= 0 && c.col < layout.cols;
}

void check_probability_vector(const std::vector<double>& p, const char* what) {
    double total = 0.0;
    for (double x : p) {
        if (!(x >= 0.0)) throw ModelError(std::string(what) + " has a negative entry");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ModelError(std::string(what) + " sums to " + std::to_string(total));
    }
}

}  // namespace

bool FrozenLakeLayout::is_hole(StateId s) const {
    const Cell c = cell(s);
    return std::find(holes.begin(), holes.end(), c) != holes.end();
}

void FrozenLakeLayout::validate() const {
    if (rows < 1 || cols < 1) throw ModelError("grid must have at least one cell");
    if (!inside(*this, start) || !inside(*this, goal)) throw ModelError("start or goal outside the grid");
    if (start == goal) throw ModelError("start and goal coincide");
    for (std::size_t i = 0; i < holes.size(); ++i) {
        if (!inside(*this, holes[i])) throw ModelError("hole outside the grid");
        if (holes[i] == start || holes[i] == goal) throw ModelError("hole overlaps start or goal");
        for (std::size_t j = 0; j < i; ++j) {
            if (holes[i] == holes[j]) throw ModelError("duplicate hole");
        }
    }
    check_probability_vector({slip.begin(), slip.end()}, "slip distribution");
    if (!(hole_exit >= 0.0 && hole_exit <= 1.0)) throw ModelError("hole exit probability outside [0, 1]");
    if (!(discount > 0.0 && discount < 1.0)) throw ModelError("discount must lie in (0, 1)");
    if (!restart.empty()) {
        if (restart.size() != restart_cells().size()) {
            throw ModelError("restart distribution has " + std::to_string(restart.size()) +
                             " entries, layout has " + std::to_string(restart_cells().size()) +
                             " restart cells");
        }
        check_probability_vector(restart, "restart distribution");
    }
}

std::vector<StateId> FrozenLakeLayout::restart_cells() const {
    std::vector<StateId> cells;
    for (StateId s = 0; s < num_states(); ++s) {
        if (!is_hole(s) && !is_goal(s)) cells.push_back(s);
    }
    return cells;
}

std::vector<double> FrozenLakeLayout::restart_distribution() const {
    if (!restart.empty()) return restart;
    const auto n = restart_cells().size();
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

StateId FrozenLakeLayout::move(StateId s, Direction d) const {
    Cell c = cell(s);
    switch (d) {
        case Direction::Left: --c.col; break;
        case Direction::Down: ++c.row; break;
        case Direction::Right: ++c.col; break;
        case Direction::Up: --c.row; break;
    }
    return inside(*this, c) ? index(c) : s;
}

TabularMdp build_sampled_frozen_lake(const FrozenLakeLayout& layout, const std::array<double, 3>& slip,
                                     double hole_exit, const std::vector<double>& restart) {
    FrozenLakeLayout sampled = layout;
    sampled.slip = slip;
    sampled.hole_exit = hole_exit;
    sampled.restart = restart;
    sampled.validate();

    const std::size_t n = sampled.num_states();
    const std::vector<StateId> restart_cells = sampled.restart_cells();
    const std::vector<double> relocation = sampled.restart_distribution();
    const StateId goal = sampled.index(sampled.goal);

    TransitionKernel kernel(n, kNumDirections);
    std::vector<double> reward(n * kNumDirections, 0.0);
    for (StateId s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < kNumDirections; ++a) {
            auto row = kernel.row(s, a);
            const auto intended = static_cast<Direction>(a);
            if (sampled.is_goal(s)) {
                for (std::size_t i = 0; i < restart_cells.size(); ++i) row[restart_cells[i]] += relocation[i];
            } else if (sampled.is_hole(s)) {
                row[sampled.move(s, intended)] += hole_exit;
                row[s] += 1.0 - hole_exit;
            } else {
                for (std::size_t o = 0; o < 3; ++o) {
                    row[sampled.move(s, slip_direction(intended, o))] += slip[o];
                }
            }
            reward[s * kNumDirections + a] = sampled.is_goal(s) ? 0.0 : row[goal];
        }
    }
    return TabularMdp(std::move(kernel), std::move(reward), sampled.discount);
}

TabularMdp build_frozen_lake(const FrozenLakeLayout& layout) {
    return build_sampled_frozen_lake(layout, layout.slip, layout.hole_exit, layout.restart_distribution());
}

TabularMdp random_mdp(std::size_t num_states, std::size_t num_actions, double discount, Rng& rng) {
    if (num_states == 0 || num_actions == 0) throw ModelError("random_mdp: sizes must be positive");
    TransitionKernel kernel(num_states, num_actions);
    const std::vector<double> ones(num_states, 1.0);
    std::vector<double> reward(num_states * num_actions);
    for (StateId s = 0; s < num_states; ++s) {
        for (ActionId a = 0; a < num_actions; ++a) {
            sample_dirichlet(ones, rng, kernel.row(s, a));
            reward[s * num_actions + a] = uniform01(rng);
        }
    }
    return TabularMdp(std::move(kernel), std::move(reward), discount);
}

}  // namespace brl

namespace brl {

std::vector<double> frozen_lake_transition_reward(const FrozenLakeLayout& layout) {
    layout.validate();
    const std::size_t S = layout.num_states();
    const StateId goal = layout.index(layout.goal);
    std::vector<double> out(S * kNumDirections * S, 0.0);
    for (StateId s = 0; s < S; ++s) {
        if (s == goal) continue;
        for (std::size_t a = 0; a < kNumDirections; ++a) out[(s * kNumDirections + a) * S + goal] = 1.0;
    }
    return out;
}

}  // namespace brl
