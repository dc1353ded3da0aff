#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "brl/mdp.hpp"
#include "brl/random.hpp"

namespace brl {

/// Grid cell as [row, col], row 0 at the top.
struct Cell {
    int row = 0;
    int col = 0;
    bool operator==(const Cell&) const = default;
};

/// Action encoding shared with the common gridworld convention.
enum class Direction : std::size_t { Left = 0, Down = 1, Right = 2, Up = 3 };

inline constexpr std::size_t kNumDirections = 4;

/// Slip outcome index: 0 = intended, 1 = counter-clockwise perpendicular,
/// 2 = clockwise perpendicular.
Direction slip_direction(Direction intended, std::size_t outcome);

/**
 * Frozen Lake variant with a continuing game: holes are escapable (the player
 * leaves a hole in the intended direction with probability `hole_exit`, else
 * stays), and reaching the goal relocates the player to a non-hole non-goal
 * cell on the next step.
 */
struct FrozenLakeLayout {
    int rows = 4;
    int cols = 4;
    Cell start{0, 0};
    Cell goal{3, 3};
    std::vector<Cell> holes{{1, 1}, {1, 3}, {2, 3}, {3, 0}};
    /// Probabilities of {intended, ccw-perpendicular, cw-perpendicular} moves outside holes.
    std::array<double, 3> slip{0.5, 0.25, 0.25};
    double hole_exit = 0.1;
    /// Relocation distribution over restart_cells(); empty means uniform.
    std::vector<double> restart;
    double discount = 0.8;

    /// Throws ModelError on overlapping special cells, out-of-grid cells or bad probabilities.
    void validate() const;

    std::size_t num_states() const noexcept { return static_cast<std::size_t>(rows * cols); }
    StateId index(Cell c) const { return static_cast<StateId>(c.row * cols + c.col); }
    Cell cell(StateId s) const { return {static_cast<int>(s) / cols, static_cast<int>(s) % cols}; }

    bool is_hole(StateId s) const;
    bool is_goal(StateId s) const { return s == index(goal); }

    /// Non-hole, non-goal cells in row-major order.
    std::vector<StateId> restart_cells() const;
    /// `restart`, or the uniform distribution when it is empty.
    std::vector<double> restart_distribution() const;

    /// Neighbor in direction d; moves that leave the grid stay in place.
    StateId move(StateId s, Direction d) const;
};

/// Compiles the layout to an exact 4-action MDP. r(s, a) = P(s' = goal | s, a).
TabularMdp build_frozen_lake(const FrozenLakeLayout& layout);

/// Same compilation with the three unknown distributions replaced by sampled values.
TabularMdp build_sampled_frozen_lake(const FrozenLakeLayout& layout, const std::array<double, 3>& slip,
                                     double hole_exit, const std::vector<double>& restart);

/// R(s, a, s') = 1 when s' is the goal and s is not; the expected value under a
/// kernel is the Frozen Lake reward r(s, a).
std::vector<double> frozen_lake_transition_reward(const FrozenLakeLayout& layout);

/// Random MDP with Dirichlet(1, ..., 1) rows and Uniform[0, 1] rewards.
TabularMdp random_mdp(std::size_t num_states, std::size_t num_actions, double discount, Rng& rng);

}  // namespace brl
