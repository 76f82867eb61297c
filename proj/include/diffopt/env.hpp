#pragma once

// Grid domains: ASCII map loading and exact transition dynamics.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace diffopt {

struct Cell {
    int row = 0;
    int col = 0;

    friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class Action : std::uint8_t { Left = 0, Right = 1, Up = 2, Down = 3 };

/// Fixed action order; also the tie-break order for greedy choices.
inline constexpr std::array<Action, 4> kActions{Action::Left, Action::Right, Action::Up,
                                                Action::Down};
inline constexpr int kNumActions = 4;

constexpr Cell offset(Action a) {
    switch (a) {
        case Action::Left: return {0, -1};
        case Action::Right: return {0, 1};
        case Action::Up: return {-1, 0};
        case Action::Down: return {1, 0};
    }
    return {0, 0};
}

constexpr std::string_view to_string(Action a) {
    switch (a) {
        case Action::Left: return "left";
        case Action::Right: return "right";
        case Action::Up: return "up";
        case Action::Down: return "down";
    }
    return "?";
}

inline std::optional<Action> parse_action(std::string_view name) {
    for (Action a : kActions) {
        if (to_string(a) == name) return a;
    }
    return std::nullopt;
}

/// With probability `probability` the agent is pushed one cell along `direction`,
/// whatever action it chose.
struct Wind {
    Action direction = Action::Down;
    double probability = 0.0;
};

class Domain {
public:
    Domain(int width, int height, std::vector<bool> walls, Cell start, std::vector<Cell> goals,
           std::optional<Wind> wind = std::nullopt)
        : width_(width),
          height_(height),
          walls_(std::move(walls)),
          start_(start),
          goals_(std::move(goals)),
          wind_(wind) {
        if (width_ <= 0 || height_ <= 0 ||
            walls_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
            throw MalformedMap("domain dimensions do not match the wall grid");
        }
        if (wind_ && !(wind_->probability >= 0.0 && wind_->probability <= 1.0)) {
            throw MalformedMap("wind probability must lie in [0, 1]");
        }
        if (!is_free(start_)) throw MalformedMap("start cell is a wall or out of bounds");
        for (const Cell& g : goals_) {
            if (!is_free(g)) throw MalformedMap("goal cell is a wall or out of bounds");
        }
        index_states();
        check_connected();
    }

    int width() const { return width_; }
    int height() const { return height_; }
    Cell start() const { return start_; }
    const std::vector<Cell>& goals() const { return goals_; }
    const std::optional<Wind>& wind() const { return wind_; }
    bool deterministic() const { return !wind_ || wind_->probability == 0.0; }

    bool in_bounds(Cell c) const {
        return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
    }
    bool is_wall(Cell c) const { return walls_[linear(c)]; }
    bool is_free(Cell c) const { return in_bounds(c) && !is_wall(c); }

    /// Free cells in row-major order; position in this list is the state index.
    const std::vector<Cell>& cells() const { return cells_; }
    int num_states() const { return static_cast<int>(cells_.size()); }
    Cell cell_of(int state) const { return cells_.at(static_cast<std::size_t>(state)); }

    /// State index of a free cell, or -1 for walls and out-of-bounds cells.
    int state_of(Cell c) const { return in_bounds(c) ? state_index_[linear(c)] : -1; }

    int start_state() const { return state_of(start_); }

    /// Deterministic successor: one cell along `a`, or stay when blocked.
    int successor(int state, Action a) const {
        return successors_[static_cast<std::size_t>(state)][static_cast<std::size_t>(a)];
    }

    Domain with_wind(std::optional<Wind> wind) const {
        return Domain(width_, height_, walls_, start_, goals_, wind);
    }

private:
    std::size_t linear(Cell c) const {
        return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(c.col);
    }

    void index_states() {
        state_index_.assign(walls_.size(), -1);
        for (int r = 0; r < height_; ++r) {
            for (int c = 0; c < width_; ++c) {
                const Cell cell{r, c};
                if (!is_wall(cell)) {
                    state_index_[linear(cell)] = static_cast<int>(cells_.size());
                    cells_.push_back(cell);
                }
            }
        }
        successors_.resize(cells_.size());
        for (std::size_t s = 0; s < cells_.size(); ++s) {
            for (Action a : kActions) {
                const Cell d = offset(a);
                const Cell next{cells_[s].row + d.row, cells_[s].col + d.col};
                const int t = state_of(next);
                successors_[s][static_cast<std::size_t>(a)] = t >= 0 ? t : static_cast<int>(s);
            }
        }
    }

    void check_connected() const {
        std::vector<bool> seen(cells_.size(), false);
        std::queue<int> frontier;
        frontier.push(0);
        seen[0] = true;
        std::size_t reached = 1;
        while (!frontier.empty()) {
            const int s = frontier.front();
            frontier.pop();
            for (int t : successors_[static_cast<std::size_t>(s)]) {
                if (!seen[static_cast<std::size_t>(t)]) {
                    seen[static_cast<std::size_t>(t)] = true;
                    ++reached;
                    frontier.push(t);
                }
            }
        }
        if (reached != cells_.size()) {
            throw DisconnectedDomain("free cells are not 4-connected (" + std::to_string(reached) +
                                     " of " + std::to_string(cells_.size()) + " reachable)");
        }
    }

    int width_;
    int height_;
    std::vector<bool> walls_;
    Cell start_;
    std::vector<Cell> goals_;
    std::optional<Wind> wind_;
    std::vector<Cell> cells_;
    std::vector<int> state_index_;
    std::vector<std::array<int, kNumActions>> successors_;
};

/// Parses a map: '#' wall, '.' free, 'S' start (exactly one), 'G' goal (any number).
inline Domain load_domain(std::string_view map_text, std::optional<Wind> wind = std::nullopt) {
    std::vector<std::string> rows;
    std::size_t pos = 0;
    while (pos <= map_text.size()) {
        std::size_t end = map_text.find('\n', pos);
        if (end == std::string_view::npos) end = map_text.size();
        std::string line(map_text.substr(pos, end - pos));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        rows.push_back(std::move(line));
        pos = end + 1;
    }
    while (!rows.empty() && rows.back().empty()) rows.pop_back();
    if (rows.empty()) throw MalformedMap("map is empty");

    const std::size_t width = rows.front().size();
    std::vector<bool> walls;
    walls.reserve(width * rows.size());
    std::optional<Cell> start;
    std::vector<Cell> goals;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            throw MalformedMap("map is not rectangular (row " + std::to_string(r) + " has width " +
                               std::to_string(rows[r].size()) + ", expected " +
                               std::to_string(width) + ")");
        }
        for (std::size_t c = 0; c < width; ++c) {
            const Cell cell{static_cast<int>(r), static_cast<int>(c)};
            switch (rows[r][c]) {
                case '#': walls.push_back(true); break;
                case '.': walls.push_back(false); break;
                case 'S':
                    if (start) throw MalformedMap("map has more than one start cell 'S'");
                    start = cell;
                    walls.push_back(false);
                    break;
                case 'G':
                    goals.push_back(cell);
                    walls.push_back(false);
                    break;
                default:
                    throw MalformedMap(std::string("illegal map character '") + rows[r][c] +
                                       "' at row " + std::to_string(r) + ", column " +
                                       std::to_string(c));
            }
        }
    }
    if (!start) throw MalformedMap("map has no start cell 'S'");
    return Domain(static_cast<int>(width), static_cast<int>(rows.size()), std::move(walls), *start,
                  std::move(goals), wind);
}

inline Domain load_domain_file(const std::filesystem::path& path,
                               std::optional<Wind> wind = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open map file: " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return load_domain(text.str(), wind);
}

/// One environment transition on state indices. Wind, when present, replaces the
/// chosen action with probability p; blocked moves stay in place.
template <class Rng>
int step_state(const Domain& domain, int state, Action action, Rng& rng) {
    const auto& wind = domain.wind();
    if (wind && wind->probability > 0.0) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) < wind->probability) return domain.successor(state, wind->direction);
    }
    return domain.successor(state, action);
}

template <class Rng>
Cell step(const Domain& domain, Cell state, Action action, Rng& rng) {
    const int s = domain.state_of(state);
    if (s < 0) throw std::invalid_argument("step: state is not a free cell");
    return domain.cell_of(step_state(domain, s, action, rng));
}

/// Column-stochastic kernel T(s', s) of the uniform-action walk under the exact dynamics.
inline Eigen::MatrixXd transition_matrix(const Domain& domain) {
    const int n = domain.num_states();
    const double p_wind = domain.wind() ? domain.wind()->probability : 0.0;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        for (Action a : kActions) T(domain.successor(s, a), s) += (1.0 - p_wind) / kNumActions;
        if (p_wind > 0.0) T(domain.successor(s, domain.wind()->direction), s) += p_wind;
    }
    return T;
}

}  // namespace diffopt
