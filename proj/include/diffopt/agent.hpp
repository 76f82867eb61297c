#pragma once

// Tabular Q-learning over primitive actions plus options, with every
// intra-option transition counted against the episode budget.

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include <fmt/format.h>

#include "env.hpp"
#include "error.hpp"
#include "options.hpp"
#include "parallel.hpp"

namespace diffopt {

struct LearningConfig {
    double alpha = 0.1;
    double gamma = 0.9;
    int episodes = 400;
    int max_steps_per_episode = 100;
    int default_steps_on_failure = 101;
    int monte_carlo_iterations = 30;

    void validate() const {
        if (!(alpha > 0.0) || !(gamma > 0.0) || !(gamma < 1.0) || episodes < 1 ||
            max_steps_per_episode < 1 || default_steps_on_failure < 1 ||
            monte_carlo_iterations < 1) {
            throw std::invalid_argument("learning config: values must be positive and gamma < 1");
        }
    }
};

/// Uniform index in [0, n) from the raw engine output.
template <class Rng>
std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
}

struct OptionOutcome {
    int end_state = 0;
    int steps_used = 0;
    bool reached_goal = false;  ///< ended inside the option's termination set
    std::vector<int> path;      ///< visited states, starting state included
};

/// Follows the option's policy through the domain dynamics until it terminates,
/// the budget runs out, or `stop_at` is entered.
template <class Rng>
OptionOutcome execute_option(const Domain& domain, const Option& option, int state, int budget,
                             Rng& rng, std::optional<int> stop_at = std::nullopt) {
    if (!option.can_start(state)) {
        throw NotInInitiationSet("option cannot be invoked from state " + std::to_string(state));
    }
    OptionOutcome out;
    out.end_state = state;
    out.path.push_back(state);
    while (!option.terminates(out.end_state) && out.steps_used < budget &&
           out.end_state != stop_at) {
        const auto& action = option.policy[static_cast<std::size_t>(out.end_state)];
        if (!action) break;
        out.end_state = step_state(domain, out.end_state, *action, rng);
        ++out.steps_used;
        out.path.push_back(out.end_state);
    }
    out.reached_goal = option.terminates(out.end_state);
    return out;
}

/// Dense Q(s, c) over choices c = 0..3 (primitives) and 4 + o (option o).
class QTable {
public:
    QTable(int states, int choices)
        : choices_(choices),
          values_(static_cast<std::size_t>(states) * static_cast<std::size_t>(choices), 0.0),
          visited_(static_cast<std::size_t>(states), false) {}

    double get(int s, int c) const { return values_[index(s, c)]; }
    bool visited(int s) const { return visited_[static_cast<std::size_t>(s)]; }

    void update(int s, int c, double target, double alpha) {
        double& q = values_[index(s, c)];
        q += alpha * (target - q);
        visited_[static_cast<std::size_t>(s)] = true;
    }

    double max_over(int s, const std::vector<int>& choices) const {
        double best = get(s, choices.front());
        for (int c : choices) best = std::max(best, get(s, c));
        return best;
    }

private:
    std::size_t index(int s, int c) const {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(choices_) +
               static_cast<std::size_t>(c);
    }

    int choices_;
    std::vector<double> values_;
    std::vector<bool> visited_;
};

struct RunLog {
    std::vector<int> steps_per_episode;
    std::vector<std::int64_t> visitation;
    std::uint64_t seed = 0;
};

namespace detail {

inline void available_choices(const OptionSet& opts, int s, std::vector<int>& out) {
    out.assign({0, 1, 2, 3});
    for (std::size_t o = 0; o < opts.options.size(); ++o) {
        if (opts.options[o].eligible(s)) out.push_back(kNumActions + static_cast<int>(o));
    }
}

}  // namespace detail

/// One learning trial: Q-learning from the domain start toward `task_goal`.
inline RunLog q_learning_run(const Domain& domain, const OptionSet& opts, int task_goal,
                             const LearningConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int n = domain.num_states();
    if (task_goal < 0 || task_goal >= n) throw std::invalid_argument("task goal is not a free cell");
    const int start = domain.start_state();
    if (task_goal == start) throw std::invalid_argument("task goal coincides with the start state");

    std::mt19937_64 rng(seed);
    QTable q(n, kNumActions + static_cast<int>(opts.size()));
    RunLog log;
    log.seed = seed;
    log.visitation.assign(static_cast<std::size_t>(n), 0);
    log.steps_per_episode.reserve(static_cast<std::size_t>(cfg.episodes));

    std::vector<int> choices;
    std::vector<int> next_choices;
    std::vector<int> ties;
    for (int episode = 0; episode < cfg.episodes; ++episode) {
        int s = start;
        int steps = 0;
        bool reached = false;
        ++log.visitation[static_cast<std::size_t>(s)];
        while (steps < cfg.max_steps_per_episode) {
            detail::available_choices(opts, s, choices);
            int choice = 0;
            if (q.visited(s)) {
                const double best = q.max_over(s, choices);
                ties.clear();
                for (int c : choices) {
                    if (q.get(s, c) == best) ties.push_back(c);
                }
                choice = ties[uniform_index(rng, ties.size())];
            } else {
                choice = choices[uniform_index(rng, choices.size())];
            }

            int next = s;
            int k = 1;
            double reward = 0.0;
            if (choice < kNumActions) {
                next = step_state(domain, s, static_cast<Action>(choice), rng);
                ++log.visitation[static_cast<std::size_t>(next)];
                if (next == task_goal) reward = 1.0;
            } else {
                const Option& opt = opts.options[static_cast<std::size_t>(choice - kNumActions)];
                const OptionOutcome out = execute_option(
                    domain, opt, s, cfg.max_steps_per_episode - steps, rng, task_goal);
                next = out.end_state;
                k = out.steps_used;
                for (std::size_t i = 1; i < out.path.size(); ++i) {
                    ++log.visitation[static_cast<std::size_t>(out.path[i])];
                }
                if (next == task_goal) reward = std::pow(cfg.gamma, k - 1);
            }
            steps += k;

            double target = reward;
            if (next != task_goal) {
                detail::available_choices(opts, next, next_choices);
                target += std::pow(cfg.gamma, k) * q.max_over(next, next_choices);
            }
            q.update(s, choice, target, cfg.alpha);

            s = next;
            if (s == task_goal) {
                reached = true;
                break;
            }
        }
        log.steps_per_episode.push_back(reached ? steps : cfg.default_steps_on_failure);
    }
    return log;
}

struct Trial {
    int goal = 0;
    std::uint64_t seed = 0;
};

/// Monte-Carlo iterations for every goal; trial i uses seed base_seed + i.
inline std::vector<Trial> plan_trials(const std::vector<int>& goals, const LearningConfig& cfg,
                                      std::uint64_t base_seed) {
    std::vector<Trial> trials;
    for (int g : goals) {
        for (int it = 0; it < cfg.monte_carlo_iterations; ++it) {
            trials.push_back({g, base_seed + trials.size()});
        }
    }
    return trials;
}

inline std::vector<RunLog> run_trials(const Domain& domain, const OptionSet& opts,
                                      const std::vector<Trial>& trials, const LearningConfig& cfg,
                                      int jobs = 1) {
    std::vector<RunLog> logs(trials.size());
    parallel_for(trials.size(), jobs, [&](std::size_t i) {
        logs[i] = q_learning_run(domain, opts, trials[i].goal, cfg, trials[i].seed);
    });
    return logs;
}

inline void write_runlogs_csv(std::ostream& out, const std::vector<RunLog>& logs) {
    out << "trial,seed,episode,steps\n";
    for (std::size_t t = 0; t < logs.size(); ++t) {
        for (std::size_t e = 0; e < logs[t].steps_per_episode.size(); ++e) {
            out << t << ',' << logs[t].seed << ',' << e << ',' << logs[t].steps_per_episode[e]
                << '\n';
        }
    }
}

/// Visitation summed over logs; normalized_count divides by the maximum count.
inline void write_visitation_csv(std::ostream& out, const Domain& domain,
                                 const std::vector<RunLog>& logs) {
    std::vector<std::int64_t> total(static_cast<std::size_t>(domain.num_states()), 0);
    for (const RunLog& log : logs) {
        for (std::size_t s = 0; s < total.size(); ++s) total[s] += log.visitation[s];
    }
    std::int64_t peak = 0;
    for (auto c : total) peak = std::max(peak, c);
    out << "row,col,count,normalized_count\n";
    for (int s = 0; s < domain.num_states(); ++s) {
        const Cell c = domain.cell_of(s);
        const auto count = total[static_cast<std::size_t>(s)];
        const double norm = peak > 0 ? static_cast<double>(count) / static_cast<double>(peak) : 0.0;
        out << c.row << ',' << c.col << ',' << count << ',' << fmt::format("{}", norm) << '\n';
    }
}

}  // namespace diffopt
