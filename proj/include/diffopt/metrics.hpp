#pragma once

// Evaluation measures: steps between states, learning curves, domain difficulty.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "agent.hpp"
#include "env.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "options.hpp"
#include "parallel.hpp"
#include "spectral.hpp"

namespace diffopt {

/// Linear-interpolation quantile of an ascending sample (position p·(n − 1)).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct Summary {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr = 0.0;
    double mean = 0.0;
    double std = 0.0;  ///< population standard deviation
    std::size_t count = 0;
};

inline Summary summarize(std::vector<double> sample) {
    if (sample.empty()) return {};
    std::sort(sample.begin(), sample.end());
    Summary s;
    s.count = sample.size();
    s.median = quantile_sorted(sample, 0.5);
    s.q1 = quantile_sorted(sample, 0.25);
    s.q3 = quantile_sorted(sample, 0.75);
    s.iqr = s.q3 - s.q1;
    double sum = 0.0;
    for (double x : sample) sum += x;
    s.mean = sum / static_cast<double>(sample.size());
    double ss = 0.0;
    for (double x : sample) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(sample.size()));
    return s;
}

/// Steps the uninformed behavior policy (uniform over primitives and eligible
/// options, intra-option steps counted) needs to go from `from` to `to`,
/// stopping at `cap` steps.
template <class Rng>
int simulate_pair_trial(const Domain& domain, const OptionSet& opts, int from, int to, int cap,
                        Rng& rng) {
    int s = from;
    int steps = 0;
    std::vector<int> choices;
    while (s != to && steps < cap) {
        detail::available_choices(opts, s, choices);
        const int choice = choices[uniform_index(rng, choices.size())];
        if (choice < kNumActions) {
            s = step_state(domain, s, static_cast<Action>(choice), rng);
            ++steps;
        } else {
            const OptionOutcome out =
                execute_option(domain, opts.options[static_cast<std::size_t>(choice - kNumActions)],
                               s, cap - steps, rng, to);
            s = out.end_state;
            steps += out.steps_used;
        }
    }
    return steps;
}

struct PairStepsReport {
    std::string method;
    double t = 0.0;
    std::size_t option_count = 0;
    int trials_per_pair = 0;
    int cap = 0;
    int states = 0;
    /// Mean steps per ordered pair, row-major (from, to); diagonal is zero.
    std::vector<double> pair_means;
    Summary ordered;    ///< over ordered pairs from != to
    Summary unordered;  ///< over unordered pairs, both directions averaged

    double mean_steps(int from, int to) const {
        return pair_means[static_cast<std::size_t>(from) * static_cast<std::size_t>(states) +
                          static_cast<std::size_t>(to)];
    }
};

/// Independent stream per ordered pair, so results do not depend on `jobs`.
inline std::mt19937_64 pair_rng(std::uint64_t base_seed, int from, int to) {
    std::seed_seq seq{static_cast<std::uint32_t>(base_seed),
                      static_cast<std::uint32_t>(base_seed >> 32), static_cast<std::uint32_t>(from),
                      static_cast<std::uint32_t>(to)};
    return std::mt19937_64(seq);
}

inline PairStepsReport steps_between_states(const Domain& domain, const OptionSet& opts,
                                            std::uint64_t base_seed, int trials_per_pair,
                                            int jobs = 1, int cap_factor = 50) {
    if (trials_per_pair < 1) throw std::invalid_argument("trials_per_pair must be >= 1");
    const int n = domain.num_states();
    PairStepsReport r;
    r.method = std::string(to_string(opts.method));
    r.t = opts.params.t;
    r.option_count = opts.size();
    r.trials_per_pair = trials_per_pair;
    r.cap = cap_factor * n;
    r.states = n;
    r.pair_means.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);

    parallel_for(static_cast<std::size_t>(n), jobs, [&](std::size_t from) {
        for (int to = 0; to < n; ++to) {
            if (to == static_cast<int>(from)) continue;
            auto rng = pair_rng(base_seed, static_cast<int>(from), to);
            double total = 0.0;
            for (int k = 0; k < trials_per_pair; ++k) {
                total += simulate_pair_trial(domain, opts, static_cast<int>(from), to, r.cap, rng);
            }
            r.pair_means[from * static_cast<std::size_t>(n) + static_cast<std::size_t>(to)] =
                total / trials_per_pair;
        }
    });

    std::vector<double> ordered;
    std::vector<double> unordered;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            ordered.push_back(r.mean_steps(a, b));
            if (a < b) unordered.push_back(0.5 * (r.mean_steps(a, b) + r.mean_steps(b, a)));
        }
    }
    r.ordered = summarize(std::move(ordered));
    r.unordered = summarize(std::move(unordered));
    return r;
}

inline void write_pair_steps_csv(std::ostream& out, const PairStepsReport& r) {
    out << "method,t,options,pairs,trials_per_pair,cap_steps,median_steps,iqr_steps,mean_steps,"
           "std_steps\n";
    for (const auto& [tag, s] : {std::pair{"ordered", r.ordered}, std::pair{"unordered", r.unordered}}) {
        out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.method, r.t, r.option_count, tag,
                           r.trials_per_pair, r.cap, s.median, s.iqr, s.mean, s.std);
    }
}

inline void write_pair_matrix_csv(std::ostream& out, const PairStepsReport& r) {
    out << "from,to,mean_steps\n";
    for (int a = 0; a < r.states; ++a) {
        for (int b = 0; b < r.states; ++b) {
            out << a << ',' << b << ',' << fmt::format("{}", r.mean_steps(a, b)) << '\n';
        }
    }
}

struct CurvePoint {
    double mean = 0.0;
    double std = 0.0;
};

/// Per-episode mean and population standard deviation across logs.
inline std::vector<CurvePoint> learning_curve(const std::vector<RunLog>& logs,
                                              int failure_steps = 101) {
    if (logs.empty()) return {};
    const std::size_t episodes = logs.front().steps_per_episode.size();
    for (const RunLog& log : logs) {
        if (log.steps_per_episode.size() != episodes) {
            throw LengthMismatch("run logs have different episode counts");
        }
        for (int steps : log.steps_per_episode) {
            if (steps < 1 || steps > failure_steps) {
                throw InvalidRunLog(fmt::format("episode step count {} outside [1, {}]", steps,
                                                failure_steps));
            }
        }
    }
    std::vector<CurvePoint> curve(episodes);
    const auto count = static_cast<double>(logs.size());
    for (std::size_t e = 0; e < episodes; ++e) {
        double sum = 0.0;
        for (const RunLog& log : logs) sum += log.steps_per_episode[e];
        const double mean = sum / count;
        double ss = 0.0;
        for (const RunLog& log : logs) {
            const double d = log.steps_per_episode[e] - mean;
            ss += d * d;
        }
        curve[e] = {mean, std::sqrt(ss / count)};
    }
    return curve;
}

inline void write_learning_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "episode,mean_steps,std_steps\n";
    for (std::size_t e = 0; e < curve.size(); ++e) {
        out << fmt::format("{},{},{}\n", e, curve[e].mean, curve[e].std);
    }
}

/// Whitespace-separated copy for gnuplot.
inline void write_learning_curve_dat(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "# episode mean_steps std_steps\n";
    for (std::size_t e = 0; e < curve.size(); ++e) {
        out << fmt::format("{} {} {}\n", e, curve[e].mean, curve[e].std);
    }
}

/// 100 diffusion times evenly spaced on [1, 1000], rounded to integers.
inline std::vector<int> difficulty_time_grid() {
    std::vector<int> ts;
    for (int i = 0; i < 100; ++i) {
        ts.push_back(static_cast<int>(std::lround(1.0 + 999.0 * i / 99.0)));
    }
    return ts;
}

/// Mean pairwise diffusion distance over unordered pairs at time t. Column
/// differences are taken directly; the Gram-matrix shortcut loses the small
/// distances of large t to cancellation.
inline double mean_pairwise_diffusion_distance(const WalkSpectrum& sp, double t) {
    const Eigen::MatrixXd p = transition_powers(sp, t);
    const Eigen::Index n = p.cols();
    double sum = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a + 1; b < n; ++b) sum += (p.col(a) - p.col(b)).norm();
    }
    return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

/// |S| times the average over the time grid of the mean pairwise diffusion distance.
inline double domain_difficulty(const WalkSpectrum& sp, const StateGraph& g) {
    if (sp.size() != g.size()) throw std::invalid_argument("spectrum does not match graph");
    if (g.size() < 2) return 0.0;
    const std::vector<int> grid = difficulty_time_grid();
    double acc = 0.0;
    for (int t : grid) acc += mean_pairwise_diffusion_distance(sp, t);
    return static_cast<double>(g.size()) * acc / static_cast<double>(grid.size());
}

}  // namespace diffopt
