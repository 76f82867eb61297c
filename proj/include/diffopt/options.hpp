#pragma once

// Option discovery: the diffusion score field, its local maxima, shortest-path
// option policies, and the eigenoption / cover-option / random-option baselines.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "env.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "spectral.hpp"

namespace diffopt {

struct ScoreField {
    double t = 0.0;
    Eigen::VectorXd values;
    std::string spectrum_source;
    /// Number of non-trivial eigenpairs used; equals |S| − 1 for the full field.
    int components = 0;
};

/// f_t(s) = ‖Σ_{i≥2} ω_i^t φ_i(s) φ̃_i‖². `max_components` truncates the sum to
/// the leading eigenpairs after the stationary one; the default uses all of them.
inline ScoreField score_field(const WalkSpectrum& sp, double t,
                              std::optional<int> max_components = std::nullopt) {
    if (!(t > 0.0)) throw std::invalid_argument("scale t must be positive");
    const int n = sp.size();
    int m = n - 1;
    if (max_components) m = std::clamp(*max_components, 0, n - 1);

    ScoreField f;
    f.t = t;
    f.spectrum_source = sp.source;
    f.components = m;
    if (m == 0) {
        f.values = Eigen::VectorXd::Zero(n);
        return f;
    }
    const Eigen::VectorXd w = detail::powers(sp.omegas.segment(1, m), t);
    const Eigen::MatrixXd deviation =
        sp.right.middleCols(1, m) * w.asDiagonal() * sp.left.middleCols(1, m).transpose();
    f.values = deviation.colwise().squaredNorm().transpose();
    return f;
}

namespace detail {

inline bool nearly_equal(double a, double b) {
    return std::abs(a - b) <= 1e-10 * std::max(std::abs(a), std::abs(b));
}

}  // namespace detail

/// States strictly above all graph neighbors. A connected plateau of equal values
/// counts once, through its lowest index, when everything around it is lower.
/// Sorted by descending value, then by index.
inline std::vector<int> local_maxima(const ScoreField& f, const StateGraph& g) {
    const int n = g.size();
    if (f.values.size() != n) throw std::invalid_argument("score field does not match graph");
    std::vector<bool> done(static_cast<std::size_t>(n), false);
    std::vector<int> maxima;
    for (int s = 0; s < n; ++s) {
        if (done[static_cast<std::size_t>(s)]) continue;
        const double v = f.values(s);
        std::vector<int> plateau{s};
        done[static_cast<std::size_t>(s)] = true;
        bool is_max = true;
        for (std::size_t k = 0; k < plateau.size(); ++k) {
            for (int u : g.adjacency[static_cast<std::size_t>(plateau[k])]) {
                if (detail::nearly_equal(f.values(u), v)) {
                    if (!done[static_cast<std::size_t>(u)]) {
                        done[static_cast<std::size_t>(u)] = true;
                        plateau.push_back(u);
                    }
                } else if (f.values(u) > v) {
                    is_max = false;
                }
            }
        }
        // Plateau members reached from s were visited in BFS order; s is the
        // smallest unvisited index, hence the representative.
        if (is_max) maxima.push_back(s);
    }
    std::stable_sort(maxima.begin(), maxima.end(),
                     [&](int a, int b) { return f.values(a) > f.values(b); });
    return maxima;
}

/// Next primitive action per state; empty where no action is taken.
using Policy = std::vector<std::optional<Action>>;

inline std::optional<Action> action_between(Cell from, Cell to) {
    for (Action a : kActions) {
        const Cell d = offset(a);
        if (from.row + d.row == to.row && from.col + d.col == to.col) return a;
    }
    return std::nullopt;
}

/// Hop distance from every state to `goal` over the graph support.
inline std::vector<int> bfs_distances(const StateGraph& g, int goal) {
    std::vector<int> dist(static_cast<std::size_t>(g.size()), -1);
    std::queue<int> frontier;
    dist[static_cast<std::size_t>(goal)] = 0;
    frontier.push(goal);
    while (!frontier.empty()) {
        const int s = frontier.front();
        frontier.pop();
        for (int u : g.adjacency[static_cast<std::size_t>(s)]) {
            if (dist[static_cast<std::size_t>(u)] < 0) {
                dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(s)] + 1;
                frontier.push(u);
            }
        }
    }
    return dist;
}

/// Policy descending the BFS tree rooted at `goal`; ties go to the first action
/// in Left, Right, Up, Down order.
inline Policy shortest_path_policy(const StateGraph& g, int goal) {
    if (!g.has_cells()) throw std::invalid_argument("shortest-path policies need grid cells");
    const std::vector<int> dist = bfs_distances(g, goal);
    Policy policy(static_cast<std::size_t>(g.size()));
    for (int s = 0; s < g.size(); ++s) {
        const int ds = dist[static_cast<std::size_t>(s)];
        if (ds < 0) {
            throw UnreachableGoal("state " + std::to_string(s) + " cannot reach goal " +
                                  std::to_string(goal));
        }
        if (s == goal) continue;
        for (Action a : kActions) {
            for (int u : g.adjacency[static_cast<std::size_t>(s)]) {
                if (dist[static_cast<std::size_t>(u)] == ds - 1 &&
                    action_between(g.states[static_cast<std::size_t>(s)],
                                   g.states[static_cast<std::size_t>(u)]) == a) {
                    policy[static_cast<std::size_t>(s)] = a;
                    break;
                }
            }
            if (policy[static_cast<std::size_t>(s)]) break;
        }
        if (!policy[static_cast<std::size_t>(s)]) {
            throw UnreachableGoal("no grid move from state " + std::to_string(s) +
                                  " shortens the path to " + std::to_string(goal));
        }
    }
    return policy;
}

/// ⟨initiation set, policy, termination set⟩ with β ∈ {0, 1}.
struct Option {
    std::optional<int> goal;  ///< single target state; eigenoptions have none
    std::vector<bool> initiation;
    Policy policy;
    std::vector<bool> termination;

    bool can_start(int s) const { return initiation[static_cast<std::size_t>(s)]; }
    bool terminates(int s) const { return termination[static_cast<std::size_t>(s)]; }
    /// Invocable and not already terminated, so at least one step would be taken.
    bool eligible(int s) const { return can_start(s) && !terminates(s); }
};

enum class OptionMethod { Diffusion, Eigen, Cover, Random, None };

inline std::string_view to_string(OptionMethod m) {
    switch (m) {
        case OptionMethod::Diffusion: return "diffusion";
        case OptionMethod::Eigen: return "eigen";
        case OptionMethod::Cover: return "cover";
        case OptionMethod::Random: return "random";
        case OptionMethod::None: return "none";
    }
    return "?";
}

inline std::optional<OptionMethod> parse_method(std::string_view name) {
    for (OptionMethod m : {OptionMethod::Diffusion, OptionMethod::Eigen, OptionMethod::Cover,
                           OptionMethod::Random, OptionMethod::None}) {
        if (to_string(m) == name) return m;
    }
    return std::nullopt;
}

struct OptionParams {
    double t = 0.0;
    int k = 0;
    std::uint64_t seed = 0;
};

struct OptionSet {
    OptionMethod method = OptionMethod::None;
    OptionParams params;
    std::vector<Option> options;

    std::size_t size() const { return options.size(); }
};

/// Option reaching `goal` from anywhere along shortest paths.
inline Option goal_option(const StateGraph& g, int goal) {
    const auto n = static_cast<std::size_t>(g.size());
    Option o;
    o.goal = goal;
    o.initiation.assign(n, true);
    o.policy = shortest_path_policy(g, goal);
    o.termination.assign(n, false);
    o.termination[static_cast<std::size_t>(goal)] = true;
    return o;
}

inline WalkSpectrum graph_spectrum(const StateGraph& g) { return spectrum_of(walk_matrices(g)); }

/// Goal states of the diffusion options at scale t.
inline std::vector<int> diffusion_goals(const StateGraph& g, double t,
                                        std::optional<int> max_components = std::nullopt) {
    return local_maxima(score_field(graph_spectrum(g), t, max_components), g);
}

/// One shortest-path option per local maximum of f_t. Directed graphs take the
/// spectrum of the positive polar factor of N.
inline OptionSet discover_diffusion_options(const StateGraph& g, double t,
                                            std::optional<int> max_components = std::nullopt) {
    OptionSet set;
    set.method = OptionMethod::Diffusion;
    set.params.t = t;
    for (int goal : diffusion_goals(g, t, max_components)) {
        set.options.push_back(goal_option(g, goal));
    }
    set.params.k = static_cast<int>(set.size());
    return set;
}

namespace detail {

/// Grid successor of s under a within the graph support, or s when blocked.
inline std::vector<std::array<int, kNumActions>> grid_successors(const StateGraph& g) {
    std::vector<std::array<int, kNumActions>> next(static_cast<std::size_t>(g.size()));
    for (int s = 0; s < g.size(); ++s) {
        auto& row = next[static_cast<std::size_t>(s)];
        row.fill(s);
        for (int u : g.adjacency[static_cast<std::size_t>(s)]) {
            if (auto a = action_between(g.states[static_cast<std::size_t>(s)],
                                        g.states[static_cast<std::size_t>(u)])) {
                row[static_cast<std::size_t>(*a)] = u;
            }
        }
    }
    return next;
}

}  // namespace detail

/// Eigenoption for intrinsic reward r(s, s') = sign·(v(s') − v(s)), solved by value
/// iteration with a zero-valued terminate choice. States where no action has
/// positive value form the termination set.
inline Option eigenoption(const StateGraph& g, const Eigen::VectorXd& v, double sign,
                          double gamma = 0.9) {
    const int n = g.size();
    const auto next = detail::grid_successors(g);
    Eigen::VectorXd value = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd q(n, kNumActions);
    for (int iter = 0; iter < 10000; ++iter) {
        for (int s = 0; s < n; ++s) {
            for (int a = 0; a < kNumActions; ++a) {
                const int u = next[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
                q(s, a) = sign * (v(u) - v(s)) + gamma * value(u);
            }
        }
        const Eigen::VectorXd updated = q.rowwise().maxCoeff().cwiseMax(0.0);
        const double delta = (updated - value).cwiseAbs().maxCoeff();
        value = updated;
        if (delta < 1e-13) break;
    }
    const double tol = 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff());
    Option o;
    o.initiation.assign(static_cast<std::size_t>(n), true);
    o.termination.assign(static_cast<std::size_t>(n), false);
    o.policy.assign(static_cast<std::size_t>(n), std::nullopt);
    for (int s = 0; s < n; ++s) {
        int best = 0;
        for (int a = 1; a < kNumActions; ++a) {
            if (q(s, a) > q(s, best)) best = a;
        }
        if (q(s, best) <= tol) {
            o.termination[static_cast<std::size_t>(s)] = true;
        } else {
            o.policy[static_cast<std::size_t>(s)] = static_cast<Action>(best);
        }
    }
    return o;
}

/// Eigenoption baseline: right eigenvectors φ̃_2, φ̃_3, … each with sign + then −,
/// until k options exist. An odd k ends on the positive sign.
inline OptionSet eigenoptions(const StateGraph& g, int k, double gamma = 0.9) {
    if (k < 1) throw std::invalid_argument("eigenoptions: k must be >= 1");
    if (!g.has_cells()) throw std::invalid_argument("eigenoptions need grid cells");
    const WalkSpectrum sp = graph_spectrum(g);
    OptionSet set;
    set.method = OptionMethod::Eigen;
    set.params.k = k;
    for (int i = 1; i < sp.size() && static_cast<int>(set.size()) < k; ++i) {
        for (double sign : {1.0, -1.0}) {
            if (static_cast<int>(set.size()) == k) break;
            set.options.push_back(eigenoption(g, sp.right.col(i), sign, gamma));
        }
    }
    return set;
}

/// Fiedler vector of the combinatorial Laplacian D − A of a symmetric adjacency.
inline Eigen::VectorXd fiedler_vector(const Eigen::MatrixXd& adjacency) {
    const Eigen::MatrixXd lap =
        Eigen::MatrixXd(adjacency.rowwise().sum().asDiagonal()) - adjacency;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> evd(lap);
    if (evd.info() != Eigen::Success) throw EvdFailure("Fiedler eigensolver did not converge");
    Eigen::MatrixXd vec = evd.eigenvectors().col(1);
    detail::fix_signs(vec);
    return vec.col(0);
}

inline double algebraic_connectivity(const Eigen::MatrixXd& adjacency) {
    const Eigen::MatrixXd lap =
        Eigen::MatrixXd(adjacency.rowwise().sum().asDiagonal()) - adjacency;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> evd(lap, Eigen::EigenvaluesOnly);
    return evd.eigenvalues()(1);
}

/// Point option from `source` to `target`; invocable at `source` only.
inline Option point_option(const StateGraph& g, int source, int target) {
    Option o = goal_option(g, target);
    o.initiation.assign(static_cast<std::size_t>(g.size()), false);
    o.initiation[static_cast<std::size_t>(source)] = true;
    return o;
}

/// Cover options: repeatedly join the two extremes of the Fiedler vector of the
/// augmented graph with a pair of point options, then add that edge.
inline OptionSet cover_options(const StateGraph& g, int k) {
    if (k < 1) throw std::invalid_argument("cover options: k must be >= 1");
    Eigen::MatrixXd adjacency = (g.weights + g.weights.transpose()).unaryExpr(
        [](double w) { return w > 0.0 ? 1.0 : 0.0; });
    adjacency.diagonal().setZero();
    OptionSet set;
    set.method = OptionMethod::Cover;
    set.params.k = k;
    while (static_cast<int>(set.size()) < k) {
        const Eigen::VectorXd fiedler = fiedler_vector(adjacency);
        Eigen::Index lo = 0;
        Eigen::Index hi = 0;
        fiedler.minCoeff(&lo);
        fiedler.maxCoeff(&hi);
        set.options.push_back(point_option(g, static_cast<int>(lo), static_cast<int>(hi)));
        if (static_cast<int>(set.size()) < k) {
            set.options.push_back(point_option(g, static_cast<int>(hi), static_cast<int>(lo)));
        }
        adjacency(lo, hi) = 1.0;
        adjacency(hi, lo) = 1.0;
    }
    return set;
}

/// k distinct goal states drawn uniformly, each with a shortest-path option.
template <class Rng>
OptionSet random_options(const StateGraph& g, int k, Rng& rng) {
    if (k < 0 || k > g.size()) throw std::invalid_argument("random options: need 0 <= k <= |S|");
    std::vector<int> states(static_cast<std::size_t>(g.size()));
    std::iota(states.begin(), states.end(), 0);
    // Partial Fisher-Yates with explicit draws keeps the goal set platform-stable.
    for (int i = 0; i < k; ++i) {
        const std::uint64_t span = static_cast<std::uint64_t>(g.size() - i);
        const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng() % span);
        std::swap(states[static_cast<std::size_t>(i)], states[j]);
    }
    OptionSet set;
    set.method = OptionMethod::Random;
    set.params.k = k;
    for (int i = 0; i < k; ++i) set.options.push_back(goal_option(g, states[static_cast<std::size_t>(i)]));
    return set;
}

/// ⟨D_t²(s, s')⟩ over all s' by the defining matrix power, for every s.
inline Eigen::VectorXd mean_sq_diffusion_distances(const WalkMatrices& wm, int t) {
    if (t < 1) throw std::invalid_argument("diffusion time must be >= 1");
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(wm.walk.rows(), wm.walk.cols());
    for (int i = 0; i < t; ++i) p = wm.walk * p;
    const Eigen::MatrixXd gram = p.transpose() * p;
    const Eigen::VectorXd sq = gram.diagonal();
    const auto n = static_cast<double>(p.cols());
    // Σ_{s'} ‖p_s − p_{s'}‖² = n‖p_s‖² + Σ‖p_{s'}‖² − 2 p_sᵀ Σ p_{s'}
    return (sq.array() + sq.sum() / n - 2.0 * gram.rowwise().sum().array() / n).matrix();
}

inline double mean_sq_diffusion_distance(const WalkMatrices& wm, int s, int t) {
    return mean_sq_diffusion_distances(wm, t)(s);
}

/// One row per (option, state): option id, state, cell, action, goal/initiation/termination flags.
inline void write_options_csv(std::ostream& out, const OptionSet& set, const StateGraph& g) {
    out << "option,method,state,row,col,action,is_goal,in_initiation,terminates\n";
    for (std::size_t o = 0; o < set.options.size(); ++o) {
        const Option& opt = set.options[o];
        for (int s = 0; s < g.size(); ++s) {
            const auto idx = static_cast<std::size_t>(s);
            const Cell c = g.has_cells() ? g.states[idx] : Cell{-1, -1};
            out << o << ',' << to_string(set.method) << ',' << s << ',' << c.row << ',' << c.col
                << ',' << (opt.policy[idx] ? to_string(*opt.policy[idx]) : std::string_view("none"))
                << ',' << (opt.goal == s ? 1 : 0) << ',' << (opt.initiation[idx] ? 1 : 0) << ','
                << (opt.termination[idx] ? 1 : 0) << '\n';
        }
    }
}

}  // namespace diffopt
