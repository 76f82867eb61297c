#pragma once

// State graphs built from domains or transition kernels, and the lazy-walk
// matrices derived from them.

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "env.hpp"
#include "error.hpp"

namespace diffopt {

/// Weighted graph over states. For directed graphs the weight matrix is stored
/// destination-major: weights(s', s) is the weight of the transition s -> s'.
/// `degree` holds row sums in both cases.
struct StateGraph {
    std::vector<Cell> states;  ///< grid cell per state; empty for abstract graphs
    Eigen::MatrixXd weights;
    bool symmetric = true;
    Eigen::VectorXd degree;
    double total_degree = 0.0;
    /// Neighbors under the support of M + Mᵀ, self excluded, ascending.
    std::vector<std::vector<int>> adjacency;

    int size() const { return static_cast<int>(weights.rows()); }
    bool has_cells() const { return !states.empty(); }
};

/// Wraps a weight matrix; derives the symmetry flag, degrees, and neighbor lists.
inline StateGraph graph_from_weights(Eigen::MatrixXd weights, std::vector<Cell> cells = {}) {
    if (weights.rows() != weights.cols() || weights.rows() == 0) {
        throw std::invalid_argument("weight matrix must be square and non-empty");
    }
    if (!cells.empty() && static_cast<Eigen::Index>(cells.size()) != weights.rows()) {
        throw std::invalid_argument("cell list does not match the weight matrix");
    }
    if ((weights.array() < 0.0).any()) throw std::invalid_argument("negative edge weight");

    StateGraph g;
    g.states = std::move(cells);
    g.symmetric = (weights.array() == weights.transpose().array()).all();
    g.degree = weights.rowwise().sum();
    g.total_degree = g.degree.sum();
    const Eigen::Index n = weights.rows();
    g.adjacency.resize(static_cast<std::size_t>(n));
    for (Eigen::Index s = 0; s < n; ++s) {
        for (Eigen::Index t = 0; t < n; ++t) {
            if (s != t && (weights(s, t) > 0.0 || weights(t, s) > 0.0)) {
                g.adjacency[static_cast<std::size_t>(s)].push_back(static_cast<int>(t));
            }
        }
    }
    g.weights = std::move(weights);
    return g;
}

/// Undirected binary graph of single-action moves. Wind is ignored: the support
/// of the dynamics does not depend on it.
inline StateGraph build_state_graph(const Domain& domain) {
    const int n = domain.num_states();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        for (Action a : kActions) {
            const int t = domain.successor(s, a);
            if (t != s) {
                m(s, t) = 1.0;
                m(t, s) = 1.0;
            }
        }
    }
    StateGraph g = graph_from_weights(std::move(m), domain.cells());
    for (int s = 0; s < n; ++s) {
        if (g.degree(s) <= 0.0) {
            throw DisconnectedDomain("state " + std::to_string(s) + " has no neighbors");
        }
    }
    return g;
}

/// Directed graph from a column-stochastic kernel T(s', s). Self-transitions are
/// dropped (laziness enters through the walk matrix), so M(s', s) = T(s', s) for s' != s.
inline StateGraph build_directed_graph(const Eigen::MatrixXd& transitions,
                                       std::vector<Cell> cells = {}) {
    if (transitions.rows() != transitions.cols() || transitions.rows() == 0) {
        throw NonStochasticInput("transition matrix must be square and non-empty");
    }
    if ((transitions.array() < 0.0).any()) {
        throw NonStochasticInput("transition matrix has negative entries");
    }
    const Eigen::VectorXd sums = transitions.colwise().sum().transpose();
    for (Eigen::Index s = 0; s < sums.size(); ++s) {
        if (std::abs(sums(s) - 1.0) > 1e-9) {
            throw NonStochasticInput(fmt::format("column {} sums to {}, expected 1", s, sums(s)));
        }
    }
    Eigen::MatrixXd m = transitions;
    m.diagonal().setZero();
    return graph_from_weights(std::move(m), std::move(cells));
}

inline StateGraph build_directed_graph(const Domain& domain) {
    return build_directed_graph(transition_matrix(domain), domain.cells());
}

/// Lazy walk W, normalized Laplacian N, and stationary distribution of W.
struct WalkMatrices {
    Eigen::MatrixXd walk;
    Eigen::MatrixXd laplacian;
    Eigen::VectorXd stationary;
    Eigen::VectorXd degree;
    bool symmetric = true;
};

/// W = ½(I + M D⁻¹) and N = I − D^{-1/2} M D^{-1/2}. For directed graphs D in N
/// is the row-sum degree while W normalizes by column sums so it stays stochastic.
inline WalkMatrices walk_matrices(const StateGraph& g) {
    const Eigen::Index n = g.weights.rows();
    for (Eigen::Index s = 0; s < n; ++s) {
        if (!(g.degree(s) > 0.0)) {
            throw ZeroDegreeState("state " + std::to_string(s) + " has zero degree");
        }
    }
    WalkMatrices wm;
    wm.symmetric = g.symmetric;
    wm.degree = g.degree;

    const Eigen::VectorXd inv_sqrt = g.degree.array().rsqrt();
    wm.laplacian = Eigen::MatrixXd::Identity(n, n) -
                   inv_sqrt.asDiagonal() * g.weights * inv_sqrt.asDiagonal();

    if (g.symmetric) {
        wm.walk = 0.5 * (Eigen::MatrixXd::Identity(n, n) +
                         g.weights * g.degree.cwiseInverse().asDiagonal());
        wm.stationary = g.degree / g.total_degree;
        return wm;
    }

    const Eigen::VectorXd out = g.weights.colwise().sum().transpose();
    for (Eigen::Index s = 0; s < n; ++s) {
        if (!(out(s) > 0.0)) {
            throw ZeroDegreeState("state " + std::to_string(s) + " has no outgoing transitions");
        }
    }
    wm.walk = 0.5 * (Eigen::MatrixXd::Identity(n, n) + g.weights * out.cwiseInverse().asDiagonal());

    // Stationary law: solve (W − I)π = 0 with Σπ = 1 appended as an extra row.
    Eigen::MatrixXd system(n + 1, n);
    system.topRows(n) = wm.walk - Eigen::MatrixXd::Identity(n, n);
    system.row(n).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    wm.stationary = system.colPivHouseholderQr().solve(rhs);
    return wm;
}

/// Comma-separated dump, one matrix row per line, shortest round-trip formatting.
inline void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << fmt::format("{}", m(r, c));
        }
        out << '\n';
    }
}

}  // namespace diffopt
