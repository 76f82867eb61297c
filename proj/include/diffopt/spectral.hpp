#pragma once

// Spectrum of the lazy walk obtained through the normalized Laplacian, polar
// decomposition for directed graphs, diffusion distances and embeddings.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "error.hpp"
#include "graph.hpp"

namespace diffopt {

/// Eigenpairs of W = D^{1/2}(I − N/2)D^{-1/2}, index 0 being the stationary mode.
///   omegas(i) = 1 − nus(i)/2, descending
///   left.col(i)  = D^{-1/2} psi.col(i)   (left eigenvector φ_i)
///   right.col(i) = D^{1/2}  psi.col(i)   (right eigenvector φ̃_i)
struct WalkSpectrum {
    Eigen::VectorXd omegas;
    Eigen::VectorXd nus;
    Eigen::MatrixXd psi;
    Eigen::MatrixXd left;
    Eigen::MatrixXd right;
    Eigen::VectorXd degree;
    /// "laplacian" when N was diagonalized directly, "polar" for its positive part.
    std::string source;

    int size() const { return static_cast<int>(omegas.size()); }
};

/// Polar factors of N = R U: R symmetric positive semi-definite, U orthogonal.
struct PositivePart {
    Eigen::MatrixXd positive;
    Eigen::MatrixXd unitary;
};

namespace detail {

/// Flips each column so that its first entry that is nonzero (relative to the
/// column's largest magnitude) is positive.
inline void fix_signs(Eigen::MatrixXd& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        const double scale = vectors.col(c).cwiseAbs().maxCoeff();
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
            if (std::abs(vectors(r, c)) > 1e-9 * scale) {
                if (vectors(r, c) < 0.0) vectors.col(c) *= -1.0;
                break;
            }
        }
    }
}

inline WalkSpectrum spectrum_from_symmetric(const Eigen::MatrixXd& symmetric_laplacian,
                                            const Eigen::VectorXd& degree, std::string source) {
    const Eigen::MatrixXd sym = 0.5 * (symmetric_laplacian + symmetric_laplacian.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> evd(sym);
    if (evd.info() != Eigen::Success) throw EvdFailure("symmetric eigensolver did not converge");

    WalkSpectrum sp;
    sp.nus = evd.eigenvalues();  // ascending
    sp.psi = evd.eigenvectors();
    fix_signs(sp.psi);
    sp.omegas = (1.0 - 0.5 * sp.nus.array()).matrix();
    const Eigen::VectorXd sqrt_d = degree.array().sqrt();
    sp.left = sqrt_d.cwiseInverse().asDiagonal() * sp.psi;
    sp.right = sqrt_d.asDiagonal() * sp.psi;
    sp.degree = degree;
    sp.source = std::move(source);
    return sp;
}

inline Eigen::VectorXd powers(const Eigen::VectorXd& omegas, double t) {
    return omegas.unaryExpr([t](double w) { return std::pow(w, t); });
}

}  // namespace detail

/// Full spectrum from a symmetric normalized Laplacian.
inline WalkSpectrum decompose(const WalkMatrices& wm) {
    const Eigen::MatrixXd& n = wm.laplacian;
    const double asym = (n - n.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, n.cwiseAbs().maxCoeff())) {
        throw std::invalid_argument("decompose requires a symmetric Laplacian; use the polar path");
    }
    return detail::spectrum_from_symmetric(n, wm.degree, "laplacian");
}

/// R = A Σ Aᵀ and U = A Bᵀ from the SVD N = A Σ Bᵀ.
inline PositivePart polar_positive_part(const Eigen::MatrixXd& n) {
    if (n.rows() != n.cols()) throw std::invalid_argument("polar decomposition needs a square matrix");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(n, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) throw SvdFailure("singular value decomposition failed");
    const Eigen::MatrixXd& a = svd.matrixU();
    PositivePart pp;
    pp.positive = a * svd.singularValues().asDiagonal() * a.transpose();
    pp.positive = 0.5 * (pp.positive + pp.positive.transpose()).eval();
    pp.unitary = a * svd.matrixV().transpose();
    return pp;
}

/// Spectrum built from the positive polar factor of a (possibly non-symmetric) N.
inline WalkSpectrum decompose_positive_part(const WalkMatrices& wm) {
    return detail::spectrum_from_symmetric(polar_positive_part(wm.laplacian).positive, wm.degree,
                                           "polar");
}

/// Symmetric graphs go through N directly, directed ones through R.
inline WalkSpectrum spectrum_of(const WalkMatrices& wm) {
    return wm.symmetric ? decompose(wm) : decompose_positive_part(wm);
}

/// Column s is Σ_i ω_i^t φ_i(s) φ̃_i, i.e. p_t^{(s)} = W^t δ_s for symmetric graphs.
inline Eigen::MatrixXd transition_powers(const WalkSpectrum& sp, double t) {
    return sp.right * detail::powers(sp.omegas, t).asDiagonal() * sp.left.transpose();
}

/// D_t(s, s') = ‖p_t^{(s)} − p_t^{(s')}‖ evaluated in the eigenbasis.
inline double diffusion_distance(const WalkSpectrum& sp, int s, int s2, double t) {
    if (t < 1.0) throw std::invalid_argument("diffusion time must be >= 1");
    const Eigen::VectorXd coeff =
        detail::powers(sp.omegas, t).cwiseProduct((sp.left.row(s) - sp.left.row(s2)).transpose());
    return (sp.right * coeff).norm();
}

/// l-dimensional diffusion coordinates. The right eigenvectors are orthonormalized
/// in spectral order (Q R = [φ̃_1 … φ̃_n]) and state x maps to the first l entries
/// of Qᵀ p_t^{(x)}. With l = |S| Euclidean distances equal D_t exactly; smaller l
/// is an orthogonal projection, so the truncation error shrinks as l grows.
inline Eigen::MatrixXd diffusion_map(const WalkSpectrum& sp, double t, int dims) {
    if (dims < 1 || dims > sp.size()) throw std::invalid_argument("embedding dimension out of range");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(sp.right);
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        if (r(i, i) < 0.0) r.row(i) *= -1.0;
    }
    const Eigen::MatrixXd coords =
        sp.left * detail::powers(sp.omegas, t).asDiagonal() * r.transpose();
    return coords.leftCols(dims);
}

}  // namespace diffopt
