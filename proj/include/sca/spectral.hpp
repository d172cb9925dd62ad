#pragma once

#include "sca/error.hpp"
#include "sca/markov_kernel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace sca {

/// Nontrivial spectrum of A in descending order with right eigenvectors
/// normalized so that sum_z phi0(z) psi_j(z) psi_k(z) = delta_jk. The trivial
/// pair (1, constant) is kept apart.
struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd right_eigenvectors;
    double trivial_eigenvalue = 1.0;
    Eigen::VectorXd trivial_eigenvector;
    StationaryDistribution phi0;

    Eigen::Index size() const { return right_eigenvectors.rows(); }
    Eigen::Index rank() const { return eigenvalues.size(); }
};

/// Diffusion coordinates: column j is lambda_j^t psi_j.
struct DiffusionEmbedding {
    Eigen::MatrixXd coords;
    int t = 1;
    Eigen::Index r = 0;
};

inline double integer_power(double base, int exponent) {
    double out = 1.0;
    for (int k = 0; k < exponent; ++k) out *= base;
    return out;
}

/// Tolerance on asymmetry of D^{1/2} A D^{-1/2}; beyond it the spectrum could
/// be complex and the symmetric route is invalid.
inline constexpr double kSymmetryTolerance = 1e-10;

/// Symmetric route: S = D^{1/2} A D^{-1/2} (D = kernel row masses) is
/// symmetric with the spectrum of A, and psi = D^{-1/2} v rescaled for
/// phi0-orthonormality.
inline SpectralDecomposition decompose(const TransitionMatrix& T) {
    const Eigen::Index n = T.size();
    if (n < 2) throw ValidationError("decompose needs n >= 2");
    const StationaryDistribution phi0 = stationary_distribution(T);
    const Eigen::ArrayXd sqrt_mass = T.row_mass.array().sqrt();

    Eigen::MatrixXd S(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) S(i, j) = T.A(i, j) * sqrt_mass(i) / sqrt_mass(j);
    const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance * std::max(1.0, S.cwiseAbs().maxCoeff()))
        throw NumericalError("symmetrized kernel is asymmetric by " + std::to_string(asym) +
                             "; spectrum may be complex");
    S = 0.5 * (S + S.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");

    // For the normalized v, psi = sqrt(vol) D^{-1/2} v has unit phi0-norm.
    const double vol = T.row_mass.sum();
    const Eigen::ArrayXd scale = std::sqrt(vol) / sqrt_mass;

    SpectralDecomposition out;
    out.phi0 = phi0;
    out.trivial_eigenvalue = 1.0;
    out.trivial_eigenvector = Eigen::VectorXd::Ones(n);
    out.eigenvalues.resize(n - 1);
    out.right_eigenvectors.resize(n, n - 1);
    // Solver order is ascending; the last pair is the trivial one.
    for (Eigen::Index j = 0; j < n - 1; ++j) {
        const Eigen::Index src = n - 2 - j;
        out.eigenvalues(j) = std::clamp(solver.eigenvalues()(src), -1.0, 1.0);
        Eigen::VectorXd psi = (solver.eigenvectors().col(src).array() * scale).matrix();
        Eigen::Index lead = 0;
        for (Eigen::Index i = 1; i < n; ++i)
            if (std::abs(psi(i)) > std::abs(psi(lead))) lead = i;
        if (psi(lead) < 0.0) psi = -psi;
        out.right_eigenvectors.col(j) = psi;
    }
    return out;
}

inline DiffusionEmbedding embed(const SpectralDecomposition& S, int t, Eigen::Index r) {
    if (t < 1) throw ValidationError("diffusion time t must be >= 1, got " + std::to_string(t));
    if (r < 1 || r > S.rank())
        throw ValidationError("embedding dimension r must be in [1, " + std::to_string(S.rank()) + "], got " +
                              std::to_string(r));
    DiffusionEmbedding emb;
    emb.t = t;
    emb.r = r;
    emb.coords.resize(S.size(), r);
    for (Eigen::Index j = 0; j < r; ++j)
        emb.coords.col(j) = integer_power(S.eigenvalues(j), t) * S.right_eigenvectors.col(j);
    return emb;
}

inline Eigen::Index default_dimension(Eigen::Index n) { return std::min<Eigen::Index>(50, n - 1); }

/// t-th power of A by repeated multiplication.
inline Eigen::MatrixXd transition_power(const TransitionMatrix& T, int t) {
    if (t < 1) throw ValidationError("diffusion time t must be >= 1, got " + std::to_string(t));
    Eigen::MatrixXd At = T.A;
    for (int k = 1; k < t; ++k) At = (At * T.A).eval();
    return At;
}

/// Diffusion distance from an explicit matrix power A_t:
/// sqrt(sum_z (A_t(i,z) - A_t(j,z))^2 / phi0(z)).
inline double diffusion_distance(const Eigen::MatrixXd& At, const StationaryDistribution& phi0, Eigen::Index i,
                                 Eigen::Index j) {
    const Eigen::Index n = At.rows();
    if (i < 0 || j < 0 || i >= n || j >= n) throw ValidationError("diffusion_distance index out of range");
    double s = 0.0;
    for (Eigen::Index z = 0; z < n; ++z) {
        const double diff = At(i, z) - At(j, z);
        s += diff * diff / phi0.phi0(z);
    }
    return std::sqrt(s);
}

inline double diffusion_distance(const TransitionMatrix& T, const StationaryDistribution& phi0, int t,
                                 Eigen::Index i, Eigen::Index j) {
    return diffusion_distance(transition_power(T, t), phi0, i, j);
}

} // namespace sca
