#pragma once

#include "sca/dataset.hpp"
#include "sca/error.hpp"
#include "sca/markov_kernel.hpp"
#include "sca/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace sca {

/// Eigenvalues with magnitude below this cannot be extended: 1/lambda blows up.
inline constexpr double kExtensionEigenvalueFloor = 1e-12;

/// Everything needed to evaluate the kernel-smoothed (Nystrom) estimate of
/// the eigenfunctions at new points: the training points, their
/// decomposition, and the exact kernel used to build it.
struct ExtensionModel {
    Eigen::MatrixXd training_points;
    SpectralDecomposition decomposition;
    double epsilon = 0.0;
    DissimilarityKind diss_kind = DissimilarityKind::SquaredEuclidean;
    KernelOptions kernel;

    Eigen::Index dim() const { return training_points.cols(); }
};

inline ExtensionModel make_extension_model(const DataSet& data, const TransitionMatrix& T,
                                           SpectralDecomposition decomposition, const KernelOptions& kernel = {}) {
    if (T.diss_kind == DissimilarityKind::Table)
        throw ValidationError("out-of-sample extension needs a built-in dissimilarity, not a table");
    if (T.size() != data.size()) throw ValidationError("transition matrix does not match dataset size");
    return {data.points, std::move(decomposition), T.epsilon, T.diss_kind, kernel};
}

/// A(x, x_i) over training points i: nonnegative, sums to one. Uses the same
/// arithmetic as build_transition so a training point reproduces its row.
template <typename Derived>
Eigen::VectorXd kernel_weights(const ExtensionModel& M, const Eigen::MatrixBase<Derived>& x) {
    if (x.size() != M.dim())
        throw ValidationError("query point has dimension " + std::to_string(x.size()) + ", model expects " +
                              std::to_string(M.dim()));
    if (!x.allFinite()) throw ValidationError("query point has non-finite coordinates");
    const Eigen::Index n = M.training_points.rows();
    Eigen::VectorXd w(n);
    double mass = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double scaled = point_dissimilarity(M.diss_kind, x, M.training_points.row(i)) / M.epsilon;
        w(i) = (M.kernel.cutoff && scaled > *M.kernel.cutoff) ? 0.0 : std::exp(-scaled);
        mass += w(i);
    }
    if (!(mass > 0.0))
        throw NumericalError("query point is disconnected from every training point (kernel mass underflows)");
    return w / mass;
}

inline void check_extendable(const ExtensionModel& M, Eigen::Index j) {
    if (j < 0 || j >= M.decomposition.rank())
        throw ValidationError("eigen-index " + std::to_string(j + 1) + " out of range [1, " +
                              std::to_string(M.decomposition.rank()) + "]");
    const double lambda = M.decomposition.eigenvalues(j);
    if (std::abs(lambda) < kExtensionEigenvalueFloor)
        throw NumericalError("cannot extend eigenfunction " + std::to_string(j + 1) + ": |lambda| = " +
                             std::to_string(std::abs(lambda)) + " is below the extension floor");
}

/// psi_hat_j(x) = (1/lambda_j) sum_i A(x, x_i) psi_j(x_i). Index j is 0-based
/// into the nontrivial spectrum (j = 0 is psi_1).
template <typename Derived>
double extend_eigenfunction(const ExtensionModel& M, const Eigen::MatrixBase<Derived>& x, Eigen::Index j) {
    check_extendable(M, j);
    const Eigen::VectorXd w = kernel_weights(M, x);
    return w.dot(M.decomposition.right_eigenvectors.col(j)) / M.decomposition.eigenvalues(j);
}

/// Row k is (lambda_1^t psi_hat_1(x_k), ..., lambda_r^t psi_hat_r(x_k)).
inline Eigen::MatrixXd extend_embedding(const ExtensionModel& M, const Eigen::MatrixXd& X_new, int t,
                                        Eigen::Index r) {
    if (t < 1) throw ValidationError("diffusion time t must be >= 1, got " + std::to_string(t));
    if (r < 1 || r > M.decomposition.rank())
        throw ValidationError("embedding dimension r must be in [1, " + std::to_string(M.decomposition.rank()) +
                              "], got " + std::to_string(r));
    if (X_new.rows() > 0 && X_new.cols() != M.dim())
        throw ValidationError("query points have dimension " + std::to_string(X_new.cols()) + ", model expects " +
                              std::to_string(M.dim()));
    Eigen::VectorXd scale(r);
    for (Eigen::Index j = 0; j < r; ++j) {
        check_extendable(M, j);
        const double lambda = M.decomposition.eigenvalues(j);
        scale(j) = integer_power(lambda, t) / lambda;
    }
    const auto psi = M.decomposition.right_eigenvectors.leftCols(r);
    Eigen::MatrixXd out(X_new.rows(), r);
    for (Eigen::Index k = 0; k < X_new.rows(); ++k) {
        const Eigen::VectorXd w = kernel_weights(M, X_new.row(k));
        out.row(k) = (psi.transpose() * w).cwiseProduct(scale).transpose();
    }
    return out;
}

} // namespace sca
