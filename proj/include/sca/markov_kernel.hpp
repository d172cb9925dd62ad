#pragma once

#include "sca/dataset.hpp"
#include "sca/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace sca {

/// Row-stochastic one-step transition matrix of the random walk on the data,
/// A(i,j) = exp(-D(i,j)/eps) / sum_k exp(-D(i,k)/eps).
struct TransitionMatrix {
    Eigen::MatrixXd A;
    double epsilon = 0.0;
    DissimilarityKind diss_kind = DissimilarityKind::SquaredEuclidean;
    /// Row sums of the unnormalized (symmetric) Gaussian kernel.
    Eigen::VectorXd row_mass;

    Eigen::Index size() const { return A.rows(); }
};

struct StationaryDistribution {
    Eigen::VectorXd phi0;
};

struct KernelOptions {
    /// When set, kernel entries with D/eps above the cutoff are zeroed. Off by default.
    std::optional<double> cutoff;
};

/// Median of the strictly upper triangle of D.
inline double default_epsilon(const Eigen::MatrixXd& D) {
    const Eigen::Index n = D.rows();
    if (n < 2 || D.cols() != n) throw ValidationError("default_epsilon needs a square matrix with n >= 2");
    std::vector<double> upper;
    upper.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    bool any_positive = false;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            upper.push_back(D(i, j));
            any_positive = any_positive || D(i, j) > 0.0;
        }
    if (!any_positive) throw ValidationError("all off-diagonal dissimilarities are zero (identical points)");
    std::sort(upper.begin(), upper.end());
    const std::size_t m = upper.size();
    const double median = (m % 2 == 1) ? upper[m / 2] : 0.5 * (upper[m / 2 - 1] + upper[m / 2]);
    if (!(median > 0.0))
        throw ValidationError("median off-diagonal dissimilarity is zero; more than half the pairs coincide");
    return median;
}

/// Gaussian kernel row normalized to sum one. Throws NumericalError when a
/// row's off-diagonal kernel mass underflows, i.e. eps is far too small for
/// the point to connect to anything.
inline TransitionMatrix build_transition(const Eigen::MatrixXd& D, double epsilon,
                                         DissimilarityKind kind = DissimilarityKind::SquaredEuclidean,
                                         const KernelOptions& opts = {}) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw ValidationError("epsilon must be a positive finite number, got " + std::to_string(epsilon));
    const Eigen::Index n = D.rows();
    if (n < 2 || D.cols() != n) throw ValidationError("dissimilarity matrix must be square with n >= 2");

    TransitionMatrix T;
    T.epsilon = epsilon;
    T.diss_kind = kind;
    T.A.resize(n, n);
    T.row_mass.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double mass = 0.0, off_mass = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double scaled = D(i, j) / epsilon;
            const double w = (opts.cutoff && scaled > *opts.cutoff) ? 0.0 : std::exp(-scaled);
            T.A(i, j) = w;
            mass += w;
            if (j != i) off_mass += w;
        }
        if (!(off_mass > 0.0))
            throw NumericalError("kernel row " + std::to_string(i) + " underflows to zero off the diagonal at epsilon=" +
                                 std::to_string(epsilon) + "; epsilon is too small");
        T.row_mass(i) = mass;
        T.A.row(i) /= mass;
    }
    return T;
}

inline TransitionMatrix build_transition(const DataSet& data, const Dissimilarity& diss,
                                         std::optional<double> epsilon = std::nullopt,
                                         const KernelOptions& opts = {}) {
    const Eigen::MatrixXd D = pairwise_dissimilarity(data, diss);
    return build_transition(D, epsilon ? *epsilon : default_epsilon(D), diss.kind, opts);
}

/// Closed form from detailed balance: phi0(i) is proportional to the row mass
/// of the symmetric kernel.
inline StationaryDistribution stationary_distribution(const TransitionMatrix& T) {
    if (T.row_mass.size() != T.size() || !(T.row_mass.array() > 0.0).all())
        throw ValidationError("transition matrix has no valid kernel row masses");
    return {T.row_mass / T.row_mass.sum()};
}

/// Power iteration on A^T; independent cross-check of the closed form.
inline StationaryDistribution stationary_distribution_power(const TransitionMatrix& T, int max_iter = 100000,
                                                            double tol = 1e-14) {
    const Eigen::Index n = T.size();
    Eigen::VectorXd phi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd next = T.A.transpose() * phi;
        next /= next.sum();
        const double change = (next - phi).lpNorm<Eigen::Infinity>();
        phi = std::move(next);
        if (change <= tol) return {phi.cwiseMax(0.0) / phi.cwiseMax(0.0).sum()};
    }
    throw NumericalError("stationary distribution power iteration did not converge in " +
                         std::to_string(max_iter) + " iterations");
}

} // namespace sca
