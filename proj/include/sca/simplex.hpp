#pragma once

#include "sca/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace sca {

struct SimplexLsResult {
    Eigen::VectorXd weights;
    double rss = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
};

/// KKT residual of min ||y - P g||^2 over the simplex at g. With gradient
/// h = P^T (P g - y) and common value c = min over free indices, reports
/// max(spread of h over free indices, max(0, c - h_i) over bound indices).
inline double simplex_kkt_residual(const Eigen::MatrixXd& P, const Eigen::VectorXd& y, const Eigen::VectorXd& g) {
    const Eigen::VectorXd h = P.transpose() * (P * g - y);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index i = 0; i < g.size(); ++i)
        if (g(i) > 0.0) {
            lo = std::min(lo, h(i));
            hi = std::max(hi, h(i));
        }
    double res = hi - lo;
    for (Eigen::Index i = 0; i < g.size(); ++i)
        if (g(i) <= 0.0) res = std::max(res, lo - h(i));
    return res;
}

/// Primal active-set solver for min ||y - P g||^2 s.t. g >= 0, sum g = 1.
/// Columns of P are the mixture components. Each subproblem eliminates the
/// equality constraint against the last free column and solves the reduced
/// least squares by column-pivoted QR, so affinely dependent components are
/// handled.
inline SimplexLsResult simplex_least_squares(const Eigen::MatrixXd& P, const Eigen::VectorXd& y,
                                             double kkt_tol = 1e-8, int max_iter = -1) {
    const Eigen::Index K = P.cols();
    if (K < 1) throw ValidationError("simplex least squares needs at least one component");
    if (P.rows() != y.size()) throw ValidationError("component length does not match observation length");
    if (!y.allFinite()) throw ValidationError("observation has non-finite values");
    if (max_iter < 0) max_iter = static_cast<int>(20 * K + 100);

    // Scale so the tolerance is relative to the problem's magnitude.
    const double scale = std::max({P.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff(), 1e-300});
    const double tol = kkt_tol * std::max(1.0, scale * scale);

    // Start at the best vertex.
    Eigen::Index start = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < K; ++k) {
        const double r = (P.col(k) - y).squaredNorm();
        if (r < best) {
            best = r;
            start = k;
        }
    }
    Eigen::VectorXd g = Eigen::VectorXd::Zero(K);
    g(start) = 1.0;
    std::vector<bool> free(static_cast<std::size_t>(K), false);
    free[static_cast<std::size_t>(start)] = true;

    auto solve_free = [&]() {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index k = 0; k < K; ++k)
            if (free[static_cast<std::size_t>(k)]) idx.push_back(k);
        const Eigen::Index last = idx.back();
        Eigen::VectorXd target = Eigen::VectorXd::Zero(K);
        if (idx.size() == 1) {
            target(last) = 1.0;
            return target;
        }
        Eigen::MatrixXd B(P.rows(), static_cast<Eigen::Index>(idx.size()) - 1);
        for (std::size_t c = 0; c + 1 < idx.size(); ++c) B.col(static_cast<Eigen::Index>(c)) = P.col(idx[c]) - P.col(last);
        const Eigen::VectorXd z = B.colPivHouseholderQr().solve(y - P.col(last));
        double rest = 1.0;
        for (std::size_t c = 0; c + 1 < idx.size(); ++c) {
            target(idx[c]) = z(static_cast<Eigen::Index>(c));
            rest -= z(static_cast<Eigen::Index>(c));
        }
        target(last) = rest;
        return target;
    };

    for (int it = 1; it <= max_iter; ++it) {
        const Eigen::VectorXd target = solve_free();
        bool feasible = true;
        for (Eigen::Index k = 0; k < K; ++k)
            if (free[static_cast<std::size_t>(k)] && target(k) <= 0.0) feasible = false;

        if (feasible) {
            g = target;
            const Eigen::VectorXd h = P.transpose() * (P * g - y);
            double common = std::numeric_limits<double>::infinity();
            for (Eigen::Index k = 0; k < K; ++k)
                if (free[static_cast<std::size_t>(k)]) common = std::min(common, h(k));
            // Release the bound index with the most negative reduced gradient.
            Eigen::Index enter = -1;
            double most = -tol;
            for (Eigen::Index k = 0; k < K; ++k)
                if (!free[static_cast<std::size_t>(k)] && h(k) - common < most) {
                    most = h(k) - common;
                    enter = k;
                }
            if (enter < 0) {
                SimplexLsResult out;
                out.weights = g;
                out.rss = (y - P * g).squaredNorm();
                out.kkt_residual = simplex_kkt_residual(P, y, g);
                out.iterations = it;
                return out;
            }
            free[static_cast<std::size_t>(enter)] = true;
            continue;
        }

        // Step toward the subproblem optimum until a free weight hits zero.
        double step = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index k = 0; k < K; ++k) {
            if (!free[static_cast<std::size_t>(k)] || target(k) > 0.0) continue;
            const double denom = g(k) - target(k);
            const double s = denom > 0.0 ? g(k) / denom : 0.0;
            if (s < step) {
                step = s;
                blocking = k;
            }
        }
        g += step * (target - g);
        for (Eigen::Index k = 0; k < K; ++k)
            if (free[static_cast<std::size_t>(k)] && (k == blocking || g(k) <= 0.0)) {
                g(k) = 0.0;
                free[static_cast<std::size_t>(k)] = false;
            }
        if (std::none_of(free.begin(), free.end(), [](bool b) { return b; })) {
            // Cannot happen in exact arithmetic; restart from the best vertex.
            g.setZero();
            g(start) = 1.0;
            free[static_cast<std::size_t>(start)] = true;
        }
        g /= g.sum();
    }
    throw NumericalError("simplex least squares did not converge within " + std::to_string(max_iter) + " iterations");
}

} // namespace sca
