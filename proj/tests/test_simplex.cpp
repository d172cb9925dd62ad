#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sca;

namespace {

/// Columns are d-dimensional positive random vectors.
Eigen::MatrixXd random_components(Eigen::Index d, Eigen::Index K, std::uint64_t seed) {
    const CounterRng rng(seed);
    Eigen::MatrixXd P(d, K);
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index b = 0; b < d; ++b)
            P(b, k) = 0.2 + rng.uniform(static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(k));
    return P;
}

Eigen::VectorXd random_simplex_point(Eigen::Index K, const CounterRng& rng, std::uint64_t index) {
    Eigen::VectorXd g(K);
    for (Eigen::Index k = 0; k < K; ++k) g(k) = -std::log(rng.uniform(index, static_cast<std::uint64_t>(k)));
    return g / g.sum();
}

/// Exhaustive search over {g : g_k in 0.01 Z, sum g = 1} for K <= 3.
Eigen::VectorXd grid_search(const Eigen::MatrixXd& P, const Eigen::VectorXd& y) {
    const Eigen::Index K = P.cols();
    const int steps = 100;
    Eigen::VectorXd best_g = Eigen::VectorXd::Zero(K), g(K);
    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](const Eigen::VectorXd& cand) {
        const double r = (P * cand - y).squaredNorm();
        if (r < best) {
            best = r;
            best_g = cand;
        }
    };
    if (K == 1) {
        g << 1.0;
        consider(g);
    } else if (K == 2) {
        for (int a = 0; a <= steps; ++a) {
            g << a / 100.0, (steps - a) / 100.0;
            consider(g);
        }
    } else {
        for (int a = 0; a <= steps; ++a)
            for (int b = 0; a + b <= steps; ++b) {
                g << a / 100.0, b / 100.0, (steps - a - b) / 100.0;
                consider(g);
            }
    }
    return best_g;
}

} // namespace

TEST(Simplex, VertexIsExact) {
    const Eigen::MatrixXd P = random_components(30, 5, 1);
    for (Eigen::Index k = 0; k < 5; ++k) {
        const auto res = simplex_least_squares(P, P.col(k));
        EXPECT_LE((res.weights - Eigen::VectorXd::Unit(5, k)).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_LE(res.rss, 1e-12);
    }
}

TEST(Simplex, MidpointIsExact) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(6, 4);
    for (Eigen::Index k = 0; k < 4; ++k) P(k, k) = 1.0;
    P.row(5).setConstant(0.5);
    const Eigen::VectorXd y = 0.5 * P.col(0) + 0.5 * P.col(1);
    const auto res = simplex_least_squares(P, y);
    Eigen::VectorXd expected(4);
    expected << 0.5, 0.5, 0.0, 0.0;
    EXPECT_LE((res.weights - expected).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LE(res.rss, 1e-12);
}

TEST(Simplex, OutsideTargetProjectsToFace) {
    // Target beyond the segment [e0, e1] but near e0: optimum is the vertex.
    Eigen::MatrixXd P(2, 2);
    P << 1, 0, 0, 1;
    Eigen::VectorXd y(2);
    y << 2.0, -1.0;
    const auto res = simplex_least_squares(P, y);
    EXPECT_NEAR(res.weights(0), 1.0, 1e-12);
    EXPECT_NEAR(res.weights(1), 0.0, 1e-12);
}

TEST(Simplex, MatchesGridSearchOracle) {
    const CounterRng rng(2024);
    for (std::uint64_t trial = 0; trial < 30; ++trial) {
        const Eigen::Index K = 1 + static_cast<Eigen::Index>(trial % 3);
        const Eigen::MatrixXd P = random_components(25, K, 100 + trial);
        const Eigen::VectorXd g_true = random_simplex_point(K, rng, trial);
        Eigen::VectorXd y = P * g_true;
        const double sd = 0.01 * y.norm() / std::sqrt(25.0);
        for (Eigen::Index b = 0; b < 25; ++b) y(b) += sd * rng.normal(1000 + trial, static_cast<std::uint64_t>(b));
        const auto res = simplex_least_squares(P, y);
        EXPECT_LE((res.weights - grid_search(P, y)).lpNorm<1>(), 0.02) << "trial " << trial;
    }
}

TEST(Simplex, RecoversRandomMixturesOfFive) {
    const CounterRng rng(77);
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd P = random_components(60, 5, 500 + trial);
        const Eigen::VectorXd g_true = random_simplex_point(5, rng, trial);
        Eigen::VectorXd y = P * g_true;
        const double sd = 0.01 * y.norm() / std::sqrt(60.0);
        for (Eigen::Index b = 0; b < 60; ++b) y(b) += sd * rng.normal(1000 + trial, static_cast<std::uint64_t>(b));
        const auto res = simplex_least_squares(P, y);
        EXPECT_LE((res.weights - g_true).lpNorm<1>(), 0.05) << "trial " << trial;
    }
}

TEST(Simplex, SatisfiesKkt) {
    const CounterRng rng(5);
    for (std::uint64_t trial = 0; trial < 40; ++trial) {
        const Eigen::Index K = 2 + static_cast<Eigen::Index>(trial % 9);
        const Eigen::MatrixXd P = random_components(20, K, trial);
        Eigen::VectorXd y(20);
        for (Eigen::Index b = 0; b < 20; ++b) y(b) = 1.5 * rng.uniform(trial, static_cast<std::uint64_t>(b));
        const auto res = simplex_least_squares(P, y);
        EXPECT_GE(res.weights.minCoeff(), 0.0);
        EXPECT_NEAR(res.weights.sum(), 1.0, 1e-12);

        const Eigen::VectorXd h = P.transpose() * (P * res.weights - y);
        double common = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < K; ++k)
            if (res.weights(k) > 0.0) common = std::min(common, h(k));
        for (Eigen::Index k = 0; k < K; ++k) {
            if (res.weights(k) > 0.0) EXPECT_NEAR(h(k), common, 1e-6);
            else EXPECT_GE(h(k), common - 1e-6);
        }
    }
}

TEST(Simplex, HandlesDuplicateComponents) {
    Eigen::MatrixXd P = random_components(10, 3, 8);
    P.col(2) = P.col(0);
    const Eigen::VectorXd y = 0.3 * P.col(0) + 0.7 * P.col(1);
    const auto res = simplex_least_squares(P, y);
    EXPECT_NEAR(res.weights(0) + res.weights(2), 0.3, 1e-8);
    EXPECT_NEAR(res.weights(1), 0.7, 1e-8);
}

TEST(Simplex, RejectsBadInput) {
    EXPECT_THROW(simplex_least_squares(Eigen::MatrixXd(3, 0), Eigen::VectorXd::Zero(3)), ValidationError);
    EXPECT_THROW(simplex_least_squares(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(4)), ValidationError);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
    y(1) = std::nan("");
    EXPECT_THROW(simplex_least_squares(Eigen::MatrixXd::Ones(3, 2), y), ValidationError);
}
