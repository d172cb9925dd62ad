// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails.
#include "cli_scenarios.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace sca;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------------------
// Seeded random datasets: every (n, d, t) combination, 20 datasets in total.

struct Case {
    Eigen::Index n;
    Eigen::Index d;
    int t;
    std::uint64_t seed;
};

std::vector<Case> dataset_family() {
    std::vector<Case> combos;
    for (Eigen::Index n : {10, 30, 50})
        for (Eigen::Index d : {2, 5})
            for (int t : {1, 2, 5}) combos.push_back({n, d, t, 0});
    std::vector<Case> cases;
    for (std::uint64_t s = 0; s < 20; ++s) {
        Case c = combos[s % combos.size()];
        c.seed = 1000 + s;
        cases.push_back(c);
    }
    return cases;
}

struct Fitted {
    Case c;
    DataSet data;
    TransitionMatrix T;
    SpectralDecomposition S;
};

Fitted fit_case(const Case& c) {
    Fitted f{c, make_dataset(test::gaussian_points(c.n, c.d, c.seed)), {}, {}};
    f.T = build_transition(f.data, Dissimilarity::squared_euclidean());
    f.S = decompose(f.T);
    return f;
}

std::string describe(const Case& c) {
    return "n=" + std::to_string(c.n) + " d=" + std::to_string(c.d) + " t=" + std::to_string(c.t) +
           " seed=" + std::to_string(c.seed);
}

Outcome diffusion_identity() {
    const auto start = Clock::now();
    double worst = 0.0;
    std::string where;
    for (const Case& c : dataset_family()) {
        const Fitted f = fit_case(c);
        const DiffusionEmbedding e = embed(f.S, c.t, f.S.rank());
        Eigen::MatrixXd At = f.T.A;
        for (int k = 1; k < c.t; ++k) At = (At * f.T.A).eval();
        const Eigen::VectorXd& phi = f.S.phi0.phi0;
        for (Eigen::Index i = 0; i < c.n; ++i)
            for (Eigen::Index j = i + 1; j < c.n; ++j) {
                double s = 0.0;
                for (Eigen::Index z = 0; z < c.n; ++z) s += (At(i, z) - At(j, z)) * (At(i, z) - At(j, z)) / phi(z);
                const double brute = std::sqrt(s);
                const double rel = std::abs((e.coords.row(i) - e.coords.row(j)).norm() - brute) / brute;
                if (rel > worst) {
                    worst = rel;
                    where = describe(c);
                }
            }
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-8 && secs <= 10.0,
            "max relative error " + fmt(worst) + " (" + where + "), " + fmt(secs) + " s; limits 1e-8, 10 s"};
}

Outcome markov_structure() {
    double row = 0.0, trivial = 0.0, lam = 0.0, left = 0.0, closed = 0.0, generic = 0.0;
    for (const Case& c : dataset_family()) {
        const Fitted f = fit_case(c);
        row = std::max(row, (f.T.A.rowwise().sum().array() - 1.0).abs().maxCoeff());
        trivial = std::max(trivial, (f.T.A * f.S.trivial_eigenvector - f.S.trivial_eigenvector).lpNorm<Eigen::Infinity>());
        trivial = std::max(trivial, std::abs(f.S.trivial_eigenvalue - 1.0));
        // Independent check that 1 is the top of the spectrum of A itself.
        Eigen::EigenSolver<Eigen::MatrixXd> es(f.T.A, false);
        generic = std::max(generic, std::abs(es.eigenvalues().real().maxCoeff() - 1.0));
        lam = std::max(lam, f.S.eigenvalues.cwiseAbs().maxCoeff() - 1.0);
        const Eigen::VectorXd& phi = f.S.phi0.phi0;
        left = std::max(left, (f.T.A.transpose() * phi - phi).lpNorm<Eigen::Infinity>());
        Eigen::VectorXd rows(c.n);
        const Eigen::MatrixXd D = pairwise_dissimilarity(f.data, Dissimilarity::squared_euclidean());
        for (Eigen::Index i = 0; i < c.n; ++i) {
            rows(i) = 0.0;
            for (Eigen::Index j = 0; j < c.n; ++j) rows(i) += std::exp(-D(i, j) / f.T.epsilon);
        }
        rows /= rows.sum();
        closed = std::max(closed, ((phi - rows).array() / rows.array()).abs().maxCoeff());
    }
    const bool pass = row <= 1e-12 && trivial <= 1e-12 && generic <= 1e-9 && lam <= 1e-12 && left <= 1e-10 &&
                      closed <= 1e-10;
    return {pass, "row sums " + fmt(row) + ", trivial pair " + fmt(trivial) + ", generic top eigenvalue " +
                      fmt(generic) + ", max|lambda|-1 " + fmt(lam) + ", phi0 residual " + fmt(left) +
                      ", phi0 vs row sums " + fmt(closed)};
}

Outcome nystrom_consistency() {
    double worst = 0.0, worst_lambda = 0.0, embed_worst = 0.0;
    std::string where;
    int failing_cases = 0;
    for (const Case& c : dataset_family()) {
        const Fitted f = fit_case(c);
        const ExtensionModel M = make_extension_model(f.data, f.T, f.S);
        double case_worst = 0.0;
        for (Eigen::Index j = 0; j < f.S.rank(); ++j) {
            if (std::abs(f.S.eigenvalues(j)) <= kExtensionEigenvalueFloor) continue;
            for (Eigen::Index i = 0; i < c.n; ++i) {
                const double err = std::abs(extend_eigenfunction(M, f.data.points.row(i), j) - f.S.right_eigenvectors(i, j));
                case_worst = std::max(case_worst, err);
                if (err > worst) {
                    worst = err;
                    worst_lambda = f.S.eigenvalues(j);
                    where = describe(c) + " j=" + std::to_string(j + 1);
                }
            }
        }
        if (case_worst > 1e-9) ++failing_cases;
        Eigen::Index r = 0;
        while (r < f.S.rank() && std::abs(f.S.eigenvalues(r)) > kExtensionEigenvalueFloor) ++r;
        const Eigen::MatrixXd ext = extend_embedding(M, f.data.points, c.t, r);
        embed_worst = std::max(embed_worst, (ext - embed(f.S, c.t, r).coords).lpNorm<Eigen::Infinity>());
    }
    return {worst <= 1e-9, "max eigenvector error " + fmt(worst) + " at " + where + " (lambda=" + fmt(worst_lambda) +
                               "), " + std::to_string(failing_cases) + "/20 datasets above 1e-9; embedding-level error " +
                               fmt(embed_worst) + "; limit 1e-9"};
}

Outcome regression_exactness() {
    double psi_mse = 0.0, full_ratio = 0.0;
    for (const Case& c : dataset_family()) {
        Fitted f = fit_case(c);
        const DiffusionEmbedding e = embed(f.S, c.t, default_dimension(c.n));
        const ExtensionModel M = make_extension_model(f.data, f.T, f.S);
        f.data.response = f.S.right_eigenvectors.col(0);
        RegressionOptions opts;
        opts.folds = 5;
        opts.seed = c.seed;
        // Widest candidate design that the smallest training split can carry.
        const Eigen::Index smallest_train = c.n - (c.n + opts.folds - 1) / opts.folds;
        const DiffusionEmbedding cv_e = embed(f.S, c.t, std::min(e.r, smallest_train - 1));
        const auto model = fit(f.data, cv_e, M, opts);
        const Eigen::VectorXd res = fitted_values(model, cv_e) - *f.data.response;
        psi_mse = std::max(psi_mse, res.squaredNorm() / static_cast<double>(c.n));

        if (c.n <= 30) {
            for (std::uint64_t k = 0; k < 5; ++k) {
                const Eigen::VectorXd y = test::gaussian_vector(c.n, c.seed * 31 + k);
                const auto full = fit_fixed(e.coords, y, e.r);
                full_ratio = std::max(full_ratio, (evaluate(full, e.coords) - y).norm() / y.norm());
            }
        }
    }
    return {psi_mse <= 1e-18 && full_ratio <= 1e-8,
            "Y=psi_1 MSE " + fmt(psi_mse) + " (limit 1e-18); full-basis residual/||Y|| " + fmt(full_ratio) +
                " (limit 1e-8)"};
}

Outcome regression_beats_pca() {
    const auto start = Clock::now();
    GeneratorSpec spec;
    spec.kind = GeneratorKind::SwissRoll;
    spec.n = 600;
    spec.response_noise_sd = 0.05;
    spec.seed = 2010;
    const DataSet data = generate_dataset(spec);
    const TransitionMatrix T = build_transition(data, Dissimilarity::squared_euclidean());
    const SpectralDecomposition S = decompose(T);
    const DiffusionEmbedding e = embed(S, 1, default_dimension(600));
    RegressionOptions opts;
    opts.folds = 10;
    const auto model = fit(data, e, make_extension_model(data, T, S), opts);
    const Eigen::MatrixXd pcs = principal_component_basis(data.points);
    const auto pca = cv_risk_curve(pcs, *data.response, pcs.cols(), fold_assignment(600, opts.folds, opts.seed));
    const Eigen::Index p_pca = std::min<Eigen::Index>(model.p, pcs.cols());
    const double diff_risk = model.cv_risk_curve[static_cast<std::size_t>(model.p - 1)];
    const double pca_risk = pca[static_cast<std::size_t>(p_pca)];
    const double secs = seconds_since(start);
    return {diff_risk < pca_risk && secs <= 60.0,
            "selected p=" + std::to_string(model.p) + ": diffusion out-of-fold MSE " + fmt(diff_risk) +
                " vs PCA (p=" + std::to_string(p_pca) + ") " + fmt(pca_risk) + ", " + fmt(secs) + " s; limit 60 s"};
}

Eigen::VectorXd grid_search(const Eigen::MatrixXd& P, const Eigen::VectorXd& y) {
    const Eigen::Index K = P.cols();
    Eigen::VectorXd best_g = Eigen::VectorXd::Zero(K), g(K);
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= 100; ++a)
        for (int b = 0; a + b <= 100; ++b) {
            if (K == 1 && a != 100) continue;
            if (K == 2 && a + b != 100) continue;
            if (K == 1) g << 1.0;
            else if (K == 2) g << a / 100.0, b / 100.0;
            else g << a / 100.0, b / 100.0, (100 - a - b) / 100.0;
            const double r = (P * g - y).squaredNorm();
            if (r < best) {
                best = r;
                best_g = g;
            }
        }
    return best_g;
}

Outcome simplex_fitting() {
    const CounterRng rng(6);
    auto components = [&](Eigen::Index d, Eigen::Index K, std::uint64_t stream) {
        const CounterRng r = rng.derive(stream);
        Eigen::MatrixXd P(d, K);
        for (Eigen::Index k = 0; k < K; ++k)
            for (Eigen::Index b = 0; b < d; ++b) P(b, k) = 0.2 + r.uniform(static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(k));
        return P;
    };
    const Eigen::MatrixXd P5 = components(40, 5, 0);
    double vertex = 0.0;
    for (Eigen::Index k = 0; k < 5; ++k)
        vertex = std::max(vertex, (simplex_least_squares(P5, P5.col(k)).weights - Eigen::VectorXd::Unit(5, k)).cwiseAbs().maxCoeff());
    Eigen::VectorXd half = Eigen::VectorXd::Zero(5);
    half(0) = half(1) = 0.5;
    const double midpoint = (simplex_least_squares(P5, P5 * half).weights - half).cwiseAbs().maxCoeff();

    double worst_l1 = 0.0;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        const Eigen::Index K = 1 + static_cast<Eigen::Index>(trial % 3);
        const Eigen::MatrixXd P = components(25, K, 1 + trial);
        const CounterRng r = rng.derive(1000 + trial);
        Eigen::VectorXd g(K);
        for (Eigen::Index k = 0; k < K; ++k) g(k) = -std::log(r.uniform(0, static_cast<std::uint64_t>(k)));
        g /= g.sum();
        Eigen::VectorXd y = P * g;
        const double sd = 0.01 * y.norm() / std::sqrt(25.0);
        for (Eigen::Index b = 0; b < 25; ++b) y(b) += sd * r.normal(1, static_cast<std::uint64_t>(b));
        worst_l1 = std::max(worst_l1, (simplex_least_squares(P, y).weights - grid_search(P, y)).lpNorm<1>());
    }
    return {vertex <= 1e-6 && midpoint <= 1e-6 && worst_l1 <= 0.02,
            "vertex error " + fmt(vertex) + ", midpoint error " + fmt(midpoint) + " (limit 1e-6); max L1 vs grid oracle " +
                fmt(worst_l1) + " over 50 trials (limit 0.02)"};
}

constexpr std::uint64_t kBenchmarkSeed = 2010;
constexpr double kBenchmarkNoise = 0.02;

struct BenchmarkRun {
    BenchmarkReport report;
    double seconds = 0.0;
};

const BenchmarkRun& benchmark_run() {
    static const BenchmarkRun run = [] {
        const auto start = Clock::now();
        GeneratorSpec spec;
        spec.kind = GeneratorKind::DegenerateComponents;
        spec.n = 120;
        spec.seed = kBenchmarkSeed;
        BenchmarkRun out;
        out.report = quantization_benchmark(generate_library(spec), 10, 100, kBenchmarkNoise, kBenchmarkSeed);
        out.seconds = seconds_since(start);
        return out;
    }();
    return run;
}

Outcome quantization_benefit() {
    const BenchmarkRun& run = benchmark_run();
    const auto& r = run.report;
    return {r.diffusion.rmse_log_age <= r.grid.rmse_log_age && run.seconds <= 120.0,
            "<log t> RMSE diffusion " + fmt(r.diffusion.rmse_log_age) + " vs grid " + fmt(r.grid.rmse_log_age) +
                " (<log Z> " + fmt(r.diffusion.rmse_log_metallicity) + " vs " + fmt(r.grid.rmse_log_metallicity) +
                "), noise " + fmt(kBenchmarkNoise) + ", " + fmt(run.seconds) + " s; limit 120 s"};
}

Outcome cli_determinism() {
    test::TempDir dir("acceptance");
    const auto problems = test::determinism_problems(dir.path());
    std::string detail = std::to_string(test::pipeline_commands(dir.path()).size()) + " commands over 8 subcommands run twice";
    for (const auto& p : problems) detail += "; " + p;
    return {problems.empty(), detail};
}

Outcome kmeans_monotone() {
    const auto& wcss = benchmark_run().report.diffusion_prototypes.wcss_history;
    bool mono = true;
    for (std::size_t i = 1; i < wcss.size(); ++i) mono = mono && wcss[i] <= wcss[i - 1];
    std::string trace;
    for (double w : wcss) trace += (trace.empty() ? "" : " -> ") + fmt(w);
    return {mono && !wcss.empty(), std::to_string(wcss.size()) + " Lloyd iterations, WCSS " + trace};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"diffusion identity", diffusion_identity},
        {"Markov structure", markov_structure},
        {"Nystrom consistency", nystrom_consistency},
        {"regression exactness", regression_exactness},
        {"regression vs PCA", regression_beats_pca},
        {"simplex mixture fitting", simplex_fitting},
        {"quantization benefit", quantization_benefit},
        {"CLI determinism", cli_determinism},
        {"K-means monotonicity", kmeans_monotone},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (k + 1) << " " << criteria[k].first << ": " << o.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failures == 0 ? 0 : 1;
}
