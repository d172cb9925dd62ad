#pragma once

#include "sca/dataset.hpp"
#include "sca/error.hpp"
#include "sca/library.hpp"
#include "sca/markov_kernel.hpp"
#include "sca/rng.hpp"
#include "sca/simplex.hpp"
#include "sca/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace sca {

/// K representative components. For diffusion K-means a prototype is the
/// observable-space mean of its cluster and carries the members' mean log
/// parameters; for the grid baseline it is a selected library component.
struct PrototypeSet {
    Eigen::MatrixXd prototypes;
    std::vector<int> member_assignments;
    Eigen::MatrixXd centroids_diffusion;
    Eigen::VectorXd proto_log_age;
    Eigen::VectorXd proto_log_metallicity;

    /// Within-cluster sum of squares after each Lloyd assignment step.
    std::vector<double> wcss_history;
    int iterations = 0;
    bool converged = false;
    /// Grid baseline only: library rows chosen as prototypes.
    std::vector<Eigen::Index> selected;

    Eigen::Index size() const { return prototypes.rows(); }
};

struct MixtureFit {
    Eigen::VectorXd gamma;
    double residual = 0.0;
    double mean_log_age = 0.0;
    double mean_log_metallicity = 0.0;
    /// residual / noise_sd^2, i.e. -2 log-likelihood up to a constant.
    double chi2 = 0.0;
    double kkt_residual = 0.0;
};

struct KMeansOptions {
    std::optional<double> epsilon;
    int max_iter = 500;
};

namespace detail {

/// Row order that sorts spectra lexicographically; ties by parameters, then index.
inline std::vector<Eigen::Index> canonical_order(const ComponentLibrary& lib) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(lib.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index k = 0; k < lib.dim(); ++k)
            if (lib.spectra(a, k) != lib.spectra(b, k)) return lib.spectra(a, k) < lib.spectra(b, k);
        if (lib.age(a) != lib.age(b)) return lib.age(a) < lib.age(b);
        if (lib.metallicity(a) != lib.metallicity(b)) return lib.metallicity(a) < lib.metallicity(b);
        return a < b;
    });
    return order;
}

struct LloydResult {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    std::vector<double> wcss;
    int iterations = 0;
    bool converged = false;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment is a
/// fixed point or max_iter is reached. Empty clusters are reseeded at the
/// point farthest from its centroid.
inline LloydResult kmeans(const Eigen::MatrixXd& X, Eigen::Index K, std::uint64_t seed, int max_iter) {
    const Eigen::Index n = X.rows();
    const CounterRng rng(seed);
    Eigen::MatrixXd C(K, X.cols());
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);
    Eigen::VectorXd d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    for (Eigen::Index k = 0; k < K; ++k) {
        Eigen::Index pick = 0;
        if (k == 0) {
            pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n), 0));
        } else {
            const double total = d2.sum();
            if (total > 0.0) {
                const double u = rng.uniform(static_cast<std::uint64_t>(k)) * total;
                double cum = 0.0;
                pick = -1;
                for (Eigen::Index i = 0; i < n; ++i) {
                    cum += d2(i);
                    if (d2(i) > 0.0 && cum > u) {
                        pick = i;
                        break;
                    }
                }
                if (pick < 0)
                    for (Eigen::Index i = n - 1; i >= 0; --i)
                        if (d2(i) > 0.0) {
                            pick = i;
                            break;
                        }
            } else {
                while (pick < n - 1 && chosen[static_cast<std::size_t>(pick)]) ++pick;
            }
        }
        chosen[static_cast<std::size_t>(pick)] = true;
        C.row(k) = X.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), (X.row(i) - C.row(k)).squaredNorm());
    }

    LloydResult out;
    out.labels.assign(static_cast<std::size_t>(n), -1);
    Eigen::VectorXd dist(n);
    for (int it = 1; it <= max_iter; ++it) {
        std::vector<int> labels(static_cast<std::size_t>(n));
        double wcss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (X.row(i) - C.row(0)).squaredNorm();
            for (Eigen::Index k = 1; k < K; ++k) {
                const double dk = (X.row(i) - C.row(k)).squaredNorm();
                if (dk < best_d) {
                    best_d = dk;
                    best = static_cast<int>(k);
                }
            }
            labels[static_cast<std::size_t>(i)] = best;
            dist(i) = best_d;
            wcss += best_d;
        }
        out.wcss.push_back(wcss);
        out.iterations = it;
        const bool fixed = labels == out.labels;
        out.labels = std::move(labels);
        if (fixed) {
            out.converged = true;
            break;
        }

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, X.cols());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(K), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int k = out.labels[static_cast<std::size_t>(i)];
            sums.row(k) += X.row(i);
            ++counts[static_cast<std::size_t>(k)];
        }
        for (Eigen::Index k = 0; k < K; ++k)
            if (counts[static_cast<std::size_t>(k)] > 0)
                C.row(k) = sums.row(k) / static_cast<double>(counts[static_cast<std::size_t>(k)]);
        for (Eigen::Index k = 0; k < K; ++k) {
            if (counts[static_cast<std::size_t>(k)] > 0) continue;
            Eigen::Index far = 0;
            for (Eigen::Index i = 1; i < n; ++i)
                if (dist(i) > dist(far)) far = i;
            C.row(k) = X.row(far);
            dist(far) = 0.0;
        }
    }
    out.centroids = C;
    return out;
}

} // namespace detail

/// Embeds the library with the diffusion map, clusters it in diffusion
/// coordinates, and averages each cluster in observable space. Rows are
/// canonically sorted first, so the result does not depend on input order.
inline PrototypeSet diffusion_kmeans(const ComponentLibrary& lib, Eigen::Index K, int t, Eigen::Index r,
                                     std::uint64_t seed, const KMeansOptions& opts = {}) {
    const Eigen::Index N = lib.size();
    if (K < 1 || K > N)
        throw ValidationError("prototype count K must be in [1, " + std::to_string(N) + "], got " + std::to_string(K));
    if (N < 2) throw ValidationError("diffusion K-means needs at least 2 components");
    if (opts.max_iter < 1) throw ValidationError("max_iter must be >= 1");

    const auto order = detail::canonical_order(lib);
    Eigen::MatrixXd sorted(N, lib.dim());
    for (Eigen::Index i = 0; i < N; ++i) sorted.row(i) = lib.spectra.row(order[static_cast<std::size_t>(i)]);
    const DataSet data = make_dataset(sorted);
    const TransitionMatrix T = build_transition(data, Dissimilarity::squared_euclidean(), opts.epsilon);
    const DiffusionEmbedding emb = embed(decompose(T), t, r);
    const auto km = detail::kmeans(emb.coords, K, seed, opts.max_iter);

    PrototypeSet out;
    out.centroids_diffusion = km.centroids;
    out.wcss_history = km.wcss;
    out.iterations = km.iterations;
    out.converged = km.converged;
    out.prototypes = Eigen::MatrixXd::Zero(K, lib.dim());
    out.proto_log_age = Eigen::VectorXd::Zero(K);
    out.proto_log_metallicity = Eigen::VectorXd::Zero(K);
    out.member_assignments.assign(static_cast<std::size_t>(N), -1);
    const Eigen::VectorXd log_t = lib.log_age(), log_z = lib.log_metallicity();
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(K), 0);
    for (Eigen::Index i = 0; i < N; ++i) {
        const Eigen::Index src = order[static_cast<std::size_t>(i)];
        const int k = km.labels[static_cast<std::size_t>(i)];
        out.member_assignments[static_cast<std::size_t>(src)] = k;
        out.prototypes.row(k) += lib.spectra.row(src);
        out.proto_log_age(k) += log_t(src);
        out.proto_log_metallicity(k) += log_z(src);
        ++counts[static_cast<std::size_t>(k)];
    }
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto c = counts[static_cast<std::size_t>(k)];
        if (c == 0)
            throw NumericalError("cluster " + std::to_string(k) + " is empty; the library has fewer than K=" +
                                 std::to_string(K) + " distinct points in diffusion space");
        out.prototypes.row(k) /= static_cast<double>(c);
        out.proto_log_age(k) /= static_cast<double>(c);
        out.proto_log_metallicity(k) /= static_cast<double>(c);
    }
    return out;
}

/// Squared distances closer than this count as ties, resolved toward the
/// lower component index; uniform spacings otherwise tie up to rounding.
inline constexpr double kGridTieTolerance = 1e-12;

/// Baseline: the K components nearest to a regular grid over the
/// (log age, log metallicity) ranges, each axis rescaled to [0, 1]. The grid
/// is g_age x g_metal = K nodes with the factor pair closest to square
/// (a line when one parameter is constant). Nodes claim distinct components
/// greedily in row-major order.
inline PrototypeSet grid_prototypes(const ComponentLibrary& lib, Eigen::Index K) {
    const Eigen::Index N = lib.size();
    if (K < 1 || K > N)
        throw ValidationError("prototype count K must be in [1, " + std::to_string(N) + "], got " + std::to_string(K));
    const Eigen::VectorXd log_t = lib.log_age(), log_z = lib.log_metallicity();
    auto normalize = [](const Eigen::VectorXd& v) {
        const double lo = v.minCoeff(), range = v.maxCoeff() - lo;
        return range > 0.0 ? Eigen::VectorXd((v.array() - lo) / range) : Eigen::VectorXd::Constant(v.size(), 0.5);
    };
    const Eigen::VectorXd nt = normalize(log_t), nz = normalize(log_z);
    const bool t_varies = log_t.maxCoeff() > log_t.minCoeff();
    const bool z_varies = log_z.maxCoeff() > log_z.minCoeff();

    Eigen::Index g_t = K, g_z = 1;
    if (t_varies && z_varies) {
        for (Eigen::Index a = 1; a * a <= K; ++a)
            if (K % a == 0) g_z = a;
        g_t = K / g_z;
    } else if (z_varies) {
        g_t = 1;
        g_z = K;
    }
    auto node = [](Eigen::Index k, Eigen::Index g) {
        return g == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(g - 1);
    };

    PrototypeSet out;
    std::vector<bool> taken(static_cast<std::size_t>(N), false);
    for (Eigen::Index it = 0; it < g_t; ++it)
        for (Eigen::Index iz = 0; iz < g_z; ++iz) {
            const double at = node(it, g_t), az = node(iz, g_z);
            Eigen::Index best = -1;
            double best_d = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < N; ++i) {
                if (taken[static_cast<std::size_t>(i)]) continue;
                const double d = (nt(i) - at) * (nt(i) - at) + (nz(i) - az) * (nz(i) - az);
                if (d < best_d - kGridTieTolerance) {
                    best_d = d;
                    best = i;
                }
            }
            taken[static_cast<std::size_t>(best)] = true;
            out.selected.push_back(best);
        }

    out.prototypes.resize(K, lib.dim());
    out.proto_log_age.resize(K);
    out.proto_log_metallicity.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const Eigen::Index s = out.selected[static_cast<std::size_t>(k)];
        out.prototypes.row(k) = lib.spectra.row(s);
        out.proto_log_age(k) = log_t(s);
        out.proto_log_metallicity(k) = log_z(s);
    }
    out.member_assignments.resize(static_cast<std::size_t>(N));
    for (Eigen::Index i = 0; i < N; ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < K; ++k) {
            const Eigen::Index s = out.selected[static_cast<std::size_t>(k)];
            const double d = (nt(i) - nt(s)) * (nt(i) - nt(s)) + (nz(i) - nz(s)) * (nz(i) - nz(s));
            if (d < best_d - kGridTieTolerance) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        out.member_assignments[static_cast<std::size_t>(i)] = best;
    }
    out.converged = true;
    return out;
}

/// Gaussian maximum likelihood for y = sum_k gamma_k proto_k + noise with
/// gamma on the simplex, i.e. simplex-constrained least squares.
inline MixtureFit fit_mixture(const PrototypeSet& proto, const Eigen::VectorXd& y, double noise_sd) {
    if (proto.size() < 1) throw ValidationError("prototype set is empty");
    if (y.size() != proto.prototypes.cols())
        throw ValidationError("observation has " + std::to_string(y.size()) + " values, prototypes have " +
                              std::to_string(proto.prototypes.cols()));
    if (!y.allFinite()) throw ValidationError("observation has non-finite values");
    if (!(noise_sd > 0.0) || !std::isfinite(noise_sd)) throw ValidationError("noise_sd must be positive");
    const SimplexLsResult ls = simplex_least_squares(proto.prototypes.transpose(), y);
    MixtureFit fit;
    fit.gamma = ls.weights;
    fit.residual = ls.rss;
    fit.kkt_residual = ls.kkt_residual;
    fit.chi2 = ls.rss / (noise_sd * noise_sd);
    fit.mean_log_age = fit.gamma.dot(proto.proto_log_age);
    fit.mean_log_metallicity = fit.gamma.dot(proto.proto_log_metallicity);
    return fit;
}

// ---------------------------------------------------------------------------
// Quantization benchmark

struct BenchmarkOptions {
    int t = 1;
    /// Diffusion dimension for K-means; defaults to min(50, N-1).
    std::optional<Eigen::Index> r;
    std::optional<double> epsilon;
    /// Library components mixed into each simulated observation.
    Eigen::Index components_per_trial = 3;
};

struct TrialRecord {
    double true_log_age = 0.0;
    double true_log_metallicity = 0.0;
    double est_log_age = 0.0;
    double est_log_metallicity = 0.0;
    double residual = 0.0;
};

struct MethodReport {
    std::string method;
    double rmse_log_age = 0.0;
    double rmse_log_metallicity = 0.0;
    std::vector<TrialRecord> trials;
};

struct BenchmarkReport {
    MethodReport diffusion;
    MethodReport grid;
    PrototypeSet diffusion_prototypes;
    PrototypeSet grid_prototypes;
};

/// Simulates observations as random simplex mixtures of library components
/// plus iid Gaussian noise, then estimates mean log age / log metallicity
/// from both prototype sets. Trial i uses a stream derived from (seed, i).
inline BenchmarkReport quantization_benchmark(const ComponentLibrary& lib, Eigen::Index K, int n_trials,
                                              double noise_sd, std::uint64_t seed, const BenchmarkOptions& opts = {}) {
    if (n_trials < 1) throw ValidationError("n_trials must be >= 1");
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ValidationError("noise_sd must be >= 0");
    const Eigen::Index N = lib.size();
    const Eigen::Index m = std::min(opts.components_per_trial, N);
    if (m < 1) throw ValidationError("components_per_trial must be >= 1");

    BenchmarkReport report;
    KMeansOptions km;
    km.epsilon = opts.epsilon;
    report.diffusion_prototypes = diffusion_kmeans(lib, K, opts.t, opts.r.value_or(default_dimension(N)), seed, km);
    report.grid_prototypes = grid_prototypes(lib, K);
    report.diffusion.method = "diffusion-kmeans";
    report.grid.method = "parameter-grid";

    const Eigen::VectorXd log_t = lib.log_age(), log_z = lib.log_metallicity();
    // The fit needs a positive noise scale; it only rescales chi2.
    const double fit_sd = noise_sd > 0.0 ? noise_sd : 1.0;
    const CounterRng master(seed);
    for (int trial = 0; trial < n_trials; ++trial) {
        const CounterRng rng = master.derive(static_cast<std::uint64_t>(trial));
        std::vector<Eigen::Index> pool(static_cast<std::size_t>(N));
        std::iota(pool.begin(), pool.end(), Eigen::Index{0});
        for (Eigen::Index j = 0; j < m; ++j) {
            const auto pick = j + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(N - j), 0, static_cast<std::uint64_t>(j)));
            std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
        }
        Eigen::VectorXd w(m);
        for (Eigen::Index j = 0; j < m; ++j) w(j) = -std::log(rng.uniform(1, static_cast<std::uint64_t>(j)));
        w /= w.sum();

        Eigen::VectorXd y = Eigen::VectorXd::Zero(lib.dim());
        TrialRecord base;
        for (Eigen::Index j = 0; j < m; ++j) {
            const Eigen::Index c = pool[static_cast<std::size_t>(j)];
            y += w(j) * lib.spectra.row(c).transpose();
            base.true_log_age += w(j) * log_t(c);
            base.true_log_metallicity += w(j) * log_z(c);
        }
        for (Eigen::Index b = 0; b < lib.dim(); ++b) y(b) += noise_sd * rng.normal(2, static_cast<std::uint64_t>(b));

        auto record = [&](const PrototypeSet& ps, MethodReport& rep) {
            const MixtureFit f = fit_mixture(ps, y, fit_sd);
            TrialRecord rec = base;
            rec.est_log_age = f.mean_log_age;
            rec.est_log_metallicity = f.mean_log_metallicity;
            rec.residual = f.residual;
            rep.trials.push_back(rec);
        };
        record(report.diffusion_prototypes, report.diffusion);
        record(report.grid_prototypes, report.grid);
    }
    for (MethodReport* rep : {&report.diffusion, &report.grid}) {
        double st = 0.0, sz = 0.0;
        for (const auto& rec : rep->trials) {
            st += (rec.est_log_age - rec.true_log_age) * (rec.est_log_age - rec.true_log_age);
            sz += (rec.est_log_metallicity - rec.true_log_metallicity) * (rec.est_log_metallicity - rec.true_log_metallicity);
        }
        rep->rmse_log_age = std::sqrt(st / n_trials);
        rep->rmse_log_metallicity = std::sqrt(sz / n_trials);
    }
    return report;
}

} // namespace sca
