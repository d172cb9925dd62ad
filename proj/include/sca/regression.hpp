#pragma once

#include "sca/dataset.hpp"
#include "sca/error.hpp"
#include "sca/nystrom.hpp"
#include "sca/rng.hpp"
#include "sca/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace sca {

inline constexpr std::uint64_t kDefaultFoldSeed = 20100101;
inline constexpr int kDefaultFolds = 10;

/// Fold label per row. Rows are shuffled by a seeded Fisher-Yates pass, then
/// dealt round-robin, so fold sizes differ by at most one.
inline std::vector<int> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
    if (folds < 2 || folds > n)
        throw ValidationError("folds must be in [2, " + std::to_string(n) + "], got " + std::to_string(folds));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const CounterRng rng(seed);
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1), static_cast<std::uint64_t>(i)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (Eigen::Index pos = 0; pos < n; ++pos)
        fold[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = static_cast<int>(pos % folds);
    return fold;
}

namespace detail {

/// Relative pivot size below which a nested design is declared rank deficient.
inline constexpr double kRankTolerance = 1e-10;

/// Least squares of y on [1, B_1..B_p] for every p = 0..max_p from one
/// Householder QR of the column-equilibrated design [1, B]. Returns intercept
/// and coefficients per p in the original basis scaling.
struct NestedFits {
    std::vector<double> intercept;
    std::vector<Eigen::VectorXd> coefficients;
};

inline NestedFits nested_least_squares(const Eigen::MatrixXd& basis, const Eigen::VectorXd& y, Eigen::Index max_p) {
    const Eigen::Index m = basis.rows();
    Eigen::MatrixXd design(m, max_p + 1);
    Eigen::VectorXd col_scale(max_p + 1);
    design.col(0).setOnes();
    for (Eigen::Index j = 0; j < max_p; ++j) design.col(j + 1) = basis.col(j);
    for (Eigen::Index j = 0; j <= max_p; ++j) {
        const double norm = design.col(j).norm();
        if (!(norm > 0.0)) throw NumericalError("design column " + std::to_string(j) + " is identically zero (rank deficient)");
        col_scale(j) = norm;
        design.col(j) /= norm;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
    const Eigen::Index k = std::min(m, max_p + 1);
    const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(k, max_p + 1).triangularView<Eigen::Upper>();
    Eigen::VectorXd qty = qr.householderQ().transpose() * y;

    NestedFits fits;
    for (Eigen::Index p = 0; p <= max_p; ++p) {
        const Eigen::Index cols = p + 1;
        if (cols > m)
            throw NumericalError("rank deficient design at p=" + std::to_string(p) + ": " + std::to_string(m) +
                                 " rows for " + std::to_string(cols) + " columns");
        if (std::abs(R(p, p)) < kRankTolerance)
            throw NumericalError("rank deficient design at p=" + std::to_string(p) +
                                 " (duplicate points or repeated basis functions)");
        Eigen::VectorXd beta = R.topLeftCorner(cols, cols).triangularView<Eigen::Upper>().solve(qty.head(cols));
        beta = beta.cwiseQuotient(col_scale.head(cols));
        fits.intercept.push_back(beta(0));
        fits.coefficients.push_back(beta.tail(p));
    }
    return fits;
}

} // namespace detail

/// Result of regressing a response on a generic basis with cross-validated
/// truncation. Risk entry k belongs to p = k + 1.
struct BasisFit {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;
    Eigen::Index p = 0;
    std::vector<double> cv_risk;
    /// Cross-validated risk of the intercept-only model.
    double baseline_risk = 0.0;
};

/// Ordinary least squares of y on [1, basis columns 0..p-1]; no CV.
inline BasisFit fit_fixed(const Eigen::MatrixXd& basis, const Eigen::VectorXd& y, Eigen::Index p) {
    if (basis.rows() != y.size()) throw ValidationError("basis rows do not match response length");
    if (p < 0 || p > basis.cols()) throw ValidationError("p out of range for basis");
    auto fits = detail::nested_least_squares(basis, y, p);
    BasisFit out;
    out.p = p;
    out.intercept = fits.intercept.back();
    out.coefficients = fits.coefficients.back();
    return out;
}

inline Eigen::VectorXd evaluate(const BasisFit& fit, const Eigen::MatrixXd& basis) {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(basis.rows(), fit.intercept);
    if (fit.p > 0) out += basis.leftCols(fit.p) * fit.coefficients;
    return out;
}

/// K-fold estimate of squared-error prediction risk for p = 0..max_p; the
/// basis is fixed across folds and only coefficients are refit.
inline std::vector<double> cv_risk_curve(const Eigen::MatrixXd& basis, const Eigen::VectorXd& y, Eigen::Index max_p,
                                         const std::vector<int>& folds) {
    const Eigen::Index n = basis.rows();
    const int n_folds = *std::max_element(folds.begin(), folds.end()) + 1;
    std::vector<double> sse(static_cast<std::size_t>(max_p + 1), 0.0);
    for (int f = 0; f < n_folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < n; ++i) (folds[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        const Eigen::MatrixXd b_train = basis(train, Eigen::seqN(0, max_p));
        const Eigen::VectorXd y_train = y(train);
        const auto fits = detail::nested_least_squares(b_train, y_train, max_p);
        const Eigen::MatrixXd b_test = basis(test, Eigen::seqN(0, max_p));
        for (Eigen::Index p = 0; p <= max_p; ++p) {
            Eigen::VectorXd pred = Eigen::VectorXd::Constant(b_test.rows(), fits.intercept[static_cast<std::size_t>(p)]);
            if (p > 0) pred += b_test.leftCols(p) * fits.coefficients[static_cast<std::size_t>(p)];
            sse[static_cast<std::size_t>(p)] += (pred - y(test)).squaredNorm();
        }
    }
    for (auto& s : sse) s /= static_cast<double>(n);
    return sse;
}

/// Candidate grid p = 1..max_p; the selected p minimizes CV risk, ties going
/// to the smallest p. The final model is refit on all rows.
inline BasisFit fit_cross_validated(const Eigen::MatrixXd& basis, const Eigen::VectorXd& y, Eigen::Index max_p,
                                    int folds, std::uint64_t seed) {
    if (basis.rows() != y.size()) throw ValidationError("basis rows do not match response length");
    if (max_p < 1 || max_p > basis.cols())
        throw ValidationError("max p must be in [1, " + std::to_string(basis.cols()) + "]");
    const auto assignment = fold_assignment(basis.rows(), folds, seed);
    const auto risk = cv_risk_curve(basis, y, max_p, assignment);
    for (double r : risk)
        if (!std::isfinite(r)) throw NumericalError("non-finite cross-validated risk");
    Eigen::Index best = 1;
    for (Eigen::Index p = 2; p <= max_p; ++p)
        if (risk[static_cast<std::size_t>(p)] < risk[static_cast<std::size_t>(best)]) best = p;
    BasisFit out = fit_fixed(basis, y, best);
    out.cv_risk.assign(risk.begin() + 1, risk.end());
    out.baseline_risk = risk[0];
    return out;
}

// ---------------------------------------------------------------------------
// Eigenbasis regression

/// f_hat(x) = intercept + sum_{j<=p} beta_j lambda_j^t psi_j(x), with p chosen
/// by cross-validation. Coefficients refer to the t-scaled diffusion
/// coordinates, so prediction goes through the same feature map.
struct EigenbasisRegression {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;
    Eigen::Index p = 0;
    int t = 1;
    Eigen::Index r = 0;
    std::vector<double> cv_risk_curve;
    double baseline_risk = 0.0;
    int folds = kDefaultFolds;
    std::uint64_t seed = kDefaultFoldSeed;
    ExtensionModel extension;
};

struct RegressionOptions {
    int folds = kDefaultFolds;
    std::uint64_t seed = kDefaultFoldSeed;
};

inline EigenbasisRegression fit(const DataSet& data, const DiffusionEmbedding& emb, const ExtensionModel& ext,
                                const RegressionOptions& opts = {}) {
    if (!data.response) throw ValidationError("regression needs a response column");
    if (emb.coords.rows() != data.size() || ext.training_points.rows() != data.size())
        throw ValidationError("embedding, extension model and data disagree on n");
    if (emb.r > ext.decomposition.rank()) throw ValidationError("embedding rank exceeds decomposition rank");
    const BasisFit bf = fit_cross_validated(emb.coords, *data.response, emb.r, opts.folds, opts.seed);
    EigenbasisRegression model{bf.intercept, bf.coefficients, bf.p, emb.t, emb.r, bf.cv_risk, bf.baseline_risk,
                               opts.folds, opts.seed, ext};
    return model;
}

inline Eigen::VectorXd predict(const EigenbasisRegression& model, const Eigen::MatrixXd& X_new) {
    if (X_new.rows() == 0) return Eigen::VectorXd(0);
    const Eigen::MatrixXd coords = extend_embedding(model.extension, X_new, model.t, model.p);
    return (coords * model.coefficients).array() + model.intercept;
}

/// In-sample fitted values from the stored embedding coordinates.
inline Eigen::VectorXd fitted_values(const EigenbasisRegression& model, const DiffusionEmbedding& emb) {
    return (emb.coords.leftCols(model.p) * model.coefficients).array() + model.intercept;
}

inline std::vector<std::pair<Eigen::Index, double>> risk_curve(const EigenbasisRegression& model) {
    std::vector<std::pair<Eigen::Index, double>> out;
    for (std::size_t k = 0; k < model.cv_risk_curve.size(); ++k)
        out.emplace_back(static_cast<Eigen::Index>(k + 1), model.cv_risk_curve[k]);
    return out;
}

/// Principal-component scores of the centered points, ordered by variance.
/// Used as the linear comparison basis for eigenbasis regression.
inline Eigen::MatrixXd principal_component_basis(const Eigen::MatrixXd& points) {
    const Eigen::MatrixXd centered = points.rowwise() - points.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd scores = centered * svd.matrixV();
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
        Eigen::Index lead = 0;
        for (Eigen::Index i = 1; i < scores.rows(); ++i)
            if (std::abs(scores(i, j)) > std::abs(scores(lead, j))) lead = i;
        if (scores(lead, j) < 0.0) scores.col(j) = -scores.col(j);
    }
    return scores;
}

} // namespace sca
