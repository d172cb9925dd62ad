#pragma once

#include "sca/dataset.hpp"
#include "sca/error.hpp"
#include "sca/library.hpp"
#include "sca/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <variant>

namespace sca {

enum class GeneratorKind { SwissRoll, NoisyCircle, LineChain, ComponentFamilies, DegenerateComponents };

inline std::string to_string(GeneratorKind kind) {
    switch (kind) {
    case GeneratorKind::SwissRoll: return "swiss-roll";
    case GeneratorKind::NoisyCircle: return "noisy-circle";
    case GeneratorKind::LineChain: return "line-chain";
    case GeneratorKind::ComponentFamilies: return "component-families";
    case GeneratorKind::DegenerateComponents: return "degenerate-components";
    }
    return "unknown";
}

inline GeneratorKind parse_generator_kind(const std::string& name) {
    for (auto k : {GeneratorKind::SwissRoll, GeneratorKind::NoisyCircle, GeneratorKind::LineChain,
                   GeneratorKind::ComponentFamilies, GeneratorKind::DegenerateComponents})
        if (to_string(k) == name) return k;
    throw ValidationError("unknown generator kind '" + name + "'");
}

inline bool is_library_kind(GeneratorKind kind) {
    return kind == GeneratorKind::ComponentFamilies || kind == GeneratorKind::DegenerateComponents;
}

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::SwissRoll;
    Eigen::Index n = 100;
    /// Additive Gaussian noise on point coordinates (or spectrum bins).
    double noise_sd = 0.0;
    std::uint64_t seed = 0;

    /// Additive Gaussian noise on the response (swiss-roll, noisy-circle, line-chain).
    double response_noise_sd = 0.0;
    /// line-chain: ambient dimension; the chain runs along the first axis.
    Eigen::Index dim = 1;

    // component libraries
    Eigen::Index bins = 100;
    /// Number of metallicity families; defaults to 3 (families) or 2 (degenerate).
    std::optional<Eigen::Index> families;
    /// Spectral separation between metallicity families; defaults to 1 (families) or 1e-2 (degenerate).
    std::optional<double> separation;
    /// Fraction of the log-age range each family spans; defaults to 0.15 (families) or 1 (degenerate).
    std::optional<double> age_span;
    /// degenerate-components: shape offset of the metal-poor family, in units
    /// of the age range.
    double degeneracy_shift = 0.3;
};

namespace detail {

inline double swiss_roll_arc_length(double theta) {
    return 0.5 * (theta * std::sqrt(1.0 + theta * theta) + std::asinh(theta));
}

inline void validate_spec(const GeneratorSpec& spec) {
    if (spec.n < 2) throw ValidationError("generator needs n >= 2");
    if (!(spec.noise_sd >= 0.0) || !std::isfinite(spec.noise_sd)) throw ValidationError("noise_sd must be >= 0");
    if (!(spec.response_noise_sd >= 0.0) || !std::isfinite(spec.response_noise_sd))
        throw ValidationError("response_noise_sd must be >= 0");
    if (spec.dim < 1) throw ValidationError("dim must be >= 1");
    if (spec.bins < 2) throw ValidationError("bins must be >= 2");
}

// Lanes: 0-15 coordinates/positions, 16+ noise per coordinate, 1<<20 response noise.
inline constexpr std::uint64_t kNoiseLane = 16;
inline constexpr std::uint64_t kResponseLane = 1u << 20;

inline DataSet swiss_roll(const GeneratorSpec& spec, const CounterRng& rng) {
    constexpr double lo = 1.5 * std::numbers::pi, hi = 4.5 * std::numbers::pi;
    const double s_lo = swiss_roll_arc_length(lo), s_hi = swiss_roll_arc_length(hi);
    Eigen::MatrixXd X(spec.n, 3);
    Eigen::VectorXd y(spec.n);
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        const auto idx = static_cast<std::uint64_t>(i);
        const double theta = lo + (hi - lo) * rng.uniform(idx, 0);
        const double height = 21.0 * rng.uniform(idx, 1);
        X(i, 0) = theta * std::cos(theta);
        X(i, 1) = height;
        X(i, 2) = theta * std::sin(theta);
        for (Eigen::Index k = 0; k < 3; ++k) X(i, k) += spec.noise_sd * rng.normal(idx, kNoiseLane + static_cast<std::uint64_t>(k));
        y(i) = (swiss_roll_arc_length(theta) - s_lo) / (s_hi - s_lo) + spec.response_noise_sd * rng.normal(idx, kResponseLane);
    }
    return make_dataset(std::move(X), std::move(y));
}

inline DataSet noisy_circle(const GeneratorSpec& spec, const CounterRng& rng) {
    Eigen::MatrixXd X(spec.n, 2);
    Eigen::VectorXd y(spec.n);
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        const auto idx = static_cast<std::uint64_t>(i);
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(spec.n);
        X(i, 0) = std::cos(angle) + spec.noise_sd * rng.normal(idx, kNoiseLane);
        X(i, 1) = std::sin(angle) + spec.noise_sd * rng.normal(idx, kNoiseLane + 1);
        y(i) = angle + spec.response_noise_sd * rng.normal(idx, kResponseLane);
    }
    return make_dataset(std::move(X), std::move(y));
}

inline DataSet line_chain(const GeneratorSpec& spec, const CounterRng& rng) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(spec.n, spec.dim);
    Eigen::VectorXd y(spec.n);
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        const auto idx = static_cast<std::uint64_t>(i);
        const double pos = static_cast<double>(i) / static_cast<double>(spec.n - 1);
        X(i, 0) = pos;
        for (Eigen::Index k = 0; k < spec.dim; ++k) X(i, k) += spec.noise_sd * rng.normal(idx, kNoiseLane + static_cast<std::uint64_t>(k));
        y(i) = pos + spec.response_noise_sd * rng.normal(idx, kResponseLane);
    }
    return make_dataset(std::move(X), std::move(y));
}

/// Smooth curves over `bins` coordinates driven by a shape variable q:
/// q moves an emission bump and flattens a continuum tilt. Metallicity
/// adds an oscillation of amplitude `separation`. Every feature vanishes at
/// the first coordinate, which serves as the normalization reference.
///
/// component-families: family f covers q in [a0_f, a0_f + span] with a0_f
/// staggered across families, so families are well separated.
/// degenerate-components: q = a + shift * (1 - z), i.e. a metal-poor
/// component looks like an older metal-rich one, and the families differ in
/// data space only through `separation`.
inline ComponentLibrary component_families(const GeneratorSpec& spec, const CounterRng& rng, bool degenerate) {
    const Eigen::Index F = spec.families.value_or(degenerate ? 2 : 3);
    const double sep = spec.separation.value_or(degenerate ? 1e-2 : 1.0);
    const double span = spec.age_span.value_or(degenerate ? 1.0 : 0.15);
    const double shift = degenerate ? spec.degeneracy_shift : 0.0;
    if (F < 1 || spec.n % F != 0)
        throw ValidationError("component count " + std::to_string(spec.n) + " is not a multiple of " +
                              std::to_string(F) + " families");
    if (!(sep >= 0.0) || sep > 1.5) throw ValidationError("separation must be in [0, 1.5]");
    if (!(span > 0.0) || span > 1.0) throw ValidationError("age_span must be in (0, 1]");
    if (!(shift >= 0.0) || shift > 1.0) throw ValidationError("degeneracy_shift must be in [0, 1]");
    const Eigen::Index per = spec.n / F;
    const Eigen::Index d = spec.bins;

    Eigen::MatrixXd raw(spec.n, d);
    Eigen::VectorXd age(spec.n), metal(spec.n);
    for (Eigen::Index f = 0; f < F; ++f) {
        const double z = F == 1 ? 0.5 : static_cast<double>(f) / static_cast<double>(F - 1);
        const double a0 = degenerate ? 0.0 : (1.0 - span) * z;
        for (Eigen::Index k = 0; k < per; ++k) {
            const Eigen::Index i = f * per + k;
            const double a = a0 + span * (per == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(per - 1));
            // Shape variable in [0, 1].
            const double u = (a + shift * (1.0 - z)) / (1.0 + shift);
            age(i) = std::pow(10.0, 6.0 + 4.0 * a);
            metal(i) = std::pow(10.0, -2.4 + 1.0 * z);
            const double center = 0.25 + 0.65 * u;
            for (Eigen::Index b = 0; b < d; ++b) {
                const double w = static_cast<double>(b) / static_cast<double>(d - 1);
                const double bump = 0.8 * std::exp(-(w - center) * (w - center) / (2.0 * 0.08 * 0.08));
                const double tilt = 0.6 * (1.0 - u) * w;
                const double metal_term = sep * (z - 0.5) * std::sin(3.0 * std::numbers::pi * w);
                raw(i, b) = 1.0 + bump + tilt + metal_term +
                            spec.noise_sd * rng.normal(static_cast<std::uint64_t>(i), kNoiseLane + static_cast<std::uint64_t>(b));
            }
        }
    }
    return make_library(std::move(raw), std::move(age), std::move(metal), 0);
}

} // namespace detail

using Generated = std::variant<DataSet, ComponentLibrary>;

inline Generated generate(const GeneratorSpec& spec) {
    detail::validate_spec(spec);
    const CounterRng rng(spec.seed);
    switch (spec.kind) {
    case GeneratorKind::SwissRoll: return detail::swiss_roll(spec, rng);
    case GeneratorKind::NoisyCircle: return detail::noisy_circle(spec, rng);
    case GeneratorKind::LineChain: return detail::line_chain(spec, rng);
    case GeneratorKind::ComponentFamilies: return detail::component_families(spec, rng, false);
    case GeneratorKind::DegenerateComponents: return detail::component_families(spec, rng, true);
    }
    throw ValidationError("unknown generator kind");
}

inline DataSet generate_dataset(const GeneratorSpec& spec) {
    if (is_library_kind(spec.kind)) throw ValidationError(to_string(spec.kind) + " generates a component library");
    return std::get<DataSet>(generate(spec));
}

inline ComponentLibrary generate_library(const GeneratorSpec& spec) {
    if (!is_library_kind(spec.kind)) throw ValidationError(to_string(spec.kind) + " generates a dataset");
    return std::get<ComponentLibrary>(generate(spec));
}

/// Family label per component of a generated library (row-major by family).
inline std::vector<int> family_labels(const GeneratorSpec& spec) {
    const Eigen::Index F = spec.families.value_or(spec.kind == GeneratorKind::DegenerateComponents ? 2 : 3);
    std::vector<int> labels(static_cast<std::size_t>(spec.n));
    for (Eigen::Index i = 0; i < spec.n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i / (spec.n / F));
    return labels;
}

} // namespace sca
