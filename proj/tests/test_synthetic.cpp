#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace sca;

TEST(Synthetic, NoiselessCircleOfFour) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::NoisyCircle;
    spec.n = 4;
    const DataSet data = generate_dataset(spec);
    Eigen::MatrixXd expected(4, 2);
    expected << 1, 0, 0, 1, -1, 0, 0, -1;
    EXPECT_LE((data.points - expected).cwiseAbs().maxCoeff(), 1e-15);
    for (Eigen::Index i = 0; i < 4; ++i) {
        EXPECT_NEAR(data.points.row(i).norm(), 1.0, 1e-15);
        EXPECT_NEAR((*data.response)(i), std::numbers::pi / 2 * static_cast<double>(i), 1e-15);
    }
}

TEST(Synthetic, SwissRollIsByteReproducible) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::SwissRoll;
    spec.n = 200;
    spec.noise_sd = 0.1;
    spec.response_noise_sd = 0.05;
    spec.seed = 31;
    const DataSet a = generate_dataset(spec), b = generate_dataset(spec);
    EXPECT_EQ(matrix_csv(a.ids, a.feature_names, a.points), matrix_csv(b.ids, b.feature_names, b.points));
    EXPECT_EQ(*a.response, *b.response);
    spec.seed = 32;
    EXPECT_NE(generate_dataset(spec).points, a.points);
}

TEST(Synthetic, SwissRollGeometry) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::SwissRoll;
    spec.n = 500;
    spec.seed = 3;
    const DataSet data = generate_dataset(spec);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const double theta = std::hypot(data.points(i, 0), data.points(i, 2));
        EXPECT_GE(theta, 1.5 * std::numbers::pi - 1e-12);
        EXPECT_LE(theta, 4.5 * std::numbers::pi + 1e-12);
        EXPECT_GE(data.points(i, 1), 0.0);
        EXPECT_LE(data.points(i, 1), 21.0);
        EXPECT_GE((*data.response)(i), 0.0);
        EXPECT_LE((*data.response)(i), 1.0);
    }
}

// Per-point values depend only on (seed, index): a longer sample extends a
// shorter one.
TEST(Synthetic, NoiseIsKeyedByPointIndex) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::SwissRoll;
    spec.noise_sd = 0.2;
    spec.seed = 4;
    spec.n = 50;
    const DataSet small = generate_dataset(spec);
    spec.n = 80;
    const DataSet big = generate_dataset(spec);
    EXPECT_EQ(big.points.topRows(50), small.points);
}

TEST(Synthetic, LineChain) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::LineChain;
    spec.n = 5;
    spec.dim = 3;
    const DataSet data = generate_dataset(spec);
    EXPECT_EQ(data.dim(), 3);
    EXPECT_DOUBLE_EQ(data.points(4, 0), 1.0);
    EXPECT_EQ(data.points.rightCols(2), Eigen::MatrixXd::Zero(5, 2));
    EXPECT_DOUBLE_EQ((*data.response)(2), 0.5);
}

TEST(Synthetic, LibrariesAreNormalizedAtReference) {
    for (auto kind : {GeneratorKind::ComponentFamilies, GeneratorKind::DegenerateComponents}) {
        GeneratorSpec spec;
        spec.kind = kind;
        spec.n = 60;
        spec.noise_sd = 0.01;
        const ComponentLibrary lib = generate_library(spec);
        EXPECT_EQ(lib.size(), 60);
        EXPECT_EQ(lib.dim(), 100);
        EXPECT_TRUE((lib.spectra.col(lib.reference_index).array() == 1.0).all());
        EXPECT_GT(lib.age.minCoeff(), 0.0);
        EXPECT_GT(lib.metallicity.minCoeff(), 0.0);
    }
}

TEST(Synthetic, FamiliesMergeAsSeparationVanishes) {
    double prev = std::numeric_limits<double>::infinity();
    for (double delta : {1e-1, 1e-2, 1e-3}) {
        GeneratorSpec spec;
        spec.kind = GeneratorKind::DegenerateComponents;
        spec.n = 40;
        spec.separation = delta;
        spec.degeneracy_shift = 0.0;
        const ComponentLibrary lib = generate_library(spec);
        const auto labels = family_labels(spec);
        double worst = 0.0;
        for (Eigen::Index i = 0; i < 40; ++i)
            for (Eigen::Index j = 0; j < 40; ++j)
                if (labels[static_cast<std::size_t>(i)] == 0 && labels[static_cast<std::size_t>(j)] == 1 && i + 20 == j)
                    worst = std::max(worst, (lib.spectra.row(i) - lib.spectra.row(j)).norm());
        EXPECT_LT(worst, prev);
        EXPECT_LE(worst, 20.0 * delta);
        prev = worst;
    }
}

TEST(Synthetic, RejectsInvalidSpecs) {
    GeneratorSpec spec;
    spec.n = 1;
    EXPECT_THROW(generate(spec), ValidationError);
    spec.n = 10;
    spec.noise_sd = -1.0;
    EXPECT_THROW(generate(spec), ValidationError);
    GeneratorSpec lib;
    lib.kind = GeneratorKind::ComponentFamilies;
    lib.n = 10; // not a multiple of 3 families
    EXPECT_THROW(generate(lib), ValidationError);
    EXPECT_THROW(generate_dataset(lib), ValidationError);
    EXPECT_THROW(parse_generator_kind("spiral"), ValidationError);
    EXPECT_EQ(parse_generator_kind("degenerate-components"), GeneratorKind::DegenerateComponents);
}
