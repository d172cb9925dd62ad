#pragma once

#include "sca/dataset.hpp"
#include "sca/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace sca {

/// Theoretical mixture components (rows of `spectra`), each normalized to 1
/// at `reference_index`, with their physical parameters.
struct ComponentLibrary {
    Eigen::MatrixXd spectra;
    Eigen::VectorXd age;
    Eigen::VectorXd metallicity;
    Eigen::Index reference_index = 0;
    std::vector<std::string> ids;
    std::vector<std::string> feature_names;

    Eigen::Index size() const { return spectra.rows(); }
    Eigen::Index dim() const { return spectra.cols(); }
    Eigen::VectorXd log_age() const { return age.array().log10().matrix(); }
    Eigen::VectorXd log_metallicity() const { return metallicity.array().log10().matrix(); }
};

/// Divides every row by its value at `reference_index` and validates.
inline ComponentLibrary make_library(Eigen::MatrixXd raw, Eigen::VectorXd age, Eigen::VectorXd metallicity,
                                     Eigen::Index reference_index, std::vector<std::string> ids = {}) {
    const Eigen::Index N = raw.rows();
    if (N < 1 || raw.cols() < 1) throw ValidationError("component library is empty");
    if (age.size() != N || metallicity.size() != N)
        throw ValidationError("component library needs one age and one metallicity per component");
    if (reference_index < 0 || reference_index >= raw.cols())
        throw ValidationError("reference index " + std::to_string(reference_index) + " out of range");
    if (ids.empty()) ids = index_ids(N);
    if (static_cast<Eigen::Index>(ids.size()) != N) throw ValidationError("component library id count mismatch");
    for (Eigen::Index i = 0; i < N; ++i) {
        if (!(age(i) > 0.0) || !(metallicity(i) > 0.0) || !std::isfinite(age(i)) || !std::isfinite(metallicity(i)))
            throw ValidationError("component " + ids[static_cast<std::size_t>(i)] +
                                  " needs positive finite age and metallicity");
        const double ref = raw(i, reference_index);
        if (!(ref > 0.0) || !std::isfinite(ref))
            throw ValidationError("component " + ids[static_cast<std::size_t>(i)] +
                                  " is not positive at the reference coordinate");
        raw.row(i) /= ref;
        if (!raw.row(i).allFinite())
            throw ValidationError("component " + ids[static_cast<std::size_t>(i)] + " has non-finite values");
    }
    std::vector<std::string> names;
    for (Eigen::Index k = 0; k < raw.cols(); ++k) names.push_back("f" + std::to_string(k + 1));
    return {std::move(raw), std::move(age), std::move(metallicity), reference_index, std::move(ids), std::move(names)};
}

/// Library from a table with `age` and `metallicity` columns; every other
/// non-id column is a spectrum coordinate. Without an explicit reference
/// index, the first coordinate equal to 1 for every component is used.
inline ComponentLibrary library_from_table(const Table& table, std::optional<Eigen::Index> reference_index = std::nullopt,
                                           const std::optional<std::string>& id_column = std::nullopt) {
    LoadOptions opts;
    opts.id_column = id_column;
    opts.response_column = "age";
    opts.ignore_columns = {"metallicity"};
    DataSet spectra = dataset_from_table(table, opts);
    LoadOptions z_opts;
    z_opts.id_column = id_column;
    z_opts.response_column = "metallicity";
    z_opts.ignore_columns = {"age"};
    const DataSet z = dataset_from_table(table, z_opts);
    if (!reference_index) {
        for (Eigen::Index k = 0; k < spectra.dim() && !reference_index; ++k)
            if ((spectra.points.col(k).array() == 1.0).all()) reference_index = k;
        if (!reference_index)
            throw ValidationError("library is not normalized at any coordinate; pass a reference index");
    }
    auto names = spectra.feature_names;
    ComponentLibrary lib = make_library(std::move(spectra.points), *spectra.response, *z.response, *reference_index,
                                        std::move(spectra.ids));
    lib.feature_names = std::move(names);
    return lib;
}

inline ComponentLibrary load_library(std::istream& in, std::optional<Eigen::Index> reference_index = std::nullopt,
                                     const std::optional<std::string>& id_column = std::nullopt) {
    return library_from_table(read_table(in), reference_index, id_column);
}

} // namespace sca
