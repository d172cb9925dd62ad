#include "cli.hpp"

#include "sca/sca.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

namespace sca::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// shared helpers

Table read_table_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open input file " + path);
    return read_table(in);
}

std::optional<double> parse_epsilon(const std::string& text) {
    if (text == "auto") return std::nullopt;
    auto v = parse_number(text);
    if (!v || !(*v > 0.0)) throw ValidationError("--epsilon must be 'auto' or a positive number, got '" + text + "'");
    return v;
}

Dissimilarity parse_dissimilarity(const std::string& text) {
    if (text == "sqeuclidean") return Dissimilarity::squared_euclidean();
    if (text == "euclidean") return Dissimilarity::euclidean();
    if (text.rfind("table:", 0) == 0) {
        const Table t = read_table_file(text.substr(6));
        Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
        for (std::size_t i = 0; i < t.rows.size(); ++i)
            for (std::size_t j = 0; j < t.header.size(); ++j) {
                auto v = parse_number(t.rows[i][j]);
                if (!v) throw ValidationError("malformed row " + std::to_string(i) + " in dissimilarity table");
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
            }
        return Dissimilarity::user_table(std::move(m));
    }
    throw ValidationError("--diss must be sqeuclidean, euclidean or table:<path>, got '" + text + "'");
}

DissimilarityKind parse_kind(const std::string& text) {
    if (text == "sqeuclidean") return DissimilarityKind::SquaredEuclidean;
    if (text == "euclidean") return DissimilarityKind::Euclidean;
    throw ValidationError("model uses dissimilarity '" + text + "', which cannot be extended to new points");
}

std::string sidecar_path(const std::string& data_path) { return data_path + ".json"; }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Canonical command line with every resolved flag; re-running it
/// reproduces the outputs.
struct ArgvBuilder {
    std::vector<std::string> argv;
    explicit ArgvBuilder(std::string cmd) { argv.push_back(std::move(cmd)); }
    ArgvBuilder& add(const std::string& flag, const std::string& value) {
        argv.push_back(flag);
        argv.push_back(value);
        return *this;
    }
    ArgvBuilder& add(const std::string& flag, double value) { return add(flag, format_double(value)); }
    ArgvBuilder& add(const std::string& flag, long long value) { return add(flag, std::to_string(value)); }
    ArgvBuilder& add(const std::string& flag, const std::optional<std::string>& value) {
        if (value) add(flag, *value);
        return *this;
    }
};

json sidecar(const std::string& command, json config, const ArgvBuilder& argv) {
    json j;
    j["command"] = command;
    j["config"] = std::move(config);
    j["argv"] = argv.argv;
    return j;
}

json matrix_rows(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_rows(const json& rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = n > 0 ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows.at(static_cast<std::size_t>(i)).size()) != d)
            throw ValidationError("ragged matrix in model file");
        for (Eigen::Index j = 0; j < d; ++j)
            m(i, j) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)).get<double>();
    }
    return m;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json read_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ValidationError("cannot parse " + path + ": " + e.what());
    }
}

/// Kernel settings shared by embed and regress.
struct KernelFlags {
    std::string epsilon = "auto";
    std::string diss = "sqeuclidean";
    std::optional<double> cutoff;

    void attach(CLI::App* app) {
        app->add_option("--epsilon", epsilon, "kernel bandwidth, or 'auto' for the median dissimilarity");
        app->add_option("--diss", diss, "sqeuclidean | euclidean | table:<path>");
        app->add_option("--cutoff", cutoff, "zero kernel entries with dissimilarity/epsilon above this");
    }
};

json training_json(const DataSet& data) {
    json j;
    j["ids"] = data.ids;
    j["feature_names"] = data.feature_names;
    j["points"] = matrix_rows(data.points);
    return j;
}

DataSet training_from_json(const json& j) {
    DataSet data;
    data.ids = j.at("ids").get<std::vector<std::string>>();
    data.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    data.points = matrix_from_rows(j.at("points"));
    validate(data);
    return data;
}

struct FittedKernel {
    TransitionMatrix transition;
    SpectralDecomposition decomposition;
};

FittedKernel fit_kernel(const DataSet& data, const Dissimilarity& diss, std::optional<double> epsilon,
                        const KernelOptions& kernel) {
    TransitionMatrix T = build_transition(data, diss, epsilon, kernel);
    SpectralDecomposition S = decompose(T);
    return {std::move(T), std::move(S)};
}

/// Rebuilds the extension model recorded in an embed or regress sidecar.
ExtensionModel extension_from_json(const json& j) {
    const DataSet data = training_from_json(j.at("training"));
    const DissimilarityKind kind = parse_kind(j.at("diss").get<std::string>());
    KernelOptions kernel;
    if (j.contains("cutoff") && !j.at("cutoff").is_null()) kernel.cutoff = j.at("cutoff").get<double>();
    Dissimilarity diss;
    diss.kind = kind;
    const auto fk = fit_kernel(data, diss, j.at("epsilon").get<double>(), kernel);
    return make_extension_model(data, fk.transition, fk.decomposition, kernel);
}

std::vector<std::string> psi_columns(Eigen::Index r) { return numbered_columns("psi_", r); }

// ---------------------------------------------------------------------------
// gen

struct GenFlags {
    std::string kind;
    long long n = 0;
    unsigned long long seed = 0;
    std::string out;
    double noise = 0.0;
    double response_noise = 0.0;
    long long dim = 1;
    long long bins = 100;
    std::optional<long long> families;
    std::optional<double> separation;
    std::optional<double> age_span;
};

void cmd_gen(const GenFlags& f) {
    GeneratorSpec spec;
    spec.kind = parse_generator_kind(f.kind);
    spec.n = f.n;
    spec.seed = f.seed;
    spec.noise_sd = f.noise;
    spec.response_noise_sd = f.response_noise;
    spec.dim = f.dim;
    spec.bins = f.bins;
    if (f.families) spec.families = *f.families;
    spec.separation = f.separation;
    spec.age_span = f.age_span;
    const Generated g = generate(spec);

    ArgvBuilder argv("gen");
    argv.add("--kind", f.kind).add("--n", f.n).add("--seed", std::to_string(f.seed)).add("--noise", f.noise);
    json config;
    config["kind"] = f.kind;
    config["n"] = f.n;
    config["seed"] = f.seed;
    config["noise"] = f.noise;

    std::string csv;
    if (const auto* data = std::get_if<DataSet>(&g)) {
        argv.add("--response-noise", f.response_noise).add("--dim", f.dim);
        config["response_noise"] = f.response_noise;
        config["dim"] = f.dim;
        Eigen::MatrixXd values = data->points;
        auto cols = data->feature_names;
        if (data->response) {
            values.conservativeResize(Eigen::NoChange, values.cols() + 1);
            values.col(values.cols() - 1) = *data->response;
            cols.push_back("y");
        }
        csv = matrix_csv(data->ids, cols, values);
    } else {
        const auto& lib = std::get<ComponentLibrary>(g);
        argv.add("--bins", f.bins);
        config["bins"] = f.bins;
        config["reference_index"] = lib.reference_index;
        if (f.families) {
            argv.add("--families", *f.families);
            config["families"] = *f.families;
        }
        if (f.separation) {
            argv.add("--separation", *f.separation);
            config["separation"] = *f.separation;
        }
        if (f.age_span) {
            argv.add("--age-span", *f.age_span);
            config["age_span"] = *f.age_span;
        }
        Eigen::MatrixXd values(lib.size(), lib.dim() + 2);
        values << lib.age, lib.metallicity, lib.spectra;
        std::vector<std::string> cols{"age", "metallicity"};
        cols.insert(cols.end(), lib.feature_names.begin(), lib.feature_names.end());
        csv = matrix_csv(lib.ids, cols, values);
    }
    argv.add("--out", f.out);
    config["out"] = f.out;
    write_file_atomic(f.out, csv);
    write_file_atomic(sidecar_path(f.out), dump(sidecar("gen", config, argv)));
}

// ---------------------------------------------------------------------------
// embed / extend

struct EmbedFlags {
    std::string input;
    std::optional<std::string> id_column;
    std::vector<std::string> ignore_columns;
    KernelFlags kernel;
    int t = 1;
    std::optional<long long> r;
    std::string out_dir;
};

void cmd_embed(const EmbedFlags& f) {
    LoadOptions lo;
    lo.id_column = f.id_column;
    lo.ignore_columns = f.ignore_columns;
    const DataSet data = dataset_from_table(read_table_file(f.input), lo);
    const Dissimilarity diss = parse_dissimilarity(f.kernel.diss);
    KernelOptions ko;
    ko.cutoff = f.kernel.cutoff;
    const auto fk = fit_kernel(data, diss, parse_epsilon(f.kernel.epsilon), ko);
    const Eigen::Index r = f.r ? static_cast<Eigen::Index>(*f.r) : default_dimension(data.size());
    const DiffusionEmbedding emb = embed(fk.decomposition, f.t, r);

    const std::string diss_name = diss.kind == DissimilarityKind::Table ? f.kernel.diss : to_string(diss.kind);
    ArgvBuilder argv("embed");
    argv.add("--input", f.input).add("--id-column", f.id_column);
    for (const auto& c : f.ignore_columns) argv.add("--ignore-column", c);
    argv.add("--epsilon", fk.transition.epsilon).add("--diss", diss_name).add("--t", static_cast<long long>(f.t)).add("--r", static_cast<long long>(r));
    if (f.kernel.cutoff) argv.add("--cutoff", *f.kernel.cutoff);
    argv.add("--out-dir", f.out_dir);

    json config;
    config["input"] = f.input;
    config["id_column"] = f.id_column ? json(*f.id_column) : json(nullptr);
    config["ignore_columns"] = f.ignore_columns;
    config["epsilon"] = fk.transition.epsilon;
    config["diss"] = diss_name;
    config["cutoff"] = f.kernel.cutoff ? json(*f.kernel.cutoff) : json(nullptr);
    config["t"] = f.t;
    config["r"] = r;
    config["out_dir"] = f.out_dir;
    json side = sidecar("embed", config, argv);
    side["epsilon"] = fk.transition.epsilon;
    side["diss"] = to_string(diss.kind);
    side["cutoff"] = config["cutoff"];
    side["t"] = f.t;
    side["r"] = r;
    side["n"] = data.size();
    side["d"] = data.dim();
    side["eigenvalues"] = vector_json(fk.decomposition.eigenvalues);
    side["training"] = training_json(data);

    const fs::path dir(f.out_dir);
    write_file_atomic(dir / "coords.csv", matrix_csv(data.ids, psi_columns(r), emb.coords));
    write_file_atomic(dir / "embed.json", dump(side));
}

struct ExtendFlags {
    std::string model;
    std::string input;
    std::optional<std::string> id_column;
    std::optional<int> t;
    std::optional<long long> r;
    std::string out;
};

void cmd_extend(const ExtendFlags& f) {
    const json model = read_json((fs::path(f.model) / "embed.json").string());
    const ExtensionModel M = extension_from_json(model);
    const int t = f.t.value_or(model.at("t").get<int>());
    const Eigen::Index r = f.r ? static_cast<Eigen::Index>(*f.r) : model.at("r").get<Eigen::Index>();
    const auto names = model.at("training").at("feature_names").get<std::vector<std::string>>();
    const QueryPoints q = query_points_from_table(read_table_file(f.input), names, f.id_column);
    const Eigen::MatrixXd coords = extend_embedding(M, q.points, t, r);

    ArgvBuilder argv("extend");
    argv.add("--model", f.model).add("--input", f.input).add("--id-column", f.id_column)
        .add("--t", static_cast<long long>(t)).add("--r", static_cast<long long>(r)).add("--out", f.out);
    json config;
    config["model"] = f.model;
    config["input"] = f.input;
    config["id_column"] = f.id_column ? json(*f.id_column) : json(nullptr);
    config["t"] = t;
    config["r"] = r;
    config["out"] = f.out;
    json side = sidecar("extend", config, argv);
    side["epsilon"] = M.epsilon;
    side["diss"] = to_string(M.diss_kind);
    write_file_atomic(f.out, matrix_csv(q.ids, psi_columns(r), coords));
    write_file_atomic(sidecar_path(f.out), dump(side));
}

// ---------------------------------------------------------------------------
// regress / predict

struct RegressFlags {
    std::string input;
    std::optional<std::string> id_column;
    std::string response;
    KernelFlags kernel;
    int folds = kDefaultFolds;
    int t = 1;
    std::optional<long long> r;
    unsigned long long seed = 0;
    std::string out_dir;
};

void cmd_regress(const RegressFlags& f) {
    LoadOptions lo;
    lo.id_column = f.id_column;
    lo.response_column = f.response;
    const DataSet data = dataset_from_table(read_table_file(f.input), lo);
    const Dissimilarity diss = parse_dissimilarity(f.kernel.diss);
    if (diss.kind == DissimilarityKind::Table)
        throw ValidationError("regress needs a built-in dissimilarity so the model can predict new points");
    KernelOptions ko;
    ko.cutoff = f.kernel.cutoff;
    const auto fk = fit_kernel(data, diss, parse_epsilon(f.kernel.epsilon), ko);
    const Eigen::Index r = f.r ? static_cast<Eigen::Index>(*f.r) : default_dimension(data.size());
    const DiffusionEmbedding emb = embed(fk.decomposition, f.t, r);
    const ExtensionModel ext = make_extension_model(data, fk.transition, fk.decomposition, ko);
    RegressionOptions ro;
    ro.folds = f.folds;
    ro.seed = f.seed;
    const EigenbasisRegression model = fit(data, emb, ext, ro);
    const Eigen::VectorXd fitted = fitted_values(model, emb);

    ArgvBuilder argv("regress");
    argv.add("--input", f.input).add("--id-column", f.id_column).add("--response", f.response)
        .add("--epsilon", fk.transition.epsilon).add("--diss", to_string(diss.kind))
        .add("--folds", static_cast<long long>(f.folds)).add("--t", static_cast<long long>(f.t))
        .add("--r", static_cast<long long>(r)).add("--seed", std::to_string(f.seed));
    if (f.kernel.cutoff) argv.add("--cutoff", *f.kernel.cutoff);
    argv.add("--out-dir", f.out_dir);

    json config;
    config["input"] = f.input;
    config["id_column"] = f.id_column ? json(*f.id_column) : json(nullptr);
    config["response"] = f.response;
    config["epsilon"] = fk.transition.epsilon;
    config["diss"] = to_string(diss.kind);
    config["cutoff"] = f.kernel.cutoff ? json(*f.kernel.cutoff) : json(nullptr);
    config["folds"] = f.folds;
    config["t"] = f.t;
    config["r"] = r;
    config["seed"] = f.seed;
    config["out_dir"] = f.out_dir;

    json side = sidecar("regress", config, argv);
    side["intercept"] = model.intercept;
    side["coefficients"] = vector_json(model.coefficients);
    side["p"] = model.p;
    side["t"] = model.t;
    side["r"] = model.r;
    json curve = json::array();
    for (const auto& [p, risk] : risk_curve(model)) curve.push_back({{"p", p}, {"risk", risk}});
    side["risk_curve"] = curve;
    side["baseline_risk"] = model.baseline_risk;
    side["epsilon"] = fk.transition.epsilon;
    side["diss"] = to_string(diss.kind);
    side["cutoff"] = config["cutoff"];
    side["eigenvalues"] = vector_json(fk.decomposition.eigenvalues.head(r));
    side["training"] = training_json(data);

    Eigen::MatrixXd pred(data.size(), 2);
    pred << *data.response, fitted;
    const fs::path dir(f.out_dir);
    write_file_atomic(dir / "predictions.csv", matrix_csv(data.ids, {f.response, "fitted"}, pred));
    write_file_atomic(dir / "model.json", dump(side));
}

struct PredictFlags {
    std::string model;
    std::string input;
    std::optional<std::string> id_column;
    std::string out;
};

void cmd_predict(const PredictFlags& f) {
    const json j = read_json(f.model);
    if (j.value("command", "") != "regress") throw ValidationError(f.model + " is not a regression model file");
    EigenbasisRegression model;
    model.extension = extension_from_json(j);
    model.intercept = j.at("intercept").get<double>();
    const auto coef = j.at("coefficients").get<std::vector<double>>();
    model.coefficients = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
    model.p = j.at("p").get<Eigen::Index>();
    model.t = j.at("t").get<int>();
    model.r = j.at("r").get<Eigen::Index>();
    if (model.coefficients.size() != model.p) throw ValidationError("model coefficient count does not match p");
    const auto names = j.at("training").at("feature_names").get<std::vector<std::string>>();
    const QueryPoints q = query_points_from_table(read_table_file(f.input), names, f.id_column);
    const Eigen::VectorXd yhat = predict(model, q.points);

    ArgvBuilder argv("predict");
    argv.add("--model", f.model).add("--input", f.input).add("--id-column", f.id_column).add("--out", f.out);
    json config;
    config["model"] = f.model;
    config["input"] = f.input;
    config["id_column"] = f.id_column ? json(*f.id_column) : json(nullptr);
    config["out"] = f.out;
    write_file_atomic(f.out, matrix_csv(q.ids, {"prediction"}, yhat));
    write_file_atomic(sidecar_path(f.out), dump(sidecar("predict", config, argv)));
}

// ---------------------------------------------------------------------------
// prototype / fit-mixture / bench-quantization

struct PrototypeFlags {
    std::string input;
    std::optional<std::string> id_column;
    std::optional<long long> reference_index;
    long long k = 0;
    int t = 1;
    std::optional<long long> r;
    std::string epsilon = "auto";
    unsigned long long seed = 0;
    std::string out_dir;
};

ComponentLibrary read_library(const std::string& path, std::optional<long long> ref,
                              const std::optional<std::string>& id_column) {
    std::optional<Eigen::Index> ri;
    if (ref) ri = static_cast<Eigen::Index>(*ref);
    return library_from_table(read_table_file(path), ri, id_column);
}

std::string prototypes_csv(const PrototypeSet& ps, const std::vector<std::string>& feature_names) {
    Eigen::MatrixXd values(ps.size(), ps.prototypes.cols() + 2);
    values << ps.proto_log_age, ps.proto_log_metallicity, ps.prototypes;
    std::vector<std::string> cols{"mean_log_age", "mean_log_metallicity"};
    cols.insert(cols.end(), feature_names.begin(), feature_names.end());
    return matrix_csv(index_ids(ps.size()), cols, values);
}

void cmd_prototype(const PrototypeFlags& f) {
    const ComponentLibrary lib = read_library(f.input, f.reference_index, f.id_column);
    const Eigen::Index r = f.r ? static_cast<Eigen::Index>(*f.r) : default_dimension(lib.size());
    KMeansOptions km;
    km.epsilon = parse_epsilon(f.epsilon);
    if (!km.epsilon) {
        // Record the resolved bandwidth; it is what diffusion_kmeans would pick.
        const auto order = detail::canonical_order(lib);
        Eigen::MatrixXd sorted(lib.size(), lib.dim());
        for (Eigen::Index i = 0; i < lib.size(); ++i) sorted.row(i) = lib.spectra.row(order[static_cast<std::size_t>(i)]);
        km.epsilon = default_epsilon(pairwise_dissimilarity(make_dataset(sorted), Dissimilarity::squared_euclidean()));
    }
    const PrototypeSet ps = diffusion_kmeans(lib, static_cast<Eigen::Index>(f.k), f.t, r, f.seed, km);

    ArgvBuilder argv("prototype");
    argv.add("--input", f.input).add("--id-column", f.id_column)
        .add("--reference-index", static_cast<long long>(lib.reference_index)).add("--k", f.k)
        .add("--t", static_cast<long long>(f.t)).add("--r", static_cast<long long>(r)).add("--epsilon", *km.epsilon)
        .add("--seed", std::to_string(f.seed)).add("--out-dir", f.out_dir);
    json config;
    config["input"] = f.input;
    config["id_column"] = f.id_column ? json(*f.id_column) : json(nullptr);
    config["reference_index"] = lib.reference_index;
    config["k"] = f.k;
    config["t"] = f.t;
    config["r"] = r;
    config["epsilon"] = *km.epsilon;
    config["seed"] = f.seed;
    config["out_dir"] = f.out_dir;
    json side = sidecar("prototype", config, argv);
    side["iterations"] = ps.iterations;
    side["converged"] = ps.converged;
    side["wcss_history"] = ps.wcss_history;
    side["mean_log_age"] = vector_json(ps.proto_log_age);
    side["mean_log_metallicity"] = vector_json(ps.proto_log_metallicity);

    Eigen::MatrixXd labels(lib.size(), 1);
    for (Eigen::Index i = 0; i < lib.size(); ++i) labels(i, 0) = ps.member_assignments[static_cast<std::size_t>(i)];
    const fs::path dir(f.out_dir);
    write_file_atomic(dir / "prototypes.csv", prototypes_csv(ps, lib.feature_names));
    write_file_atomic(dir / "assignments.csv", matrix_csv(lib.ids, {"cluster"}, labels));
    write_file_atomic(dir / "centroids.csv",
                      matrix_csv(index_ids(ps.size()), psi_columns(ps.centroids_diffusion.cols()),
                                 ps.centroids_diffusion, "cluster"));
    write_file_atomic(dir / "prototype.json", dump(side));
}

struct FitMixtureFlags {
    std::string prototypes;
    std::string input;
    std::optional<std::string> id_column;
    double noise = 1.0;
    std::string out;
};

void cmd_fit_mixture(const FitMixtureFlags& f) {
    const Table pt = read_table_file(f.prototypes);
    std::vector<std::string> feature_names;
    for (const auto& h : pt.header)
        if (h != "id" && h != "mean_log_age" && h != "mean_log_metallicity") feature_names.push_back(h);
    if (!pt.column("mean_log_age") || !pt.column("mean_log_metallicity"))
        throw ValidationError(f.prototypes + " needs mean_log_age and mean_log_metallicity columns");
    const QueryPoints protos = query_points_from_table(pt, feature_names, std::string("id"));
    if (protos.points.rows() < 1) throw ValidationError("prototype file has no rows");
    PrototypeSet ps;
    ps.prototypes = protos.points;
    ps.proto_log_age = query_points_from_table(pt, {"mean_log_age"}).points.col(0);
    ps.proto_log_metallicity = query_points_from_table(pt, {"mean_log_metallicity"}).points.col(0);

    const QueryPoints obs = query_points_from_table(read_table_file(f.input), feature_names, f.id_column);
    const Eigen::Index K = ps.size();
    Eigen::MatrixXd out(obs.points.rows(), K + 3);
    for (Eigen::Index i = 0; i < obs.points.rows(); ++i) {
        const MixtureFit fit = fit_mixture(ps, obs.points.row(i).transpose(), f.noise);
        out(i, 0) = fit.mean_log_age;
        out(i, 1) = fit.mean_log_metallicity;
        out(i, 2) = fit.residual;
        out.row(i).tail(K) = fit.gamma.transpose();
    }
    std::vector<std::string> cols{"mean_log_age", "mean_log_metallicity", "residual"};
    for (const auto& c : numbered_columns("gamma_", K)) cols.push_back(c);

    ArgvBuilder argv("fit-mixture");
    argv.add("--prototypes", f.prototypes).add("--input", f.input).add("--id-column", f.id_column)
        .add("--noise", f.noise).add("--out", f.out);
    json config;
    config["prototypes"] = f.prototypes;
    config["input"] = f.input;
    config["id_column"] = f.id_column ? json(*f.id_column) : json(nullptr);
    config["noise"] = f.noise;
    config["out"] = f.out;
    write_file_atomic(f.out, matrix_csv(obs.ids, cols, out));
    write_file_atomic(sidecar_path(f.out), dump(sidecar("fit-mixture", config, argv)));
}

struct BenchFlags {
    std::optional<std::string> input;
    std::optional<std::string> id_column;
    std::optional<long long> reference_index;
    long long k = 0;
    int trials = 0;
    double noise = 0.0;
    unsigned long long seed = 0;
    int t = 1;
    std::optional<long long> r;
    std::string epsilon = "auto";
    long long components = 3;
    std::string out;
};

/// Library used when bench-quantization gets no --input: two metallicity
/// families of 60 ages whose spectra nearly coincide.
GeneratorSpec default_bench_library() {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::DegenerateComponents;
    spec.n = 120;
    spec.seed = 0;
    return spec;
}

void cmd_bench(const BenchFlags& f) {
    const ComponentLibrary lib = f.input ? read_library(*f.input, f.reference_index, f.id_column)
                                         : generate_library(default_bench_library());
    BenchmarkOptions bo;
    bo.t = f.t;
    if (f.r) bo.r = static_cast<Eigen::Index>(*f.r);
    bo.epsilon = parse_epsilon(f.epsilon);
    bo.components_per_trial = static_cast<Eigen::Index>(f.components);
    const BenchmarkReport rep = quantization_benchmark(lib, static_cast<Eigen::Index>(f.k), f.trials, f.noise, f.seed, bo);
    const Eigen::Index r = bo.r.value_or(default_dimension(lib.size()));

    ArgvBuilder argv("bench-quantization");
    argv.add("--input", f.input).add("--id-column", f.id_column);
    if (f.input) argv.add("--reference-index", static_cast<long long>(lib.reference_index));
    argv.add("--k", f.k).add("--trials", static_cast<long long>(f.trials)).add("--noise", f.noise)
        .add("--seed", std::to_string(f.seed)).add("--t", static_cast<long long>(f.t))
        .add("--r", static_cast<long long>(r)).add("--epsilon", f.epsilon)
        .add("--components-per-trial", f.components).add("--out", f.out);
    json config;
    config["input"] = f.input ? json(*f.input) : json("builtin:degenerate-components(n=120,seed=0)");
    config["id_column"] = f.id_column ? json(*f.id_column) : json(nullptr);
    config["reference_index"] = lib.reference_index;
    config["k"] = f.k;
    config["trials"] = f.trials;
    config["noise"] = f.noise;
    config["seed"] = f.seed;
    config["t"] = f.t;
    config["r"] = r;
    config["epsilon"] = f.epsilon;
    config["components_per_trial"] = f.components;
    config["out"] = f.out;

    json side = sidecar("bench-quantization", config, argv);
    json methods = json::array();
    for (const MethodReport* m : {&rep.diffusion, &rep.grid}) {
        json mj;
        mj["method"] = m->method;
        mj["rmse_log_age"] = m->rmse_log_age;
        mj["rmse_log_metallicity"] = m->rmse_log_metallicity;
        json trials = json::array();
        for (const auto& tr : m->trials)
            trials.push_back({{"true_log_age", tr.true_log_age},
                              {"true_log_metallicity", tr.true_log_metallicity},
                              {"est_log_age", tr.est_log_age},
                              {"est_log_metallicity", tr.est_log_metallicity},
                              {"residual", tr.residual}});
        mj["trials"] = trials;
        methods.push_back(mj);
    }
    side["methods"] = methods;
    write_file_atomic(f.out, dump(side));
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& err) {
    CLI::App app{"sca: spectral connectivity analysis (diffusion maps) toolkit", "sca"};
    app.require_subcommand(1);

    GenFlags gen;
    auto* g = app.add_subcommand("gen", "generate a synthetic dataset or component library");
    g->add_option("--kind", gen.kind, "swiss-roll | noisy-circle | line-chain | component-families | degenerate-components")->required();
    g->add_option("--n", gen.n, "number of points or components")->required();
    g->add_option("--seed", gen.seed)->required();
    g->add_option("--out", gen.out, "output csv")->required();
    g->add_option("--noise", gen.noise, "Gaussian noise sd on coordinates");
    g->add_option("--response-noise", gen.response_noise, "Gaussian noise sd on the response");
    g->add_option("--dim", gen.dim, "line-chain ambient dimension");
    g->add_option("--bins", gen.bins, "spectrum length for component libraries");
    g->add_option("--families", gen.families, "number of metallicity families");
    g->add_option("--separation", gen.separation, "spectral separation between families");
    g->add_option("--age-span", gen.age_span, "fraction of the age range per family");

    EmbedFlags emb;
    auto* e = app.add_subcommand("embed", "diffusion-map embedding of a dataset");
    e->add_option("--input", emb.input)->required();
    e->add_option("--id-column", emb.id_column);
    e->add_option("--ignore-column", emb.ignore_columns, "column to leave out of the features (repeatable)");
    emb.kernel.attach(e);
    e->add_option("--t", emb.t, "diffusion time");
    e->add_option("--r", emb.r, "embedding dimension (default min(50, n-1))");
    e->add_option("--out-dir", emb.out_dir)->required();

    ExtendFlags ext;
    auto* x = app.add_subcommand("extend", "Nystrom extension of an embedding to new points");
    x->add_option("--model", ext.model, "directory written by embed")->required();
    x->add_option("--input", ext.input)->required();
    x->add_option("--id-column", ext.id_column);
    x->add_option("--t", ext.t);
    x->add_option("--r", ext.r);
    x->add_option("--out", ext.out)->required();

    RegressFlags reg;
    auto* rg = app.add_subcommand("regress", "adaptive regression on the diffusion eigenbasis");
    rg->add_option("--input", reg.input)->required();
    rg->add_option("--id-column", reg.id_column);
    rg->add_option("--response", reg.response)->required();
    reg.kernel.attach(rg);
    rg->add_option("--folds", reg.folds);
    rg->add_option("--t", reg.t);
    rg->add_option("--r", reg.r);
    rg->add_option("--seed", reg.seed, "fold shuffling seed")->required();
    rg->add_option("--out-dir", reg.out_dir)->required();

    PredictFlags pred;
    auto* pr = app.add_subcommand("predict", "predict with a fitted regression model");
    pr->add_option("--model", pred.model, "model.json written by regress")->required();
    pr->add_option("--input", pred.input)->required();
    pr->add_option("--id-column", pred.id_column);
    pr->add_option("--out", pred.out)->required();

    PrototypeFlags proto;
    auto* pt = app.add_subcommand("prototype", "diffusion K-means prototypes of a component library");
    pt->add_option("--input", proto.input)->required();
    pt->add_option("--id-column", proto.id_column);
    pt->add_option("--reference-index", proto.reference_index);
    pt->add_option("--k", proto.k)->required();
    pt->add_option("--t", proto.t);
    pt->add_option("--r", proto.r);
    pt->add_option("--epsilon", proto.epsilon);
    pt->add_option("--seed", proto.seed)->required();
    pt->add_option("--out-dir", proto.out_dir)->required();

    FitMixtureFlags mix;
    auto* fm = app.add_subcommand("fit-mixture", "simplex-constrained mixture fit of observations");
    fm->add_option("--prototypes", mix.prototypes, "prototypes.csv written by prototype")->required();
    fm->add_option("--input", mix.input)->required();
    fm->add_option("--id-column", mix.id_column);
    fm->add_option("--noise", mix.noise, "noise sd per bin");
    fm->add_option("--out", mix.out)->required();

    BenchFlags bench;
    auto* bq = app.add_subcommand("bench-quantization", "diffusion K-means vs parameter-grid prototypes");
    bq->add_option("--input", bench.input, "component library csv (default: built-in degenerate library)");
    bq->add_option("--id-column", bench.id_column);
    bq->add_option("--reference-index", bench.reference_index);
    bq->add_option("--k", bench.k)->required();
    bq->add_option("--trials", bench.trials)->required();
    bq->add_option("--noise", bench.noise)->required();
    bq->add_option("--seed", bench.seed)->required();
    bq->add_option("--t", bench.t);
    bq->add_option("--r", bench.r);
    bq->add_option("--epsilon", bench.epsilon);
    bq->add_option("--components-per-trial", bench.components);
    bq->add_option("--out", bench.out)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        err << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitValidation;
    }

    try {
        if (g->parsed()) cmd_gen(gen);
        else if (e->parsed()) cmd_embed(emb);
        else if (x->parsed()) cmd_extend(ext);
        else if (rg->parsed()) cmd_regress(reg);
        else if (pr->parsed()) cmd_predict(pred);
        else if (pt->parsed()) cmd_prototype(proto);
        else if (fm->parsed()) cmd_fit_mixture(mix);
        else if (bq->parsed()) cmd_bench(bench);
    } catch (const NumericalError& ex) {
        err << "numerical error: " << ex.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}

} // namespace sca::cli
