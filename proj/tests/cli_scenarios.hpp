#pragma once

#include "cli.hpp"
#include "test_support.hpp"

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace sca::test {

struct CliResult {
    int status = 0;
    std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream err;
    const int status = cli::run(args, err);
    return {status, err.str()};
}

/// Every regular file under `dir`, keyed by relative path.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
        if (entry.is_regular_file())
            files[std::filesystem::relative(entry.path(), dir).string()] = read_file(entry.path());
    return files;
}

/// One invocation of each subcommand, chained so later steps consume
/// earlier outputs. Paths are inside `dir`.
inline std::vector<std::vector<std::string>> pipeline_commands(const std::filesystem::path& dir) {
    auto p = [&](const std::string& name) { return (dir / name).string(); };
    return {
        {"gen", "--kind", "swiss-roll", "--n", "150", "--seed", "3", "--noise", "0.05", "--response-noise", "0.05",
         "--out", p("roll.csv")},
        {"gen", "--kind", "noisy-circle", "--n", "20", "--seed", "4", "--noise", "0.05", "--out", p("query.csv")},
        {"gen", "--kind", "degenerate-components", "--n", "40", "--seed", "5", "--noise", "0.001", "--bins", "40",
         "--out", p("lib.csv")},
        {"embed", "--input", p("roll.csv"), "--id-column", "id", "--ignore-column", "y", "--t", "2", "--r", "5", "--out-dir", p("embed")},
        {"extend", "--model", p("embed"), "--input", p("roll.csv"), "--id-column", "id", "--out", p("extended.csv")},
        {"regress", "--input", p("roll.csv"), "--id-column", "id", "--response", "y", "--r", "20", "--seed", "9",
         "--out-dir", p("regress")},
        {"predict", "--model", p("regress/model.json"), "--input", p("roll.csv"), "--id-column", "id", "--out",
         p("predicted.csv")},
        {"prototype", "--input", p("lib.csv"), "--id-column", "id", "--k", "6", "--r", "10", "--seed", "2",
         "--out-dir", p("proto")},
        {"fit-mixture", "--prototypes", p("proto/prototypes.csv"), "--input", p("lib.csv"), "--id-column", "id",
         "--noise", "0.01", "--out", p("mixture.csv")},
        {"bench-quantization", "--k", "6", "--trials", "15", "--noise", "0.01", "--seed", "8", "--r", "10", "--out",
         p("bench.json")},
    };
}

/// Runs the pipeline twice in `dir` and reports every command that failed
/// and every file whose bytes changed between the runs.
inline std::vector<std::string> determinism_problems(const std::filesystem::path& dir) {
    std::vector<std::string> problems;
    std::map<std::string, std::string> first;
    for (int round = 0; round < 2; ++round) {
        for (const auto& cmd : pipeline_commands(dir)) {
            const CliResult r = run_cli(cmd);
            if (r.status != 0) problems.push_back(cmd[0] + " exited " + std::to_string(r.status) + ": " + r.err);
        }
        if (round == 0) first = snapshot(dir);
    }
    const auto second = snapshot(dir);
    if (first.size() != second.size()) problems.push_back("file set changed between runs");
    for (const auto& [name, bytes] : first) {
        const auto it = second.find(name);
        if (it == second.end() || it->second != bytes) problems.push_back(name + " differs between runs");
    }
    return problems;
}

} // namespace sca::test
