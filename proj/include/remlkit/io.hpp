#ifndef REMLKIT_IO_HPP
#define REMLKIT_IO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "remlkit/model.hpp"
#include "remlkit/simulate.hpp"
#include "remlkit/solver.hpp"
#include "remlkit/verify.hpp"

namespace remlkit {

inline constexpr int kSchemaVersion = 1;

struct GroupSpec {
    std::string column;
    int count = 0;                     // number of balanced levels
    std::string assignment = "blocked";  // "blocked" | "cyclic"
};

struct SimulateConfig {
    int n = 0;
    Eigen::VectorXd tau;
    ThetaVector theta;
    std::vector<GroupSpec> groups;
    std::vector<std::string> covariates;  // synthetic N(0,1) fixed-effect columns
    std::optional<std::uint64_t> seed;
    int replicates = 0;
};

struct ModelConfig {
    std::string family = "variance_components";  // | "ar1" | "composite"
    std::vector<std::string> groups;             // grouping columns, one gamma each
};

struct RunConfig {
    std::string response = "y";
    std::vector<std::string> fixed_effects;
    bool intercept = true;
    ModelConfig model;
    SolverConfig solver;
    std::optional<ThetaVector> theta0;
    std::optional<SimulateConfig> sim;
};

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

ThetaVector theta_from_json(const nlohmann::json& j);
nlohmann::json theta_to_json(const ThetaVector& theta);

struct LoadedData {
    Dataset data;
    CovarianceModel model;
    std::vector<std::string> group_columns;
    std::vector<std::vector<std::string>> group_levels;  // order of first appearance
};

// CSV with a header row; response and fixed-effect columns numeric (finite),
// grouping columns categorical, expanded to indicator blocks in config order.
LoadedData parse_dataset(const std::string& path, const RunConfig& cfg);
LoadedData parse_dataset_text(const std::string& csv_text, const RunConfig& cfg);

// Synthetic design built from the simulate section: intercept + covariate
// columns for X, balanced grouping columns for the variance components.
struct Skeleton {
    Eigen::MatrixXd X;
    CovarianceModel model;
    std::vector<std::vector<std::string>> group_labels;  // per group column, n labels
    Eigen::MatrixXd covariate_values;                    // n x #covariates
};

Skeleton build_skeleton(const RunConfig& cfg, std::uint64_t seed);
SimSpec sim_spec_from_config(const RunConfig& cfg, std::uint64_t seed, int replicates);

// Dataset CSV as written by the simulate command; parse_dataset reads it back
// to an identical (y, X, Z).
std::string dataset_csv(const RunConfig& cfg, const Skeleton& skel, const Eigen::VectorXd& y);

nlohmann::json fit_report_json(const FitResult& result, Method method, double seconds);
nlohmann::json verify_report_json(const VerifyReport& rep, const ThetaVector& theta);
nlohmann::json mc_report_json(const MonteCarloReport& rep);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& M);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace remlkit

#endif
