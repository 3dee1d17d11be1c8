#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "remlkit/io.hpp"
#include "remlkit/likelihood.hpp"
#include "remlkit/solver.hpp"
#include "remlkit/verify.hpp"

namespace {

// exit codes: 0 success, 2 config, 3 data, 4 non-convergence (max_iter),
// 5 numerical failure, 6 boundary estimate, 7 output I/O failure
enum ExitCode {
    kOk = 0,
    kConfigError = 2,
    kDataError = 3,
    kNoConvergence = 4,
    kNumericalError = 5,
    kBoundary = 6,
    kOutputError = 7,
};

struct CommonArgs {
    std::string data_path;
    std::string config_path;
    std::string out_path;
    bool verbose = false;
};

remlkit::ThetaVector parse_theta_list(const std::string& csv) {
    std::vector<double> vals;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            vals.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw remlkit::ConfigError("--theta: cannot parse '" + tok + "'");
        }
    }
    if (vals.empty()) throw remlkit::ConfigError("--theta: empty list");
    remlkit::ThetaVector t;
    t.sigma2 = vals[0];
    t.kappa = Eigen::Map<const Eigen::VectorXd>(vals.data() + 1,
                                                static_cast<long>(vals.size()) - 1);
    return t;
}

void write_report(const std::string& path, const nlohmann::json& j) {
    try {
        remlkit::write_text_file(path, j.dump(2) + "\n");
    } catch (const remlkit::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::exit(kOutputError);
    }
}

remlkit::ThetaVector default_theta0(const remlkit::Dataset& data,
                                    const remlkit::CovarianceModel& model) {
    const Eigen::VectorXd centered = data.y.array() - data.y.mean();
    const double var_y = centered.squaredNorm() / std::max(1, data.n - 1);
    remlkit::ThetaVector t;
    t.sigma2 = std::max(0.5 * var_y, 1e-4);
    t.kappa.resize(model.m());
    for (int i = 0; i < model.num_blocks(); ++i) t.kappa(i) = 0.5;
    if (model.has_ar1()) t.kappa(model.m() - 1) = 0.0;
    return t;
}

int run_fit(const CommonArgs& args, const std::string& method_override) {
    remlkit::RunConfig cfg = remlkit::load_config(args.config_path);
    if (!method_override.empty()) {
        const auto m = remlkit::method_from_name(method_override);
        if (!m) throw remlkit::ConfigError("unknown solver method '" + method_override + "'");
        cfg.solver.method = *m;
    }

    const remlkit::LoadedData loaded = remlkit::parse_dataset(args.data_path, cfg);
    const remlkit::ThetaVector theta0 =
        cfg.theta0 ? *cfg.theta0 : default_theta0(loaded.data, loaded.model);

    const auto t0 = std::chrono::steady_clock::now();
    const remlkit::FitResult result =
        remlkit::fit(loaded.data, loaded.model, theta0, cfg.solver);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_report(args.out_path, remlkit::fit_report_json(result, cfg.solver.method, secs));
    if (args.verbose) {
        std::cerr << "status: " << remlkit::fit_status_name(result.status) << ", iterations: "
                  << result.loglik_trace.back().iter << ", loglik: "
                  << result.loglik_trace.back().loglik << "\n";
    }

    switch (result.status) {
        case remlkit::FitStatus::converged: return kOk;
        case remlkit::FitStatus::max_iter: return kNoConvergence;
        case remlkit::FitStatus::boundary: return kBoundary;
        case remlkit::FitStatus::singular_curvature: return kNumericalError;
    }
    return kNumericalError;
}

int run_verify(const CommonArgs& args, const std::string& theta_csv,
               const std::string& from_fit, std::uint64_t seed) {
    remlkit::RunConfig cfg = remlkit::load_config(args.config_path);
    const remlkit::LoadedData loaded = remlkit::parse_dataset(args.data_path, cfg);

    remlkit::ThetaVector theta;
    if (!theta_csv.empty() && !from_fit.empty())
        throw remlkit::ConfigError("give either --theta or --from-fit, not both");
    if (!theta_csv.empty()) {
        theta = parse_theta_list(theta_csv);
    } else if (!from_fit.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(remlkit::read_text_file(from_fit));
        } catch (const nlohmann::json::exception& e) {
            throw remlkit::ConfigError(std::string("--from-fit: ") + e.what());
        }
        if (!j.contains("theta_hat")) throw remlkit::ConfigError("--from-fit: no theta_hat");
        theta = remlkit::theta_from_json(j.at("theta_hat"));
    } else {
        throw remlkit::ConfigError("verify needs --theta or --from-fit");
    }
    if (theta.kappa.size() != loaded.model.m())
        throw remlkit::ConfigError("theta has wrong number of structure parameters");

    const remlkit::VerifyReport rep =
        remlkit::run_identity_checks(loaded.data, loaded.model, theta, seed);
    write_report(args.out_path, remlkit::verify_report_json(rep, theta));

    for (const auto& c : rep.checks)
        std::cerr << "[" << c.status << "] " << c.name
                  << (c.status == "skip" ? " (" + c.note + ")" : "") << "\n";
    return rep.all_pass() ? kOk : kNumericalError;
}

int run_simulate(const CommonArgs& args, std::optional<std::uint64_t> seed_flag,
                 int replicates_flag, const std::string& datasets_dir) {
    remlkit::RunConfig cfg = remlkit::load_config(args.config_path);
    if (!cfg.sim) throw remlkit::ConfigError("config has no simulate section");

    std::optional<std::uint64_t> seed = seed_flag ? seed_flag : cfg.sim->seed;
    if (!seed)
        throw remlkit::ConfigError("simulate needs a seed (config simulate.seed or --seed)");
    const int replicates = replicates_flag > 0 ? replicates_flag : cfg.sim->replicates;
    if (replicates < 1) throw remlkit::ConfigError("simulate needs replicates >= 1");

    if (!datasets_dir.empty()) {
        const remlkit::Skeleton skel = remlkit::build_skeleton(cfg, *seed);
        const remlkit::SimSpec spec =
            remlkit::sim_spec_from_config(cfg, *seed, replicates);
        std::filesystem::create_directories(datasets_dir);
        for (int r = 0; r < replicates; ++r) {
            const Eigen::VectorXd y = remlkit::sample_dataset(spec, r);
            char name[64];
            std::snprintf(name, sizeof(name), "replicate_%05d.csv", r);
            remlkit::write_text_file((std::filesystem::path(datasets_dir) / name).string(),
                                     remlkit::dataset_csv(cfg, skel, y));
        }
        if (args.verbose)
            std::cerr << "wrote " << replicates << " dataset(s) to " << datasets_dir << "\n";
        return kOk;
    }

    const remlkit::SimSpec spec = remlkit::sim_spec_from_config(cfg, *seed, replicates);
    const remlkit::MonteCarloReport rep = remlkit::monte_carlo_information(spec);
    write_report(args.out_path, remlkit::mc_report_json(rep));
    if (args.verbose) std::cerr << "max |z| = " << rep.max_abs_z() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"REML variance-parameter estimation for linear mixed models"};
    app.require_subcommand(1);

    CommonArgs fit_args, verify_args, sim_args;
    std::string method_override, theta_csv, from_fit, datasets_dir;
    std::uint64_t verify_seed = 42;
    std::optional<std::uint64_t> sim_seed;
    int sim_replicates = 0;

    auto* fit = app.add_subcommand("fit", "estimate variance parameters from a dataset");
    fit->add_option("--data", fit_args.data_path, "dataset CSV")->required();
    fit->add_option("--config", fit_args.config_path, "config JSON")->required();
    fit->add_option("--method", method_override,
                    "newton-raphson | fisher-scoring | average-information");
    fit->add_option("--out", fit_args.out_path, "report path")->default_val("fit_report.json");
    fit->add_flag("--verbose", fit_args.verbose);

    auto* verify = app.add_subcommand("verify", "run the identity checks at a given theta");
    verify->add_option("--data", verify_args.data_path, "dataset CSV")->required();
    verify->add_option("--config", verify_args.config_path, "config JSON")->required();
    verify->add_option("--theta", theta_csv, "comma-separated sigma2,kappa_1,..,kappa_m");
    verify->add_option("--from-fit", from_fit, "read theta_hat from a fit report");
    verify->add_option("--seed", verify_seed, "seed for random probe vectors");
    verify->add_option("--out", verify_args.out_path, "report path")
        ->default_val("verify_report.json");
    verify->add_flag("--verbose", verify_args.verbose);

    auto* simulate = app.add_subcommand("simulate", "draw replicates / Monte Carlo report");
    simulate->add_option("--config", sim_args.config_path, "config JSON")->required();
    simulate->add_option("--seed", sim_seed, "stream seed (mandatory here or in config)");
    simulate->add_option("--replicates", sim_replicates, "number of replicates");
    simulate->add_option("--write-datasets", datasets_dir,
                         "write replicate CSVs to this directory instead of a report");
    simulate->add_option("--out", sim_args.out_path, "report path")
        ->default_val("mc_report.json");
    simulate->add_flag("--verbose", sim_args.verbose);

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) return run_fit(fit_args, method_override);
        if (verify->parsed()) return run_verify(verify_args, theta_csv, from_fit, verify_seed);
        if (simulate->parsed())
            return run_simulate(sim_args, sim_seed, sim_replicates, datasets_dir);
    } catch (const remlkit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const remlkit::StatisticalFloor& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const remlkit::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const remlkit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
