#include "remlkit/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "remlkit/rng.hpp"

namespace remlkit {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) cells.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_numeric(const std::string& cell, int row, const std::string& column) {
    char* end = nullptr;
    const std::string t = trim(cell);
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
        std::ostringstream os;
        os << "non-numeric value '" << cell << "' at data row " << row << ", column '" << column
           << "'";
        throw NonNumericValue(os.str());
    }
    return v;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CovarianceModel model_from_blocks(const ModelConfig& mc, int n,
                                  std::vector<Eigen::MatrixXd> blocks) {
    if (mc.family == "variance_components") return CovarianceModel::variance_components(n, std::move(blocks));
    if (mc.family == "ar1") {
        if (!blocks.empty())
            throw ConfigError("model family 'ar1' takes no grouping columns");
        return CovarianceModel::ar1_residual(n);
    }
    if (mc.family == "composite") return CovarianceModel::composite(n, std::move(blocks));
    throw ConfigError("unknown model family '" + mc.family + "'");
}

// reserved stream ids; replicate streams are 0..N-1
constexpr std::uint64_t kCovariateStreamBase = 1ULL << 32;

}  // namespace

RunConfig config_from_json(const json& j) {
    try {
        RunConfig cfg;
        cfg.response = j.value("response", std::string("y"));
        cfg.intercept = j.value("intercept", true);
        if (j.contains("fixed_effects"))
            cfg.fixed_effects = j.at("fixed_effects").get<std::vector<std::string>>();

        if (j.contains("model")) {
            const auto& jm = j.at("model");
            cfg.model.family = jm.value("family", std::string("variance_components"));
            if (jm.contains("groups"))
                cfg.model.groups = jm.at("groups").get<std::vector<std::string>>();
        }
        if (cfg.model.family != "variance_components" && cfg.model.family != "ar1" &&
            cfg.model.family != "composite")
            throw ConfigError("unknown model family '" + cfg.model.family + "'");
        if (cfg.model.family == "composite" && cfg.model.groups.empty())
            throw ConfigError("composite model needs at least one grouping column");
        if (cfg.model.family == "ar1" && !cfg.model.groups.empty())
            throw ConfigError("model family 'ar1' takes no grouping columns");

        if (j.contains("solver")) {
            const auto& js = j.at("solver");
            if (js.contains("method")) {
                const auto name = js.at("method").get<std::string>();
                const auto m = method_from_name(name);
                if (!m) throw ConfigError("unknown solver method '" + name + "'");
                cfg.solver.method = *m;
            }
            cfg.solver.grad_tol = js.value("grad_tol", cfg.solver.grad_tol);
            cfg.solver.loglik_tol = js.value("loglik_tol", cfg.solver.loglik_tol);
            cfg.solver.max_iter = js.value("max_iter", cfg.solver.max_iter);
            cfg.solver.max_halvings = js.value("max_halvings", cfg.solver.max_halvings);
            cfg.solver.ridge0 = js.value("ridge0", cfg.solver.ridge0);
            if (js.contains("theta0")) cfg.theta0 = theta_from_json(js.at("theta0"));
        }

        if (j.contains("simulate")) {
            SimulateConfig sim;
            const auto& js = j.at("simulate");
            sim.n = js.value("n", 0);
            if (sim.n < 2) throw ConfigError("simulate.n must be >= 2");
            if (!js.contains("theta")) throw ConfigError("simulate.theta is required");
            sim.theta = theta_from_json(js.at("theta"));
            if (!js.contains("tau")) throw ConfigError("simulate.tau is required");
            const auto tau = js.at("tau").get<std::vector<double>>();
            sim.tau = Eigen::Map<const Eigen::VectorXd>(tau.data(),
                                                        static_cast<long>(tau.size()));
            if (js.contains("seed")) sim.seed = js.at("seed").get<std::uint64_t>();
            sim.replicates = js.value("replicates", 0);
            if (js.contains("covariates"))
                sim.covariates = js.at("covariates").get<std::vector<std::string>>();
            if (js.contains("groups")) {
                for (const auto& jg : js.at("groups")) {
                    GroupSpec g;
                    g.column = jg.at("column").get<std::string>();
                    g.count = jg.at("count").get<int>();
                    g.assignment = jg.value("assignment", std::string("blocked"));
                    if (g.count < 1) throw ConfigError("group count must be >= 1");
                    if (g.assignment != "blocked" && g.assignment != "cyclic")
                        throw ConfigError("group assignment must be 'blocked' or 'cyclic'");
                    sim.groups.push_back(std::move(g));
                }
            }
            cfg.sim = std::move(sim);
        }
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

RunConfig load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

ThetaVector theta_from_json(const json& j) {
    try {
        ThetaVector t;
        t.sigma2 = j.at("sigma2").get<double>();
        if (j.contains("kappa")) {
            const auto k = j.at("kappa").get<std::vector<double>>();
            t.kappa = Eigen::Map<const Eigen::VectorXd>(k.data(), static_cast<long>(k.size()));
        } else {
            t.kappa.resize(0);
        }
        return t;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("theta: ") + e.what());
    }
}

nlohmann::json theta_to_json(const ThetaVector& theta) {
    json j;
    j["sigma2"] = theta.sigma2;
    j["kappa"] = std::vector<double>(theta.kappa.data(), theta.kappa.data() + theta.kappa.size());
    return j;
}

LoadedData parse_dataset_text(const std::string& csv_text, const RunConfig& cfg) {
    std::vector<std::string> lines;
    {
        std::istringstream is(csv_text);
        std::string line;
        while (std::getline(is, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!trim(line).empty()) lines.push_back(line);
        }
    }
    if (lines.size() < 2) throw DataError("dataset: needs a header row and at least one data row");

    const std::vector<std::string> header = split_csv_line(lines[0]);
    auto col_index = [&](const std::string& name) {
        for (size_t c = 0; c < header.size(); ++c)
            if (header[c] == name) return static_cast<int>(c);
        throw MissingColumn("dataset: column '" + name + "' not found in header");
    };

    const int resp_col = col_index(cfg.response);
    std::vector<int> fixed_cols;
    for (const auto& name : cfg.fixed_effects) fixed_cols.push_back(col_index(name));
    std::vector<int> group_cols;
    for (const auto& name : cfg.model.groups) group_cols.push_back(col_index(name));

    const int n = static_cast<int>(lines.size()) - 1;
    Eigen::VectorXd y(n);
    const int p = (cfg.intercept ? 1 : 0) + static_cast<int>(fixed_cols.size());
    if (p == 0) throw ConfigError("no fixed effects: enable the intercept or list columns");
    Eigen::MatrixXd X(n, p);
    std::vector<std::vector<std::string>> group_values(group_cols.size());

    for (int r = 0; r < n; ++r) {
        const std::vector<std::string> cells = split_csv_line(lines[static_cast<size_t>(r) + 1]);
        if (cells.size() != header.size()) {
            std::ostringstream os;
            os << "dataset: row " << r + 1 << " has " << cells.size() << " cells, header has "
               << header.size();
            throw DataError(os.str());
        }
        y(r) = parse_numeric(cells[static_cast<size_t>(resp_col)], r + 1, cfg.response);
        int c = 0;
        if (cfg.intercept) X(r, c++) = 1.0;
        for (size_t f = 0; f < fixed_cols.size(); ++f)
            X(r, c++) = parse_numeric(cells[static_cast<size_t>(fixed_cols[f])], r + 1,
                                      cfg.fixed_effects[f]);
        for (size_t g = 0; g < group_cols.size(); ++g)
            group_values[g].push_back(cells[static_cast<size_t>(group_cols[g])]);
    }

    // indicator expansion, levels in order of first appearance
    std::vector<Eigen::MatrixXd> blocks;
    std::vector<std::vector<std::string>> levels(group_cols.size());
    for (size_t g = 0; g < group_cols.size(); ++g) {
        std::map<std::string, int> index;
        std::vector<int> assign(static_cast<size_t>(n));
        for (int r = 0; r < n; ++r) {
            const std::string& key = group_values[g][static_cast<size_t>(r)];
            auto it = index.find(key);
            if (it == index.end()) {
                it = index.emplace(key, static_cast<int>(levels[g].size())).first;
                levels[g].push_back(key);
            }
            assign[static_cast<size_t>(r)] = it->second;
        }
        Eigen::MatrixXd Zg = Eigen::MatrixXd::Zero(n, static_cast<int>(levels[g].size()));
        for (int r = 0; r < n; ++r) Zg(r, assign[static_cast<size_t>(r)]) = 1.0;
        blocks.push_back(std::move(Zg));
    }

    CovarianceModel model = model_from_blocks(cfg.model, n, blocks);
    Eigen::MatrixXd Z = model.combined_Z();
    return LoadedData{make_dataset(std::move(y), std::move(X), std::move(Z)), std::move(model),
                      cfg.model.groups, std::move(levels)};
}

LoadedData parse_dataset(const std::string& path, const RunConfig& cfg) {
    return parse_dataset_text(read_text_file(path), cfg);
}

Skeleton build_skeleton(const RunConfig& cfg, std::uint64_t seed) {
    if (!cfg.sim) throw ConfigError("config has no simulate section");
    const SimulateConfig& sim = *cfg.sim;
    const int n = sim.n;

    // grouping columns must match the model's columns, in order
    if (sim.groups.size() != cfg.model.groups.size())
        throw ConfigError("simulate.groups must match model.groups");
    for (size_t g = 0; g < sim.groups.size(); ++g)
        if (sim.groups[g].column != cfg.model.groups[g])
            throw ConfigError("simulate.groups must match model.groups");

    std::vector<Eigen::MatrixXd> blocks;
    std::vector<std::vector<std::string>> labels;
    for (const auto& gs : sim.groups) {
        if (n % gs.count != 0)
            throw ConfigError("group '" + gs.column + "': count must divide n");
        const int size = n / gs.count;
        Eigen::MatrixXd Zg = Eigen::MatrixXd::Zero(n, gs.count);
        std::vector<std::string> lab(static_cast<size_t>(n));
        for (int r = 0; r < n; ++r) {
            const int level = gs.assignment == "blocked" ? r / size : r % gs.count;
            Zg(r, level) = 1.0;
            lab[static_cast<size_t>(r)] = gs.column + std::to_string(level + 1);
        }
        blocks.push_back(std::move(Zg));
        labels.push_back(std::move(lab));
    }

    const int ncov = static_cast<int>(sim.covariates.size());
    Eigen::MatrixXd cov(n, ncov);
    for (int c = 0; c < ncov; ++c) {
        CounterRng rng(seed, kCovariateStreamBase + static_cast<std::uint64_t>(c));
        cov.col(c) = rng.normal_vector(n);
    }

    const int p = (cfg.intercept ? 1 : 0) + ncov;
    if (p == 0) throw ConfigError("no fixed effects: enable the intercept or list covariates");
    Eigen::MatrixXd X(n, p);
    int c = 0;
    if (cfg.intercept) X.col(c++) = Eigen::VectorXd::Ones(n);
    for (int k = 0; k < ncov; ++k) X.col(c++) = cov.col(k);
    if (sim.tau.size() != p)
        throw ConfigError("simulate.tau length must equal the number of fixed effects");

    CovarianceModel model = model_from_blocks(cfg.model, n, blocks);
    return Skeleton{std::move(X), std::move(model), std::move(labels), std::move(cov)};
}

SimSpec sim_spec_from_config(const RunConfig& cfg, std::uint64_t seed, int replicates) {
    Skeleton skel = build_skeleton(cfg, seed);
    return make_sim_spec(std::move(skel.X), std::move(skel.model), cfg.sim->theta, cfg.sim->tau,
                         seed, replicates);
}

std::string dataset_csv(const RunConfig& cfg, const Skeleton& skel, const Eigen::VectorXd& y) {
    const SimulateConfig& sim = *cfg.sim;
    std::ostringstream os;
    for (size_t g = 0; g < sim.groups.size(); ++g) os << sim.groups[g].column << ",";
    for (const auto& name : sim.covariates) os << name << ",";
    os << cfg.response << "\n";
    for (int r = 0; r < y.size(); ++r) {
        for (size_t g = 0; g < skel.group_labels.size(); ++g)
            os << skel.group_labels[g][static_cast<size_t>(r)] << ",";
        for (int c = 0; c < skel.covariate_values.cols(); ++c)
            os << fmt_double(skel.covariate_values(r, c)) << ",";
        os << fmt_double(y(r)) << "\n";
    }
    return os.str();
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (int i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

nlohmann::json fit_report_json(const FitResult& result, Method method, double seconds) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "fit";
    j["method"] = method_name(method);
    j["status"] = fit_status_name(result.status);
    j["theta_hat"] = theta_to_json(result.theta_hat);
    if (result.std_errors)
        j["std_errors"] = vector_to_json(*result.std_errors);
    else
        j["std_errors"] = nullptr;
    json trace = json::array();
    for (const auto& it : result.loglik_trace) {
        trace.push_back({{"iter", it.iter},
                         {"loglik", it.loglik},
                         {"score_inf_norm", it.score_inf_norm},
                         {"halvings", it.halvings}});
    }
    j["loglik_trace"] = std::move(trace);
    j["loglik"] = result.loglik_trace.empty() ? 0.0 : result.loglik_trace.back().loglik;
    j["curvature_kind"] = info_kind_name(result.curvature.kind);
    j["curvature"] = matrix_to_json(result.curvature.entries);
    j["timing_seconds"] = seconds;
    return j;
}

nlohmann::json verify_report_json(const VerifyReport& rep, const ThetaVector& theta) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "verify";
    j["theta"] = theta_to_json(theta);
    json checks = json::array();
    for (const auto& c : rep.checks) {
        json jc;
        jc["name"] = c.name;
        jc["status"] = c.status;
        jc["residual"] = c.residual;
        jc["tolerance"] = c.tolerance;
        jc["note"] = c.note;
        checks.push_back(std::move(jc));
    }
    j["checks"] = std::move(checks);
    j["warnings"] = rep.warnings;
    j["all_pass"] = rep.all_pass();
    return j;
}

nlohmann::json mc_report_json(const MonteCarloReport& rep) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "simulate";
    j["replicates"] = rep.replicates;
    j["seed"] = rep.seed;
    j["theta_true"] = theta_to_json(rep.theta_true);
    j["fisher"] = matrix_to_json(rep.fisher);
    j["observed"] = {{"mean", matrix_to_json(rep.mean_observed)},
                     {"se", matrix_to_json(rep.se_observed)},
                     {"z", matrix_to_json(rep.z_observed)}};
    j["average"] = {{"mean", matrix_to_json(rep.mean_average)},
                    {"se", matrix_to_json(rep.se_average)},
                    {"z", matrix_to_json(rep.z_average)}};
    j["remainder"] = {{"mean", matrix_to_json(rep.mean_remainder)},
                      {"se", matrix_to_json(rep.se_remainder)},
                      {"z", matrix_to_json(rep.z_remainder)}};
    j["max_abs_z"] = rep.max_abs_z();
    return j;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path + "' for writing");
    f << content;
    if (!f.good()) throw DataError("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace remlkit
