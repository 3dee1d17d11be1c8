#include "remlkit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "remlkit/information.hpp"
#include "remlkit/likelihood.hpp"
#include "remlkit/projection.hpp"
#include "remlkit/rng.hpp"

namespace remlkit {

namespace {

CheckResult make_check(const std::string& name, double residual, double tol,
                       const std::string& note = "") {
    CheckResult c;
    c.name = name;
    c.residual = residual;
    c.tolerance = tol;
    c.status = (std::isfinite(residual) && residual <= tol) ? "pass" : "fail";
    c.note = note;
    return c;
}

CheckResult skip_check(const std::string& name, double tol, const std::string& note) {
    CheckResult c;
    c.name = name;
    c.status = "skip";
    c.tolerance = tol;
    c.note = note;
    return c;
}

double rel_gap(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(a)); }

}  // namespace

bool VerifyReport::all_pass() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const CheckResult& c) { return c.status == "fail"; });
}

VerifyReport run_identity_checks(const Dataset& data, const CovarianceModel& model,
                                 const ThetaVector& theta, std::uint64_t seed) {
    VerifyReport rep;
    require_theta_in_domain(model, theta);

    if (theta.sigma2 <= 1e-8)
        rep.warnings.push_back("sigma2 is near its floor; information entries are badly scaled");
    for (int i = 0; i < model.num_blocks(); ++i)
        if (theta.kappa(i) <= 1e-6)
            rep.warnings.push_back("gamma_" + std::to_string(i) + " is near its floor");
    if (model.has_ar1() && std::abs(theta.kappa(model.m() - 1)) >= 1.0 - 1e-3)
        rep.warnings.push_back("phi is near the unit circle; H is badly conditioned");

    const Eigen::MatrixXd H = model.cov_matrix(theta.kappa);
    const ProjectionContext ctx(data, H);
    CounterRng rng(seed, 0x76657269ULL);

    // PX = 0
    {
        double worst = 0.0;
        for (int j = 0; j < data.p; ++j) {
            const Eigen::VectorXd x = data.X.col(j);
            worst = std::max(worst,
                             ctx.apply_P(x).cwiseAbs().maxCoeff() / x.cwiseAbs().maxCoeff());
        }
        rep.checks.push_back(make_check("px_zero", worst, 1e-10));
    }

    // PHP = P on random vectors
    {
        double worst = 0.0;
        for (int t = 0; t < 5; ++t) {
            const Eigen::VectorXd v = rng.normal_vector(data.n);
            const Eigen::VectorXd Pv = ctx.apply_P(v);
            const Eigen::VectorXd PHPv = ctx.apply_P(Eigen::VectorXd(H * Pv));
            worst = std::max(worst, (PHPv - Pv).cwiseAbs().maxCoeff() /
                                        (Pv.cwiseAbs().maxCoeff() + 1e-300));
        }
        rep.checks.push_back(make_check("php_equals_p", worst, 1e-10));
    }

    // tr(PH) = n - nu
    rep.checks.push_back(make_check(
        "trace_ph", std::abs(ctx.trace_P_times(H) - (data.n - data.nu)), 1e-9));

    // analytic score vs central differences
    try {
        const ScoreVector s = score(data, model, theta);
        const ScoreVector fd = fd_score(data, model, theta, 1e-5);
        double worst = 0.0;
        for (int k = 0; k < s.values.size(); ++k)
            worst = std::max(worst, rel_gap(s.values(k), fd.values(k)));
        rep.checks.push_back(make_check("score_vs_fd", worst, 1e-6));
    } catch (const InfeasibleParams& e) {
        rep.checks.push_back(skip_check("score_vs_fd", 1e-6, e.what()));
    }

    // observed information vs negated finite-difference Hessian
    try {
        const InfoMatrix io = observed_information(data, model, theta);
        const Eigen::MatrixXd fd = fd_neg_hessian(data, model, theta, 5e-4);
        double worst = 0.0;
        for (int i = 0; i < io.entries.rows(); ++i)
            for (int j = 0; j < io.entries.cols(); ++j)
                worst = std::max(worst, rel_gap(io.entries(i, j), fd(i, j)));
        rep.checks.push_back(make_check("observed_vs_fd_hessian", worst, 1e-4));
    } catch (const InfeasibleParams& e) {
        rep.checks.push_back(skip_check("observed_vs_fd_hessian", 1e-4, e.what()));
    }

    // splitting identity (I_O + I)/2 = I_A + I_Z
    {
        const SplittingReport sp = check_splitting(data, model, theta);
        rep.checks.push_back(make_check("splitting_identity", sp.max_rel_residual, 1e-10));
    }

    // Py = R^-1 e through the mixed model equations
    bool gamma_at_zero = false;
    for (int i = 0; i < model.num_blocks(); ++i)
        if (theta.kappa(i) < 1e-12) gamma_at_zero = true;
    if (gamma_at_zero) {
        rep.checks.push_back(
            skip_check("mme_py_equivalence", 1e-9, "a gamma at zero makes G singular"));
    } else if (data.b >= 1 && model.num_random_effects() == data.b) {
        const Eigen::VectorXd via_mme =
            apply_P_via_mme(data, model.residual_matrix(theta.kappa),
                            model.random_effect_cov(theta.kappa), data.y);
        const Eigen::VectorXd direct = ctx.apply_P(data.y);
        const double res = (via_mme - direct).cwiseAbs().maxCoeff() /
                           (direct.cwiseAbs().maxCoeff() + 1e-300);
        rep.checks.push_back(make_check("mme_py_equivalence", res, 1e-9));
    } else {
        rep.checks.push_back(
            skip_check("mme_py_equivalence", 1e-9, "structure has no random effects"));
    }

    return rep;
}

}  // namespace remlkit
