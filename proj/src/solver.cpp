#include "remlkit/solver.hpp"

#include <cmath>
#include <limits>

namespace remlkit {

namespace {

constexpr double kRidgeBase = 1e-8;

InfoMatrix curvature_matrix(Method method, const Dataset& data, const CovarianceModel& model,
                            const ThetaVector& theta) {
    switch (method) {
        case Method::newton_raphson: return observed_information(data, model, theta);
        case Method::fisher_scoring: return fisher_information(data, model, theta);
        case Method::average_information: return average_information(data, model, theta);
    }
    throw Error("unknown solver method");
}

Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
    return v.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::newton_raphson: return "newton-raphson";
        case Method::fisher_scoring: return "fisher-scoring";
        case Method::average_information: return "average-information";
    }
    return "unknown";
}

std::optional<Method> method_from_name(const std::string& name) {
    if (name == "newton-raphson") return Method::newton_raphson;
    if (name == "fisher-scoring") return Method::fisher_scoring;
    if (name == "average-information") return Method::average_information;
    return std::nullopt;
}

const char* fit_status_name(FitStatus s) {
    switch (s) {
        case FitStatus::converged: return "converged";
        case FitStatus::max_iter: return "max_iter";
        case FitStatus::boundary: return "boundary";
        case FitStatus::singular_curvature: return "singular-curvature";
    }
    return "unknown";
}

Eigen::VectorXd newton_step(const InfoMatrix& curvature, const ScoreVector& score, double ridge) {
    const Eigen::MatrixXd& M = curvature.entries;
    const Eigen::VectorXd& S = score.values;
    if (M.rows() != M.cols() || M.rows() != S.size())
        throw DimensionMismatch("newton_step: curvature/score dimensions disagree");

    const Eigen::VectorXd d = M.diagonal();
    auto attempt = [&](double r) -> std::optional<Eigen::VectorXd> {
        Eigen::MatrixXd A = M;
        A.diagonal() += r * d;
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() != Eigen::Success) return std::nullopt;
        Eigen::VectorXd delta = llt.solve(S);
        if (!delta.allFinite()) return std::nullopt;
        return delta;
    };

    if (auto delta = attempt(ridge)) return *delta;
    const double base = ridge > 0.0 ? ridge : kRidgeBase;
    for (double r = base * 10.0; r <= base * 1e6; r *= 10.0)
        if (auto delta = attempt(r)) return *delta;
    throw SingularCurvature("newton_step: curvature not positive definite after ridge escalation");
}

Eigen::VectorXd standard_errors(const InfoMatrix& curvature) {
    const Eigen::MatrixXd& M = curvature.entries;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success)
        throw SingularCurvature("standard_errors: eigendecomposition failed");
    const Eigen::VectorXd ev = es.eigenvalues();
    const double cutoff = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() <= cutoff)
        throw SingularCurvature("standard_errors: curvature matrix is singular");
    const Eigen::MatrixXd inv =
        es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    return inv.diagonal().cwiseSqrt();
}

FitResult fit(const Dataset& data, const CovarianceModel& model, const ThetaVector& theta0,
              const SolverConfig& config) {
    require_theta_in_domain(model, theta0);
    if (config.max_iter < 1) throw Error("fit: max_iter must be >= 1");
    if (!(config.grad_tol > 0.0) || !(config.loglik_tol > 0.0))
        throw Error("fit: tolerances must be positive");

    const Eigen::VectorXd lo = theta_lower_bounds(model);
    const Eigen::VectorXd hi = theta_upper_bounds(model);

    FitResult out;
    ThetaVector theta = theta0;
    double ll = reml_loglik(data, model, theta).value;
    ScoreVector sc = score(data, model, theta);
    out.loglik_trace.push_back({0, ll, sc.inf_norm(), 0});

    bool converged = sc.inf_norm() < config.grad_tol;
    bool singular = false;

    for (int iter = 1; iter <= config.max_iter && !converged && !singular; ++iter) {
        Eigen::VectorXd delta;
        try {
            const InfoMatrix M = curvature_matrix(config.method, data, model, theta);
            delta = newton_step(M, sc, config.ridge0);
        } catch (const SingularCurvature&) {
            singular = true;
            break;
        }

        // halve alpha until the step is feasible and l_R does not decrease
        const Eigen::VectorXd base = theta.flatten();
        double alpha = 1.0;
        int halvings = 0;
        bool accepted = false;
        ThetaVector cand;
        double ll_cand = ll;
        while (halvings <= config.max_halvings) {
            cand = ThetaVector::from_flat(clamp_to_box(base + alpha * delta, lo, hi));
            bool ok = false;
            try {
                ll_cand = reml_loglik(data, model, cand).value;
                ok = std::isfinite(ll_cand) && ll_cand >= ll;
            } catch (const Error&) {
                ok = false;
            }
            if (ok) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
            ++halvings;
        }

        if (!accepted) {
            // no improving step: the likelihood has stalled, which satisfies
            // the relative-change criterion by construction
            out.loglik_trace.push_back({iter, ll, sc.inf_norm(), halvings});
            converged = true;
            break;
        }

        const double ll_prev = ll;
        theta = cand;
        ll = ll_cand;
        sc = score(data, model, theta);
        out.loglik_trace.push_back({iter, ll, sc.inf_norm(), halvings});

        if (sc.inf_norm() < config.grad_tol ||
            std::abs(ll - ll_prev) < config.loglik_tol * (1.0 + std::abs(ll)))
            converged = true;
    }

    out.theta_hat = theta;
    out.curvature = curvature_matrix(config.method, data, model, theta);

    if (singular) {
        out.status = FitStatus::singular_curvature;
        return out;
    }
    if (!converged) {
        out.status = FitStatus::max_iter;
        return out;
    }

    // boundary detection on the strict box
    const Eigen::VectorXd t = theta.flatten();
    std::vector<int> at_bound;
    for (int k = 0; k < t.size(); ++k) {
        const double scale = std::max(1.0, std::abs(t(k)));
        if (t(k) - lo(k) <= 1e-10 * scale ||
            (std::isfinite(hi(k)) && hi(k) - t(k) <= 1e-10 * scale))
            at_bound.push_back(k);
    }
    out.status = at_bound.empty() ? FitStatus::converged : FitStatus::boundary;

    try {
        Eigen::VectorXd se = standard_errors(out.curvature);
        for (int k : at_bound) se(k) = std::numeric_limits<double>::quiet_NaN();
        out.std_errors = se;
    } catch (const SingularCurvature&) {
        out.std_errors = std::nullopt;
    }
    return out;
}

}  // namespace remlkit
