#include "remlkit/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace remlkit {

namespace {

// Steps for central differences, shrunk if needed to keep theta +- h e_k in
// the domain. Throws when a coordinate sits too close to its domain edge for
// any usable step.
Eigen::VectorXd fd_steps(const CovarianceModel& model, const ThetaVector& theta, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidStep("finite-difference step must be > 0");
    const Eigen::VectorXd t = theta.flatten();
    Eigen::VectorXd steps(t.size());
    for (int k = 0; k < t.size(); ++k) {
        double hk = h * std::max(1.0, std::abs(t(k)));
        auto bump = [&](double delta) {
            Eigen::VectorXd v = t;
            v(k) += delta;
            return ThetaVector::from_flat(v);
        };
        // shrink toward the domain edge; give up below 1e-3 of the nominal step
        const double h_min = 1e-3 * hk;
        while (!(theta_in_domain(model, bump(hk)) && theta_in_domain(model, bump(-hk)))) {
            hk *= 0.5;
            if (hk < h_min) {
                std::ostringstream os;
                os << "theta_" << k << " too close to the domain boundary for central differences";
                throw InfeasibleParams(os.str());
            }
        }
        steps(k) = hk;
    }
    return steps;
}

}  // namespace

LikelihoodEval reml_loglik_at(const Dataset& data,
                              std::shared_ptr<const ProjectionContext> ctx,
                              const ThetaVector& theta) {
    if (!(theta.sigma2 > 0.0)) throw InfeasibleParams("reml_loglik: sigma2 must be positive");
    LikelihoodEval out;
    out.ctx = std::move(ctx);
    out.theta = theta;
    const Eigen::VectorXd xi = out.ctx->apply_P(data.y);
    out.yPy = data.y.dot(xi);
    const double nmn = out.ctx->n() - out.ctx->nu();
    out.value = -0.5 * nmn * std::log(2.0 * std::numbers::pi) -
                0.5 * (nmn * std::log(theta.sigma2) + out.ctx->logdet_H() +
                       out.ctx->logdet_XtHinvX() + out.yPy / theta.sigma2);
    return out;
}

LikelihoodEval reml_loglik(const Dataset& data, const CovarianceModel& model,
                           const ThetaVector& theta) {
    require_theta_in_domain(model, theta);
    auto ctx = std::make_shared<const ProjectionContext>(data, model.cov_matrix(theta.kappa));
    return reml_loglik_at(data, std::move(ctx), theta);
}

ScoreVector score(const Dataset& data, const CovarianceModel& model, const ThetaVector& theta) {
    require_theta_in_domain(model, theta);
    const int m = model.m();
    const ProjectionContext ctx(data, model.cov_matrix(theta.kappa));
    const double s2 = theta.sigma2;
    const double nmn = ctx.n() - ctx.nu();

    // one xi = Py shared by every quadratic form
    const Eigen::VectorXd xi = ctx.apply_P(data.y);
    const double yPy = data.y.dot(xi);

    ScoreVector s;
    s.values.resize(m + 1);
    s.values(0) = -0.5 * (nmn / s2 - yPy / (s2 * s2));
    for (int i = 0; i < m; ++i) {
        const Eigen::MatrixXd Hdot = model.cov_grad(theta.kappa, i);
        const double tr = ctx.trace_P_times(Hdot);
        const double quad = xi.dot(Hdot * xi);  // y^T P Hdot P y
        s.values(i + 1) = -0.5 * (tr - quad / s2);
    }
    return s;
}

ScoreVector fd_score(const Dataset& data, const CovarianceModel& model, const ThetaVector& theta,
                     double h) {
    require_theta_in_domain(model, theta);
    const Eigen::VectorXd t = theta.flatten();
    const Eigen::VectorXd steps = fd_steps(model, theta, h);
    ScoreVector s;
    s.values.resize(t.size());
    for (int k = 0; k < t.size(); ++k) {
        Eigen::VectorXd tp = t, tm = t;
        tp(k) += steps(k);
        tm(k) -= steps(k);
        const double fp = reml_loglik(data, model, ThetaVector::from_flat(tp)).value;
        const double fm = reml_loglik(data, model, ThetaVector::from_flat(tm)).value;
        s.values(k) = (fp - fm) / (2.0 * steps(k));
    }
    return s;
}

Eigen::MatrixXd fd_neg_hessian(const Dataset& data, const CovarianceModel& model,
                               const ThetaVector& theta, double h) {
    require_theta_in_domain(model, theta);
    const Eigen::VectorXd t = theta.flatten();
    const int d = static_cast<int>(t.size());
    const Eigen::VectorXd steps = fd_steps(model, theta, h);

    auto eval = [&](const Eigen::VectorXd& v) {
        return reml_loglik(data, model, ThetaVector::from_flat(v)).value;
    };
    const double f0 = eval(t);

    Eigen::MatrixXd Hout(d, d);
    for (int k = 0; k < d; ++k) {
        Eigen::VectorXd tp = t, tm = t;
        tp(k) += steps(k);
        tm(k) -= steps(k);
        Hout(k, k) = -(eval(tp) - 2.0 * f0 + eval(tm)) / (steps(k) * steps(k));
        for (int l = k + 1; l < d; ++l) {
            Eigen::VectorXd tpp = t, tpm = t, tmp = t, tmm = t;
            tpp(k) += steps(k);
            tpp(l) += steps(l);
            tpm(k) += steps(k);
            tpm(l) -= steps(l);
            tmp(k) -= steps(k);
            tmp(l) += steps(l);
            tmm(k) -= steps(k);
            tmm(l) -= steps(l);
            const double v =
                -(eval(tpp) - eval(tpm) - eval(tmp) + eval(tmm)) / (4.0 * steps(k) * steps(l));
            Hout(k, l) = v;
            Hout(l, k) = v;
        }
    }
    return Hout;
}

double profile_sigma2(const LikelihoodEval& eval) {
    return eval.yPy / (eval.ctx->n() - eval.ctx->nu());
}

}  // namespace remlkit
