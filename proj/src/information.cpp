#include "remlkit/information.hpp"

#include <cmath>

namespace remlkit {

namespace {

Eigen::MatrixXd mirror_upper(Eigen::MatrixXd M) {
    for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < i; ++j) M(i, j) = M(j, i);
    return M;
}

}  // namespace

const char* info_kind_name(InfoKind k) {
    switch (k) {
        case InfoKind::observed: return "observed";
        case InfoKind::fisher: return "fisher";
        case InfoKind::average: return "average";
        case InfoKind::remainder: return "remainder";
    }
    return "unknown";
}

InfoEvalContext make_info_context(const Dataset& data, const CovarianceModel& model,
                                  const ThetaVector& theta, bool with_traces) {
    require_theta_in_domain(model, theta);
    InfoEvalContext ictx;
    ictx.theta = theta;
    ictx.m = model.m();
    ictx.proj = std::make_shared<const ProjectionContext>(data, model.cov_matrix(theta.kappa));
    ictx.n = ictx.proj->n();
    ictx.nu = ictx.proj->nu();
    ictx.with_traces = with_traces;

    const int m = ictx.m;
    ictx.grads.reserve(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) ictx.grads.push_back(model.cov_grad(theta.kappa, i));

    ictx.hessians.resize(static_cast<size_t>(m) * static_cast<size_t>(m));
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j)
            if (!model.hess_is_zero(i, j)) {
                Eigen::MatrixXd Hdd = model.cov_hess(theta.kappa, i, j);
                ictx.hessians[static_cast<size_t>(i) * m + j] = Hdd;
                if (j != i) ictx.hessians[static_cast<size_t>(j) * m + i] = std::move(Hdd);
            }

    if (with_traces) {
        ictx.tr_P_grad.resize(m);
        ictx.tr_Pg_Pg.resize(m, m);
        ictx.tr_P_hess = Eigen::MatrixXd::Zero(m, m);
        // cache P Hdot_i once; tr(P Hdot_i P Hdot_j) = sum_st (PHdot_i)_st (PHdot_j)_ts
        std::vector<Eigen::MatrixXd> PG;
        PG.reserve(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) PG.push_back(ictx.proj->apply_P(ictx.grads[i]));
        for (int i = 0; i < m; ++i) {
            ictx.tr_P_grad(i) = ictx.proj->trace_P_times(ictx.grads[i]);
            for (int j = i; j < m; ++j) {
                const double t = PG[i].cwiseProduct(PG[j].transpose()).sum();
                ictx.tr_Pg_Pg(i, j) = t;
                ictx.tr_Pg_Pg(j, i) = t;
                const auto& Hdd = ictx.hessians[static_cast<size_t>(i) * m + j];
                if (Hdd.size() != 0) {
                    const double th = ictx.proj->trace_P_times(Hdd);
                    ictx.tr_P_hess(i, j) = th;
                    ictx.tr_P_hess(j, i) = th;
                }
            }
        }
    }
    return ictx;
}

InfoQuadForms compute_quad_forms(const InfoEvalContext& ictx, const Eigen::VectorXd& y) {
    const int m = ictx.m;
    InfoQuadForms q;
    const Eigen::VectorXd xi = ictx.proj->apply_P(y);
    q.yPy = y.dot(xi);

    std::vector<Eigen::VectorXd> eta(static_cast<size_t>(m)), zeta(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        eta[static_cast<size_t>(i)] = ictx.grads[static_cast<size_t>(i)] * xi;
        zeta[static_cast<size_t>(i)] = ictx.proj->apply_P(eta[static_cast<size_t>(i)]);
    }

    q.yPg_Py.resize(m);
    q.yPgPg_Py.resize(m, m);
    q.yPh_Py = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        q.yPg_Py(i) = xi.dot(eta[static_cast<size_t>(i)]);
        for (int j = 0; j < m; ++j)
            q.yPgPg_Py(i, j) = eta[static_cast<size_t>(i)].dot(zeta[static_cast<size_t>(j)]);
        for (int j = i; j < m; ++j) {
            const auto& Hdd = ictx.hessians[static_cast<size_t>(i) * m + j];
            if (Hdd.size() != 0) {
                const double v = xi.dot(Hdd * xi);
                q.yPh_Py(i, j) = v;
                q.yPh_Py(j, i) = v;
            }
        }
    }
    return q;
}

InfoMatrix observed_from(const InfoEvalContext& ictx, const InfoQuadForms& q) {
    const int m = ictx.m;
    const double s2 = ictx.theta.sigma2;
    const double s4 = s2 * s2, s6 = s4 * s2;
    const double nmn = ictx.n - ictx.nu;

    Eigen::MatrixXd M(m + 1, m + 1);
    M(0, 0) = q.yPy / s6 - nmn / (2.0 * s4);
    for (int i = 0; i < m; ++i) M(0, i + 1) = q.yPg_Py(i) / (2.0 * s4);
    // use the (i, j) upper-triangle quadratic form everywhere so that the
    // splitting identity holds entrywise at rounding level
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j)
            M(i + 1, j + 1) = 0.5 * (ictx.tr_P_hess(i, j) - ictx.tr_Pg_Pg(i, j)) +
                              (2.0 * q.yPgPg_Py(i, j) - q.yPh_Py(i, j)) / (2.0 * s2);
    return InfoMatrix{InfoKind::observed, mirror_upper(std::move(M)), ictx.theta};
}

InfoMatrix fisher_from(const InfoEvalContext& ictx) {
    const int m = ictx.m;
    const double s2 = ictx.theta.sigma2;
    const double nmn = ictx.n - ictx.nu;

    Eigen::MatrixXd M(m + 1, m + 1);
    M(0, 0) = nmn / (2.0 * s2 * s2);
    for (int i = 0; i < m; ++i) M(0, i + 1) = ictx.tr_P_grad(i) / (2.0 * s2);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) M(i + 1, j + 1) = 0.5 * ictx.tr_Pg_Pg(i, j);
    return InfoMatrix{InfoKind::fisher, mirror_upper(std::move(M)), ictx.theta};
}

InfoMatrix average_from(const InfoEvalContext& ictx, const InfoQuadForms& q) {
    const int m = ictx.m;
    const double s2 = ictx.theta.sigma2;
    const double s4 = s2 * s2, s6 = s4 * s2;

    Eigen::MatrixXd M(m + 1, m + 1);
    M(0, 0) = q.yPy / (2.0 * s6);
    for (int i = 0; i < m; ++i) M(0, i + 1) = q.yPg_Py(i) / (2.0 * s4);
    // (kappa_i, kappa_j) entry is eta_i^T (P eta_j) / (2 sigma^2); contracting
    // eta_i against xi instead would drop the inner projection.
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) M(i + 1, j + 1) = q.yPgPg_Py(i, j) / (2.0 * s2);
    return InfoMatrix{InfoKind::average, mirror_upper(std::move(M)), ictx.theta};
}

InfoMatrix remainder_from(const InfoEvalContext& ictx, const InfoQuadForms& q) {
    const int m = ictx.m;
    const double s2 = ictx.theta.sigma2;
    const double s4 = s2 * s2;

    Eigen::MatrixXd M(m + 1, m + 1);
    M(0, 0) = 0.0;
    for (int i = 0; i < m; ++i)
        M(0, i + 1) = ictx.tr_P_grad(i) / (4.0 * s2) - q.yPg_Py(i) / (4.0 * s4);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j)
            M(i + 1, j + 1) = (ictx.tr_P_hess(i, j) - q.yPh_Py(i, j) / s2) / 4.0;
    return InfoMatrix{InfoKind::remainder, mirror_upper(std::move(M)), ictx.theta};
}

InfoMatrix observed_information(const Dataset& data, const CovarianceModel& model,
                                const ThetaVector& theta) {
    const InfoEvalContext ictx = make_info_context(data, model, theta, true);
    return observed_from(ictx, compute_quad_forms(ictx, data.y));
}

InfoMatrix fisher_information(const Dataset& data, const CovarianceModel& model,
                              const ThetaVector& theta) {
    return fisher_from(make_info_context(data, model, theta, true));
}

InfoMatrix average_information(const Dataset& data, const CovarianceModel& model,
                               const ThetaVector& theta) {
    // matvec-only path: no trace terms anywhere, exactly m+1 P-applications
    const InfoEvalContext ictx = make_info_context(data, model, theta, false);
    return average_from(ictx, compute_quad_forms(ictx, data.y));
}

InfoMatrix splitting_remainder(const Dataset& data, const CovarianceModel& model,
                               const ThetaVector& theta) {
    const InfoEvalContext ictx = make_info_context(data, model, theta, true);
    return remainder_from(ictx, compute_quad_forms(ictx, data.y));
}

SplittingReport check_splitting(const Dataset& data, const CovarianceModel& model,
                                const ThetaVector& theta) {
    const InfoEvalContext ictx = make_info_context(data, model, theta, true);
    const InfoQuadForms q = compute_quad_forms(ictx, data.y);

    SplittingReport rep;
    rep.observed = observed_from(ictx, q);
    rep.fisher = fisher_from(ictx);
    rep.average = average_from(ictx, q);
    rep.remainder = remainder_from(ictx, q);

    const Eigen::MatrixXd avg = 0.5 * (rep.observed.entries + rep.fisher.entries);
    const Eigen::MatrixXd res = avg - rep.average.entries - rep.remainder.entries;
    rep.max_abs_residual = res.cwiseAbs().maxCoeff();
    rep.max_rel_residual =
        (res.cwiseAbs().array() / (1.0 + avg.cwiseAbs().array())).maxCoeff();
    return rep;
}

}  // namespace remlkit
