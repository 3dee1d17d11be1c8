#ifndef REMLKIT_INFORMATION_HPP
#define REMLKIT_INFORMATION_HPP

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "remlkit/model.hpp"
#include "remlkit/projection.hpp"

namespace remlkit {

enum class InfoKind { observed, fisher, average, remainder };

const char* info_kind_name(InfoKind k);

// Symmetric (m+1) x (m+1) matrix in flattened theta ordering
// (row/col 0 = sigma2, row/col i = kappa_i). Only the upper triangle is
// computed; the lower triangle is an exact mirror.
struct InfoMatrix {
    InfoKind kind = InfoKind::observed;
    Eigen::MatrixXd entries;
    ThetaVector theta;
};

// Everything y-independent at a fixed (data shape, model, theta): the
// projection context, the derivative matrices, and (optionally) the trace
// terms. One context serves any number of response vectors, which is what
// the Monte Carlo module leans on.
struct InfoEvalContext {
    std::shared_ptr<const ProjectionContext> proj;
    std::vector<Eigen::MatrixXd> grads;     // Hdot_i
    std::vector<Eigen::MatrixXd> hessians;  // Hddot_ij, row-major m*m; empty where zero
    Eigen::VectorXd tr_P_grad;              // tr(P Hdot_i)
    Eigen::MatrixXd tr_Pg_Pg;               // tr(P Hdot_i P Hdot_j)
    Eigen::MatrixXd tr_P_hess;              // tr(P Hddot_ij)
    ThetaVector theta;
    bool with_traces = false;
    int n = 0, nu = 0, m = 0;
};

// with_traces=false skips every trace term (and the Hddot quadratic-form
// inputs stay available); the average-information path uses that mode so its
// cost stays at m+1 P-applications.
InfoEvalContext make_info_context(const Dataset& data, const CovarianceModel& model,
                                  const ThetaVector& theta, bool with_traces = true);

// Quadratic forms for one response vector: xi = Py once, eta_i = Hdot_i xi,
// zeta_i = P eta_i. Exactly m+1 P-applications.
struct InfoQuadForms {
    double yPy = 0.0;
    Eigen::VectorXd yPg_Py;     // xi . eta_i
    Eigen::MatrixXd yPgPg_Py;   // eta_i . zeta_j (all pairs; symmetric up to rounding)
    Eigen::MatrixXd yPh_Py;     // xi^T Hddot_ij xi
};

InfoQuadForms compute_quad_forms(const InfoEvalContext& ictx, const Eigen::VectorXd& y);

InfoMatrix observed_from(const InfoEvalContext& ictx, const InfoQuadForms& q);
InfoMatrix fisher_from(const InfoEvalContext& ictx);
InfoMatrix average_from(const InfoEvalContext& ictx, const InfoQuadForms& q);
InfoMatrix remainder_from(const InfoEvalContext& ictx, const InfoQuadForms& q);

InfoMatrix observed_information(const Dataset& data, const CovarianceModel& model,
                                const ThetaVector& theta);
InfoMatrix fisher_information(const Dataset& data, const CovarianceModel& model,
                              const ThetaVector& theta);
InfoMatrix average_information(const Dataset& data, const CovarianceModel& model,
                               const ThetaVector& theta);
InfoMatrix splitting_remainder(const Dataset& data, const CovarianceModel& model,
                               const ThetaVector& theta);

// Residuals of (I_O + I)/2 - I_A - I_Z, which is an algebraic identity and
// must vanish to rounding for every y.
struct SplittingReport {
    InfoMatrix observed, fisher, average, remainder;
    double max_abs_residual = 0.0;
    double max_rel_residual = 0.0;  // |residual| / (1 + |(I_O+I)/2 entry|)
};

SplittingReport check_splitting(const Dataset& data, const CovarianceModel& model,
                                const ThetaVector& theta);

}  // namespace remlkit

#endif
