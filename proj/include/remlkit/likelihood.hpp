#ifndef REMLKIT_LIKELIHOOD_HPP
#define REMLKIT_LIKELIHOOD_HPP

#include <Eigen/Dense>
#include <memory>

#include "remlkit/model.hpp"
#include "remlkit/projection.hpp"

namespace remlkit {

// Residual log-likelihood value at theta. The constant convention is
// const = -(n-nu)/2 log(2 pi), the standard REML density normalization.
struct LikelihoodEval {
    double value = 0.0;
    double yPy = 0.0;  // y^T P y, nonnegative
    std::shared_ptr<const ProjectionContext> ctx;
    ThetaVector theta;
};

// Gradient of l_R in flattened theta ordering: (s(sigma2), s(kappa_1)..s(kappa_m)).
struct ScoreVector {
    Eigen::VectorXd values;

    double inf_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

LikelihoodEval reml_loglik(const Dataset& data, const CovarianceModel& model,
                           const ThetaVector& theta);

// Same, reusing an already-built projection context for H(theta.kappa).
LikelihoodEval reml_loglik_at(const Dataset& data,
                              std::shared_ptr<const ProjectionContext> ctx,
                              const ThetaVector& theta);

ScoreVector score(const Dataset& data, const CovarianceModel& model, const ThetaVector& theta);

// Central-difference gradient of reml_loglik with per-coordinate step
// h * max(1, |theta_k|). Verification oracle; never used by solvers.
ScoreVector fd_score(const Dataset& data, const CovarianceModel& model, const ThetaVector& theta,
                     double h);

// Negated central-difference Hessian of reml_loglik (verification oracle for
// the observed information matrix).
Eigen::MatrixXd fd_neg_hessian(const Dataset& data, const CovarianceModel& model,
                               const ThetaVector& theta, double h);

// Analytic root of s(sigma2) at fixed kappa: y^T P y / (n - nu).
double profile_sigma2(const LikelihoodEval& eval);

}  // namespace remlkit

#endif
