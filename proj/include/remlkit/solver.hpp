#ifndef REMLKIT_SOLVER_HPP
#define REMLKIT_SOLVER_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "remlkit/information.hpp"
#include "remlkit/likelihood.hpp"
#include "remlkit/model.hpp"

namespace remlkit {

enum class Method { newton_raphson, fisher_scoring, average_information };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct SolverConfig {
    Method method = Method::average_information;
    double grad_tol = 1e-8;     // inf-norm of the score
    double loglik_tol = 1e-10;  // relative l_R change
    int max_iter = 100;
    int max_halvings = 30;
    double ridge0 = 1e-8;
};

enum class FitStatus { converged, max_iter, boundary, singular_curvature };

const char* fit_status_name(FitStatus s);

struct IterRecord {
    int iter = 0;
    double loglik = 0.0;
    double score_inf_norm = 0.0;
    int halvings = 0;
};

struct FitResult {
    ThetaVector theta_hat;
    // present when converged and the final curvature is invertible; boundary
    // coordinates are suppressed as NaN
    std::optional<Eigen::VectorXd> std_errors;
    std::vector<IterRecord> loglik_trace;  // nondecreasing in loglik
    FitStatus status = FitStatus::max_iter;
    InfoMatrix curvature;  // method's information matrix at theta_hat
};

// Solves (M + ridge diag(M)) delta = S. On factorization failure the ridge is
// escalated tenfold up to 1e6 times its starting value before throwing
// SingularCurvature.
Eigen::VectorXd newton_step(const InfoMatrix& curvature, const ScoreVector& score, double ridge);

// Ascent iteration theta <- theta + alpha delta with box projection onto the
// strict feasible region and step halving until l_R does not decrease.
FitResult fit(const Dataset& data, const CovarianceModel& model, const ThetaVector& theta0,
              const SolverConfig& config);

// Square roots of the diagonal of the inverse curvature matrix.
Eigen::VectorXd standard_errors(const InfoMatrix& curvature);

}  // namespace remlkit

#endif
