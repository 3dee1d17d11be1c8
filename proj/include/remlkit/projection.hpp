#ifndef REMLKIT_PROJECTION_HPP
#define REMLKIT_PROJECTION_HPP

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <memory>

#include "remlkit/model.hpp"

namespace remlkit {

// Factorization context for a fixed (Dataset, H). Exposes applications of
//
//     P = H^-1 - H^-1 X (X^T H^-1 X)^-1 X^T H^-1
//
// through Cholesky solves. P is never formed densely here; a dense P exists
// only inside test oracles.
class ProjectionContext {
public:
    ProjectionContext(const Dataset& data, const Eigen::MatrixXd& H);

    ProjectionContext(const ProjectionContext&) = delete;
    ProjectionContext& operator=(const ProjectionContext&) = delete;
    ProjectionContext(ProjectionContext&&) = default;
    ProjectionContext& operator=(ProjectionContext&&) = default;

    int n() const { return n_; }
    int p() const { return p_; }
    int nu() const { return nu_; }
    double logdet_H() const { return logdet_H_; }
    double logdet_XtHinvX() const { return logdet_XtHinvX_; }

    // P v via triangular solves: H^-1 v - H^-1 X (X^T H^-1 X)^-1 (H^-1 X)^T v.
    Eigen::VectorXd apply_P(const Eigen::VectorXd& v) const;

    // Columnwise P V; counts one application per column.
    Eigen::MatrixXd apply_P(const Eigen::MatrixXd& V) const;

    // tr(P A) = tr(H^-1 A) - tr((X^T H^-1 X)^-1 (X^T H^-1 A H^-1 X)).
    double trace_P_times(const Eigen::MatrixXd& A) const;

    // tr(P A P B) by forming PA and PB columnwise; O(n) P-applications each.
    double trace_PA_PB(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const;

    Eigen::VectorXd solve_H(const Eigen::VectorXd& v) const { return llt_H_.solve(v); }

    // Instrumentation: total vector P-applications performed through this context.
    std::int64_t p_apply_count() const { return applies_->load(std::memory_order_relaxed); }

private:
    Eigen::LLT<Eigen::MatrixXd> llt_H_;
    Eigen::LLT<Eigen::MatrixXd> llt_XtHinvX_;
    Eigen::MatrixXd HinvX_;  // n x p
    double logdet_H_ = 0.0;
    double logdet_XtHinvX_ = 0.0;
    int n_ = 0;
    int p_ = 0;
    int nu_ = 0;
    std::unique_ptr<std::atomic<std::int64_t>> applies_;
};

ProjectionContext build_projection(const Dataset& data, const Eigen::MatrixXd& H);

struct FittedEffects {
    Eigen::VectorXd tau_hat;  // fixed effects, length p
    Eigen::VectorXd u_tilde;  // random-effect predictions, length b
    Eigen::VectorXd e;        // fitted residual y - X tau_hat - Z u_tilde
};

// Henderson block system
//   [ X^T R^-1 X   X^T R^-1 Z     ] [tau]   [X^T R^-1 y]
//   [ Z^T R^-1 X   Z^T R^-1 Z+G^-1] [ u ] = [Z^T R^-1 y]
FittedEffects solve_mme(const Dataset& data, const Eigen::MatrixXd& R, const Eigen::MatrixXd& G,
                        const Eigen::VectorXd& y);

// R^-1 e from the MME solve; equals apply_P(y) for a context built on H = R + Z G Z^T.
Eigen::VectorXd apply_P_via_mme(const Dataset& data, const Eigen::MatrixXd& R,
                                const Eigen::MatrixXd& G, const Eigen::VectorXd& y);

}  // namespace remlkit

#endif
