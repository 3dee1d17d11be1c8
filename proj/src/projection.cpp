#include "remlkit/projection.hpp"

#include <cmath>
#include <memory>
#include <sstream>

namespace remlkit {

namespace {

double logdet_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    double s = 0.0;
    const auto& L = llt.matrixLLT();
    for (int i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
    return 2.0 * s;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& A) {
    return 0.5 * (A + A.transpose());
}

}  // namespace

ProjectionContext::ProjectionContext(const Dataset& data, const Eigen::MatrixXd& H)
    : n_(data.n),
      p_(data.p),
      nu_(data.nu),
      applies_(std::make_unique<std::atomic<std::int64_t>>(0)) {
    if (H.rows() != n_ || H.cols() != n_)
        throw DimensionMismatch("build_projection: H must be n x n");

    llt_H_.compute(H);
    if (llt_H_.info() != Eigen::Success)
        throw NotPositiveDefinite("build_projection: Cholesky of H failed");
    logdet_H_ = logdet_from_llt(llt_H_);

    HinvX_ = llt_H_.solve(data.X);
    llt_XtHinvX_.compute(symmetrized(data.X.transpose() * HinvX_));
    if (llt_XtHinvX_.info() != Eigen::Success)
        throw NotPositiveDefinite("build_projection: Cholesky of X^T H^-1 X failed");
    logdet_XtHinvX_ = logdet_from_llt(llt_XtHinvX_);

    if (!std::isfinite(logdet_H_) || !std::isfinite(logdet_XtHinvX_))
        throw NotPositiveDefinite("build_projection: non-finite log-determinant");
}

ProjectionContext build_projection(const Dataset& data, const Eigen::MatrixXd& H) {
    return ProjectionContext(data, H);
}

Eigen::VectorXd ProjectionContext::apply_P(const Eigen::VectorXd& v) const {
    if (v.size() != n_) throw DimensionMismatch("apply_P: vector length != n");
    applies_->fetch_add(1, std::memory_order_relaxed);
    Eigen::VectorXd Hinv_v = llt_H_.solve(v);
    Eigen::VectorXd c = llt_XtHinvX_.solve(HinvX_.transpose() * v);
    return Hinv_v - HinvX_ * c;
}

Eigen::MatrixXd ProjectionContext::apply_P(const Eigen::MatrixXd& V) const {
    if (V.rows() != n_) throw DimensionMismatch("apply_P: matrix row count != n");
    Eigen::MatrixXd PV(n_, V.cols());
    for (int j = 0; j < V.cols(); ++j) PV.col(j) = apply_P(Eigen::VectorXd(V.col(j)));
    return PV;
}

double ProjectionContext::trace_P_times(const Eigen::MatrixXd& A) const {
    if (A.rows() != n_ || A.cols() != n_) throw DimensionMismatch("trace_P_times: A must be n x n");
    const double t1 = llt_H_.solve(A).trace();
    const Eigen::MatrixXd M = HinvX_.transpose() * A * HinvX_;  // X^T H^-1 A H^-1 X
    const double t2 = llt_XtHinvX_.solve(M).trace();
    return t1 - t2;
}

double ProjectionContext::trace_PA_PB(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
    if (A.rows() != n_ || A.cols() != n_ || B.rows() != n_ || B.cols() != n_)
        throw DimensionMismatch("trace_PA_PB: arguments must be n x n");
    const Eigen::MatrixXd PA = apply_P(A);
    const Eigen::MatrixXd PB = apply_P(B);
    // tr(PA PB) = sum_ij (PA)_ij (PB)_ji
    return PA.cwiseProduct(PB.transpose()).sum();
}

FittedEffects solve_mme(const Dataset& data, const Eigen::MatrixXd& R, const Eigen::MatrixXd& G,
                        const Eigen::VectorXd& y) {
    const int n = data.n, p = data.p, b = data.b;
    if (b < 1) throw DimensionMismatch("solve_mme: needs at least one random effect (b >= 1)");
    if (R.rows() != n || R.cols() != n) throw DimensionMismatch("solve_mme: R must be n x n");
    if (G.rows() != b || G.cols() != b) throw DimensionMismatch("solve_mme: G must be b x b");
    if (y.size() != n) throw DimensionMismatch("solve_mme: y length != n");

    Eigen::LLT<Eigen::MatrixXd> lltR(R);
    if (lltR.info() != Eigen::Success)
        throw SingularCoefficientMatrix("solve_mme: residual block R is not positive definite");
    Eigen::LLT<Eigen::MatrixXd> lltG(G);
    if (lltG.info() != Eigen::Success)
        throw SingularCoefficientMatrix("solve_mme: random-effect block G is not positive definite");

    const Eigen::MatrixXd RinvX = lltR.solve(data.X);
    const Eigen::MatrixXd RinvZ = lltR.solve(data.Z);
    const Eigen::VectorXd Rinvy = lltR.solve(y);
    const Eigen::MatrixXd Ginv = lltG.solve(Eigen::MatrixXd::Identity(b, b));

    Eigen::MatrixXd C(p + b, p + b);
    C.topLeftCorner(p, p) = data.X.transpose() * RinvX;
    C.topRightCorner(p, b) = data.X.transpose() * RinvZ;
    C.bottomLeftCorner(b, p) = C.topRightCorner(p, b).transpose();
    C.bottomRightCorner(b, b) = data.Z.transpose() * RinvZ + symmetrized(Ginv);
    C = symmetrized(C);

    Eigen::VectorXd rhs(p + b);
    rhs.head(p) = data.X.transpose() * Rinvy;
    rhs.tail(b) = data.Z.transpose() * Rinvy;

    Eigen::LLT<Eigen::MatrixXd> lltC(C);
    if (lltC.info() != Eigen::Success)
        throw SingularCoefficientMatrix(
            "solve_mme: assembled coefficient matrix is not positive definite");
    const Eigen::VectorXd sol = lltC.solve(rhs);
    if (!sol.allFinite())
        throw SingularCoefficientMatrix("solve_mme: non-finite solution from coefficient matrix");

    FittedEffects fe;
    fe.tau_hat = sol.head(p);
    fe.u_tilde = sol.tail(b);
    fe.e = y - data.X * fe.tau_hat - data.Z * fe.u_tilde;
    return fe;
}

Eigen::VectorXd apply_P_via_mme(const Dataset& data, const Eigen::MatrixXd& R,
                                const Eigen::MatrixXd& G, const Eigen::VectorXd& y) {
    const FittedEffects fe = solve_mme(data, R, G, y);
    Eigen::LLT<Eigen::MatrixXd> lltR(R);
    if (lltR.info() != Eigen::Success)
        throw SingularCoefficientMatrix("apply_P_via_mme: R is not positive definite");
    return lltR.solve(fe.e);
}

}  // namespace remlkit
