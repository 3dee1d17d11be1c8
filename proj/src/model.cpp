#include "remlkit/model.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <utility>

namespace remlkit {

namespace {

// phi^d for d = 0..n-1 with the 0^0 = 1 convention.
std::vector<double> phi_powers(double phi, int n) {
    std::vector<double> pw(static_cast<size_t>(n), 1.0);
    for (int d = 1; d < n; ++d) pw[d] = pw[d - 1] * phi;
    return pw;
}

Eigen::MatrixXd symmetric_from_band(int n, const std::vector<double>& by_lag) {
    Eigen::MatrixXd M(n, n);
    for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t) M(s, t) = by_lag[static_cast<size_t>(std::abs(s - t))];
    return M;
}

}  // namespace

Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd X, Eigen::MatrixXd Z) {
    const int n = static_cast<int>(y.size());
    if (n < 1) throw DimensionMismatch("dataset: n must be >= 1");
    if (X.rows() != n || Z.rows() != n) {
        std::ostringstream os;
        os << "dataset: row counts disagree (y " << n << ", X " << X.rows() << ", Z "
           << Z.rows() << ")";
        throw DimensionMismatch(os.str());
    }
    const int p = static_cast<int>(X.cols());
    if (p < 1) throw DimensionMismatch("dataset: X must have at least one column");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    const int rank = static_cast<int>(qr.rank());
    if (rank != p) {
        std::ostringstream os;
        os << "X has rank " << rank << " but " << p << " columns";
        throw RankDeficientX(os.str());
    }
    if (n <= rank) throw DataError("dataset: n must exceed rank(X) for a residual likelihood");

    Dataset d;
    d.y = std::move(y);
    d.X = std::move(X);
    d.Z = std::move(Z);
    d.n = n;
    d.p = p;
    d.b = static_cast<int>(d.Z.cols());
    d.nu = rank;
    return d;
}

Eigen::VectorXd ThetaVector::flatten() const {
    Eigen::VectorXd v(dim());
    v(0) = sigma2;
    v.tail(kappa.size()) = kappa;
    return v;
}

ThetaVector ThetaVector::from_flat(const Eigen::VectorXd& v) {
    if (v.size() < 1) throw DimensionMismatch("theta: flattened vector is empty");
    ThetaVector t;
    t.sigma2 = v(0);
    t.kappa = v.tail(v.size() - 1);
    return t;
}

const char* family_name(Family f) {
    switch (f) {
        case Family::variance_components: return "variance_components";
        case Family::ar1_residual: return "ar1_residual";
        case Family::composite: return "composite";
    }
    return "unknown";
}

CovarianceModel::CovarianceModel(int n, std::vector<Eigen::MatrixXd> blocks, bool ar1)
    : n_(n), ar1_(ar1), blocks_(std::move(blocks)) {
    if (n_ < 1) throw DimensionMismatch("covariance model: n must be >= 1");
    for (const auto& Zi : blocks_) {
        if (Zi.rows() != n_) throw DimensionMismatch("covariance model: block row count != n");
        if (Zi.cols() < 1) throw DimensionMismatch("covariance model: empty block");
        b_ += static_cast<int>(Zi.cols());
    }
    block_grams_.reserve(blocks_.size());
    for (const auto& Zi : blocks_) {
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n_, n_);
        G.selfadjointView<Eigen::Lower>().rankUpdate(Zi);
        G.triangularView<Eigen::StrictlyUpper>() =
            G.triangularView<Eigen::StrictlyLower>().transpose();
        block_grams_.push_back(std::move(G));
    }
}

CovarianceModel CovarianceModel::variance_components(int n, std::vector<Eigen::MatrixXd> blocks) {
    return CovarianceModel(n, std::move(blocks), false);
}

CovarianceModel CovarianceModel::ar1_residual(int n) { return CovarianceModel(n, {}, true); }

CovarianceModel CovarianceModel::composite(int n, std::vector<Eigen::MatrixXd> blocks) {
    if (blocks.empty())
        throw DimensionMismatch("composite model: needs at least one variance component");
    return CovarianceModel(n, std::move(blocks), true);
}

Family CovarianceModel::family() const {
    if (ar1_ && !blocks_.empty()) return Family::composite;
    if (ar1_) return Family::ar1_residual;
    return Family::variance_components;
}

Eigen::MatrixXd CovarianceModel::combined_Z() const {
    Eigen::MatrixXd Z(n_, b_);
    int c = 0;
    for (const auto& Zi : blocks_) {
        Z.middleCols(c, Zi.cols()) = Zi;
        c += static_cast<int>(Zi.cols());
    }
    return Z;
}

bool CovarianceModel::kappa_in_domain(const Eigen::VectorXd& kappa, std::string* why) const {
    if (kappa.size() != m()) {
        if (why) *why = "kappa has wrong length";
        return false;
    }
    for (int i = 0; i < num_blocks(); ++i) {
        if (!(kappa(i) >= 0.0) || !std::isfinite(kappa(i))) {
            if (why) {
                std::ostringstream os;
                os << "gamma_" << i << " = " << kappa(i) << " must be >= 0";
                *why = os.str();
            }
            return false;
        }
    }
    if (ar1_) {
        const double phi = kappa(m() - 1);
        if (!(std::abs(phi) <= 1.0 - kPhiMargin)) {
            if (why) {
                std::ostringstream os;
                os << "phi = " << phi << " must satisfy |phi| <= " << 1.0 - kPhiMargin;
                *why = os.str();
            }
            return false;
        }
    }
    return true;
}

Eigen::VectorXd CovarianceModel::kappa_lower_bounds() const {
    Eigen::VectorXd lo(m());
    for (int i = 0; i < num_blocks(); ++i) lo(i) = kGammaFloor;
    if (ar1_) lo(m() - 1) = -(1.0 - kPhiMargin);
    return lo;
}

Eigen::VectorXd CovarianceModel::kappa_upper_bounds() const {
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(
        m(), std::numeric_limits<double>::infinity());
    if (ar1_) hi(m() - 1) = 1.0 - kPhiMargin;
    return hi;
}

Eigen::MatrixXd CovarianceModel::cov_matrix(const Eigen::VectorXd& kappa) const {
    std::string why;
    if (!kappa_in_domain(kappa, &why)) throw InfeasibleParams("cov_matrix: " + why);
    Eigen::MatrixXd H;
    if (ar1_) {
        H = symmetric_from_band(n_, phi_powers(kappa(m() - 1), n_));
    } else {
        H = Eigen::MatrixXd::Identity(n_, n_);
    }
    for (int i = 0; i < num_blocks(); ++i) H += kappa(i) * block_grams_[static_cast<size_t>(i)];
    return H;
}

Eigen::MatrixXd CovarianceModel::cov_grad(const Eigen::VectorXd& kappa, int i) const {
    std::string why;
    if (!kappa_in_domain(kappa, &why)) throw InfeasibleParams("cov_grad: " + why);
    if (i < 0 || i >= m()) throw IndexOutOfRange("cov_grad: parameter index out of range");
    if (i < num_blocks()) return block_grams_[static_cast<size_t>(i)];
    // d/dphi phi^d = d phi^(d-1)
    const double phi = kappa(m() - 1);
    const auto pw = phi_powers(phi, n_);
    std::vector<double> g(static_cast<size_t>(n_), 0.0);
    if (n_ > 1) g[1] = 1.0;
    for (int d = 2; d < n_; ++d) g[d] = d * pw[static_cast<size_t>(d - 1)];
    return symmetric_from_band(n_, g);
}

Eigen::MatrixXd CovarianceModel::cov_hess(const Eigen::VectorXd& kappa, int i, int j) const {
    std::string why;
    if (!kappa_in_domain(kappa, &why)) throw InfeasibleParams("cov_hess: " + why);
    if (i < 0 || i >= m() || j < 0 || j >= m())
        throw IndexOutOfRange("cov_hess: parameter index out of range");
    if (hess_is_zero(i, j)) return Eigen::MatrixXd::Zero(n_, n_);
    // d2/dphi2 phi^d = d(d-1) phi^(d-2)
    const double phi = kappa(m() - 1);
    const auto pw = phi_powers(phi, n_);
    std::vector<double> h(static_cast<size_t>(n_), 0.0);
    for (int d = 2; d < n_; ++d) h[d] = d * (d - 1) * pw[static_cast<size_t>(d - 2)];
    return symmetric_from_band(n_, h);
}

bool CovarianceModel::hess_is_zero(int i, int j) const {
    // Linear in every gamma; only (phi, phi) has curvature.
    return !(ar1_ && i == m() - 1 && j == m() - 1);
}

Eigen::MatrixXd CovarianceModel::residual_matrix(const Eigen::VectorXd& kappa) const {
    std::string why;
    if (!kappa_in_domain(kappa, &why)) throw InfeasibleParams("residual_matrix: " + why);
    if (ar1_) return symmetric_from_band(n_, phi_powers(kappa(m() - 1), n_));
    return Eigen::MatrixXd::Identity(n_, n_);
}

Eigen::MatrixXd CovarianceModel::random_effect_cov(const Eigen::VectorXd& kappa) const {
    std::string why;
    if (!kappa_in_domain(kappa, &why)) throw InfeasibleParams("random_effect_cov: " + why);
    if (b_ == 0) throw DimensionMismatch("random_effect_cov: structure has no random effects");
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(b_, b_);
    int c = 0;
    for (int i = 0; i < num_blocks(); ++i) {
        const int bi = static_cast<int>(blocks_[static_cast<size_t>(i)].cols());
        G.block(c, c, bi, bi) = kappa(i) * Eigen::MatrixXd::Identity(bi, bi);
        c += bi;
    }
    return G;
}

FeasibilityReport validate_params(const CovarianceModel& model, const ThetaVector& theta) {
    FeasibilityReport rep;
    auto flag = [&rep](const std::string& reason) {
        rep.feasible = false;
        rep.reasons.push_back(reason);
    };

    if (!(theta.sigma2 > 0.0) || !std::isfinite(theta.sigma2)) {
        flag("sigma2 must be positive");
    } else if (theta.sigma2 < kSigma2Floor) {
        std::ostringstream os;
        os << "sigma2 = " << theta.sigma2 << " below floor " << kSigma2Floor;
        flag(os.str());
    }

    if (theta.kappa.size() != model.m()) {
        std::ostringstream os;
        os << "kappa has length " << theta.kappa.size() << ", model needs " << model.m();
        flag(os.str());
        return rep;
    }
    for (int i = 0; i < model.num_blocks(); ++i) {
        if (!(theta.kappa(i) >= kGammaFloor) || !std::isfinite(theta.kappa(i))) {
            std::ostringstream os;
            os << "gamma_" << i << " = " << theta.kappa(i) << " must be >= " << kGammaFloor;
            flag(os.str());
        }
    }
    if (model.has_ar1()) {
        const double phi = theta.kappa(model.m() - 1);
        if (!(std::abs(phi) <= 1.0 - kPhiMargin)) {
            std::ostringstream os;
            os << "phi = " << phi << " outside |phi| <= " << 1.0 - kPhiMargin;
            flag(os.str());
        }
    }
    return rep;
}

bool theta_in_domain(const CovarianceModel& model, const ThetaVector& theta, std::string* why) {
    if (!(theta.sigma2 > 0.0) || !std::isfinite(theta.sigma2)) {
        if (why) *why = "sigma2 must be positive";
        return false;
    }
    return model.kappa_in_domain(theta.kappa, why);
}

void require_theta_in_domain(const CovarianceModel& model, const ThetaVector& theta) {
    std::string why;
    if (!theta_in_domain(model, theta, &why)) throw InfeasibleParams(why);
}

Eigen::VectorXd theta_lower_bounds(const CovarianceModel& model) {
    Eigen::VectorXd lo(model.m() + 1);
    lo(0) = kSigma2Floor;
    lo.tail(model.m()) = model.kappa_lower_bounds();
    return lo;
}

Eigen::VectorXd theta_upper_bounds(const CovarianceModel& model) {
    Eigen::VectorXd hi(model.m() + 1);
    hi(0) = std::numeric_limits<double>::infinity();
    hi.tail(model.m()) = model.kappa_upper_bounds();
    return hi;
}

}  // namespace remlkit
