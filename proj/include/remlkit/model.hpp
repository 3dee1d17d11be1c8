#ifndef REMLKIT_MODEL_HPP
#define REMLKIT_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "remlkit/errors.hpp"

namespace remlkit {

// Strict feasible region used by validate_params and the solver box.
// Ops accept the wider domain (sigma2 > 0, gamma >= 0) where H stays SPD.
inline constexpr double kSigma2Floor = 1e-10;
inline constexpr double kGammaFloor = 1e-8;
inline constexpr double kPhiMargin = 1e-4;

struct Dataset {
    Eigen::VectorXd y;  // response, length n
    Eigen::MatrixXd X;  // fixed-effects design, n x p
    Eigen::MatrixXd Z;  // random-effects design, n x b (b may be 0)
    int n = 0;
    int p = 0;
    int b = 0;
    int nu = 0;  // rank(X); equals p, enforced at construction
};

// Validates shapes, full column rank of X, and n > rank(X).
Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd X, Eigen::MatrixXd Z);

// Variance parameters theta = (sigma2, kappa_1..kappa_m). Flattened ordering
// everywhere (scores, information matrices): index 0 = sigma2, index i = kappa_i.
struct ThetaVector {
    double sigma2 = 1.0;
    Eigen::VectorXd kappa;

    int dim() const { return 1 + static_cast<int>(kappa.size()); }
    Eigen::VectorXd flatten() const;
    static ThetaVector from_flat(const Eigen::VectorXd& v);
};

enum class Family { variance_components, ar1_residual, composite };

const char* family_name(Family f);

// Parametric covariance structure
//
//     H(kappa) = R + sum_i gamma_i Z_i Z_i^T,
//
// where R is the identity or an AR(1) correlation matrix R_st = phi^|s-t|.
// Parameter ordering is kappa = (gamma_1..gamma_k [, phi]); the AR(1)
// parameter, when present, is last. First and second derivatives are
// analytic; the gamma part is linear, so every Hddot involving a gamma is
// identically zero.
class CovarianceModel {
public:
    static CovarianceModel variance_components(int n, std::vector<Eigen::MatrixXd> blocks);
    static CovarianceModel ar1_residual(int n);
    static CovarianceModel composite(int n, std::vector<Eigen::MatrixXd> blocks);

    int n() const { return n_; }
    int m() const { return static_cast<int>(blocks_.size()) + (ar1_ ? 1 : 0); }
    Family family() const;
    bool has_ar1() const { return ar1_; }
    int num_blocks() const { return static_cast<int>(blocks_.size()); }
    const Eigen::MatrixXd& block(int i) const { return blocks_.at(i); }
    int num_random_effects() const { return b_; }

    // [Z_1 .. Z_k], n x b; the Dataset's Z for this structure.
    Eigen::MatrixXd combined_Z() const;

    Eigen::MatrixXd cov_matrix(const Eigen::VectorXd& kappa) const;
    Eigen::MatrixXd cov_grad(const Eigen::VectorXd& kappa, int i) const;
    Eigen::MatrixXd cov_hess(const Eigen::VectorXd& kappa, int i, int j) const;
    bool hess_is_zero(int i, int j) const;

    bool kappa_in_domain(const Eigen::VectorXd& kappa, std::string* why = nullptr) const;
    Eigen::VectorXd kappa_lower_bounds() const;
    Eigen::VectorXd kappa_upper_bounds() const;

    // MME split H = R + Z G Z^T.  R is n x n SPD; G is b x b blockdiag(gamma_i I).
    Eigen::MatrixXd residual_matrix(const Eigen::VectorXd& kappa) const;
    Eigen::MatrixXd random_effect_cov(const Eigen::VectorXd& kappa) const;

private:
    CovarianceModel(int n, std::vector<Eigen::MatrixXd> blocks, bool ar1);

    int n_ = 0;
    int b_ = 0;
    bool ar1_ = false;
    std::vector<Eigen::MatrixXd> blocks_;       // Z_i, n x b_i
    std::vector<Eigen::MatrixXd> block_grams_;  // Z_i Z_i^T, exactly symmetric
};

struct FeasibilityReport {
    bool feasible = true;
    std::vector<std::string> reasons;  // one entry per violated parameter
};

// Total function: never throws, reports against the strict region.
FeasibilityReport validate_params(const CovarianceModel& model, const ThetaVector& theta);

bool theta_in_domain(const CovarianceModel& model, const ThetaVector& theta,
                     std::string* why = nullptr);

// Throws InfeasibleParams with the offending reason.
void require_theta_in_domain(const CovarianceModel& model, const ThetaVector& theta);

// Strict box for solver projection, in flattened theta ordering.
Eigen::VectorXd theta_lower_bounds(const CovarianceModel& model);
Eigen::VectorXd theta_upper_bounds(const CovarianceModel& model);

}  // namespace remlkit

#endif
