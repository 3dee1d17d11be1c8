#include "remlkit/simulate.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "remlkit/rng.hpp"

namespace remlkit {

namespace {

// Welford accumulator over matrices, fixed iteration order.
struct MatrixMoments {
    Eigen::MatrixXd mean, m2;
    long count = 0;

    void init(int r, int c) {
        mean = Eigen::MatrixXd::Zero(r, c);
        m2 = Eigen::MatrixXd::Zero(r, c);
    }
    void add(const Eigen::MatrixXd& x) {
        ++count;
        const Eigen::MatrixXd d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d.cwiseProduct(x - mean);
    }
    Eigen::MatrixXd standard_error() const {
        return (m2 / static_cast<double>(count - 1)).cwiseSqrt() /
               std::sqrt(static_cast<double>(count));
    }
};

Eigen::MatrixXd z_scores(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& se,
                         const Eigen::MatrixXd& target) {
    Eigen::MatrixXd z(mean.rows(), mean.cols());
    for (int i = 0; i < mean.rows(); ++i)
        for (int j = 0; j < mean.cols(); ++j) {
            const double diff = mean(i, j) - target(i, j);
            if (se(i, j) > 0.0)
                z(i, j) = diff / se(i, j);
            else
                z(i, j) = diff == 0.0 ? 0.0
                                      : std::copysign(std::numeric_limits<double>::infinity(),
                                                      diff);
        }
    return z;
}

}  // namespace

SimSpec make_sim_spec(Eigen::MatrixXd X, CovarianceModel model, ThetaVector theta_true,
                      Eigen::VectorXd tau_true, std::uint64_t seed, int replicates) {
    if (X.rows() != model.n()) throw DimensionMismatch("sim spec: X rows != model n");
    if (tau_true.size() != X.cols()) throw DimensionMismatch("sim spec: tau length != p");
    if (replicates < 1) throw Error("sim spec: replicates must be >= 1");
    require_theta_in_domain(model, theta_true);

    Eigen::MatrixXd Z = model.combined_Z();
    return SimSpec{std::move(X),          std::move(Z),   std::move(model),
                   std::move(theta_true), std::move(tau_true), seed,
                   replicates};
}

Eigen::VectorXd sample_dataset(const SimSpec& spec, int replicate_index) {
    const Eigen::MatrixXd H = spec.model.cov_matrix(spec.theta_true.kappa);
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("sample_dataset: Cholesky of H failed");
    CounterRng rng(spec.seed, static_cast<std::uint64_t>(replicate_index));
    const Eigen::VectorXd w = rng.normal_vector(spec.model.n());
    return spec.X * spec.tau_true +
           std::sqrt(spec.theta_true.sigma2) * (Eigen::MatrixXd(llt.matrixL()) * w);
}

Dataset replicate_dataset(const SimSpec& spec, int replicate_index) {
    return make_dataset(sample_dataset(spec, replicate_index), spec.X, spec.Z);
}

double MonteCarloReport::max_abs_z() const {
    double v = 0.0;
    for (const auto* z : {&z_observed, &z_average, &z_remainder})
        for (int i = 0; i < z->rows(); ++i)
            for (int j = 0; j < z->cols(); ++j)
                if (std::isfinite((*z)(i, j))) v = std::max(v, std::abs((*z)(i, j)));
                else return std::numeric_limits<double>::infinity();
    return v;
}

int MonteCarloReport::entries_with_abs_z_above(double cut) const {
    int c = 0;
    // symmetric matrices: count the upper triangle only
    for (const auto* z : {&z_observed, &z_average, &z_remainder})
        for (int i = 0; i < z->rows(); ++i)
            for (int j = i; j < z->cols(); ++j)
                if (std::abs((*z)(i, j)) > cut) ++c;
    return c;
}

MonteCarloReport monte_carlo_information(const SimSpec& spec) {
    if (spec.replicates < 100)
        throw StatisticalFloor("monte_carlo_information: needs at least 100 replicates");

    // theta-level pieces (projection, derivatives, traces) are y-independent:
    // build them once and reuse the same assembly code as the public ops
    Dataset skel = make_dataset(Eigen::VectorXd::Zero(spec.model.n()), spec.X, spec.Z);
    const InfoEvalContext ictx = make_info_context(skel, spec.model, spec.theta_true, true);

    MonteCarloReport rep;
    rep.replicates = spec.replicates;
    rep.seed = spec.seed;
    rep.theta_true = spec.theta_true;
    rep.fisher = fisher_from(ictx).entries;

    const int d = spec.model.m() + 1;
    MatrixMoments obs, avg, rem;
    obs.init(d, d);
    avg.init(d, d);
    rem.init(d, d);

    for (int r = 0; r < spec.replicates; ++r) {
        const Eigen::VectorXd y = sample_dataset(spec, r);
        const InfoQuadForms q = compute_quad_forms(ictx, y);
        obs.add(observed_from(ictx, q).entries);
        avg.add(average_from(ictx, q).entries);
        rem.add(remainder_from(ictx, q).entries);
    }

    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(d, d);
    rep.mean_observed = obs.mean;
    rep.se_observed = obs.standard_error();
    rep.z_observed = z_scores(obs.mean, rep.se_observed, rep.fisher);
    rep.mean_average = avg.mean;
    rep.se_average = avg.standard_error();
    rep.z_average = z_scores(avg.mean, rep.se_average, rep.fisher);
    rep.mean_remainder = rem.mean;
    rep.se_remainder = rem.standard_error();
    rep.z_remainder = z_scores(rem.mean, rep.se_remainder, zero);
    return rep;
}

}  // namespace remlkit
