#ifndef REMLKIT_SIMULATE_HPP
#define REMLKIT_SIMULATE_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "remlkit/information.hpp"
#include "remlkit/model.hpp"

namespace remlkit {

struct SimSpec {
    Eigen::MatrixXd X;  // n x p skeleton
    Eigen::MatrixXd Z;  // n x b, consistent with model
    CovarianceModel model;
    ThetaVector theta_true;
    Eigen::VectorXd tau_true;  // length p
    std::uint64_t seed = 0;
    int replicates = 0;
};

// Derives Z from the model and validates dimensions/feasibility.
SimSpec make_sim_spec(Eigen::MatrixXd X, CovarianceModel model, ThetaVector theta_true,
                      Eigen::VectorXd tau_true, std::uint64_t seed, int replicates);

// y = X tau + sqrt(sigma2) L w with L the Cholesky factor of H and w a
// standard normal vector from the counter stream (seed, replicate_index).
// Deterministic: identical inputs give identical bytes.
Eigen::VectorXd sample_dataset(const SimSpec& spec, int replicate_index);

Dataset replicate_dataset(const SimSpec& spec, int replicate_index);

// Per-entry Monte Carlo means, standard errors and z-scores for I_O, I_A and
// I_Z across replicates, against the analytic Fisher matrix (I_O, I_A) and
// zero (I_Z). Entries whose sample spread is exactly zero get z = 0 when the
// mean hits the target exactly and +-inf otherwise.
struct MonteCarloReport {
    int replicates = 0;
    std::uint64_t seed = 0;
    ThetaVector theta_true;
    Eigen::MatrixXd fisher;
    Eigen::MatrixXd mean_observed, se_observed, z_observed;
    Eigen::MatrixXd mean_average, se_average, z_average;
    Eigen::MatrixXd mean_remainder, se_remainder, z_remainder;

    double max_abs_z() const;
    int entries_with_abs_z_above(double cut) const;
};

MonteCarloReport monte_carlo_information(const SimSpec& spec);

}  // namespace remlkit

#endif
