#ifndef REMLKIT_VERIFY_HPP
#define REMLKIT_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "remlkit/model.hpp"

namespace remlkit {

struct CheckResult {
    std::string name;
    std::string status;  // "pass" | "fail" | "skip"
    double residual = 0.0;
    double tolerance = 0.0;
    std::string note;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    std::vector<std::string> warnings;

    bool all_pass() const;
};

// Identity suite at (data, model, theta): PX=0, PHP=P, tr(PH)=n-nu, analytic
// score vs central differences, observed information vs the negated
// finite-difference Hessian, the splitting residual, and the MME route to Py.
// Finite-difference checks are skipped (never silently weakened) when a
// parameter sits too close to its domain edge for a usable step; the MME
// check is skipped when the structure has no random effects. `seed` drives
// the random probe vectors.
VerifyReport run_identity_checks(const Dataset& data, const CovarianceModel& model,
                                 const ThetaVector& theta, std::uint64_t seed);

}  // namespace remlkit

#endif
