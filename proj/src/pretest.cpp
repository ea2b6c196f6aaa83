#include "didguard/pretest.hpp"

#include "didguard/severity.hpp"

namespace didguard {

PretestResult run_pretest(const ThetaEstimate& est, const SeverityParams& params) {
    params.validate();
    const ThetaEstimate& eff =
        params.mode == ViolationMode::Overall ? transform_theta_to_overall(est) : est;
    eff.validate();

    PretestResult result;
    result.mode = params.mode;
    result.threshold_M = params.threshold_M;
    result.s_pre_hat = severity(eff.pre_block(), params.p);
    result.phi = result.s_pre_hat <= params.threshold_M ? 0 : 1;
    result.margin = params.threshold_M - result.s_pre_hat;
    return result;
}

}  // namespace didguard
