#pragma once

#include "didguard/core.hpp"

namespace didguard {

// Verdict of the severity pretest. phi = 1 rejects the null S_pre <= M,
// i.e. declares the extrapolation condition false. The boundary
// s_pre_hat == M passes (phi = 0).
struct PretestResult {
    double s_pre_hat = 0.0;
    double threshold_M = 0.0;
    int phi = 0;
    double margin = 0.0;  // threshold_M - s_pre_hat
    ViolationMode mode = ViolationMode::Iterative;

    bool extrapolation_condition_declared_true() const { return phi == 0; }
};

// Computes the estimated pre-period severity and compares it with M.
// In overall mode the estimate is transformed to overall violations first.
PretestResult run_pretest(const ThetaEstimate& est, const SeverityParams& params);

}  // namespace didguard
