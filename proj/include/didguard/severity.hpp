#pragma once

#include <optional>

#include "didguard/core.hpp"

namespace didguard {

struct SeverityReport {
    double s_value = 0.0;
    double p = 2.0;
    int count = 0;
    ViolationMode mode = ViolationMode::Iterative;
};

// Normalized p-aggregate ((1/m) sum |v_i|^p)^{1/p}; max |v_i| for p = inf.
double severity(const Vector& values, double p);

// kappa = ((1/T_post) sum_{t=1..T_post} t^q)^{1/q} with 1/p + 1/q = 1.
// Limits: p = 1 gives T_post, p = inf gives (T_post + 1) / 2.
double kappa(int t_post, double p);

// Weighted-estimand analogue: T_post^{1/p} (sum_t (|c_{T_post-t+1}| t)^q)^{1/q}.
// Weights are listed most-recent-period-first: c_1 applies to the final
// period, c_{T_post} to the first post period. The bound is exact for
// uniform weights and for a single period at p = inf; elsewhere it can be
// conservative.
double kappa_lin(const Vector& weights, double p);

// Sharp bound on |tau_ATT - tau_DD| given the pre-period severity.
// Iterative mode: kappa * s_pre; overall mode: s_pre; weighted: kappa_lin * s_pre.
double bias_bound(double s_pre, const TimeLayout& layout, const SeverityParams& params,
                  const std::optional<Vector>& weights = std::nullopt);

// Post-period iterative violations attaining the bias bound: all positive,
// severity exactly S, induced gap (1/T_post) sum_t sum_{s<=t} r_s = kappa * S.
Vector worst_case_post_violations(const TimeLayout& layout, double p, double target_severity);

}  // namespace didguard
