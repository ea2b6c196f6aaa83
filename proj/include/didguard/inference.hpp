#pragma once

#include <cstdint>
#include <optional>

#include "didguard/core.hpp"
#include "didguard/pretest.hpp"

namespace didguard {

struct InferenceParams {
    double alpha = 0.05;
    int mc_draws = 5000;
    std::uint64_t seed = 0;
    SeverityParams severity;
    // Absent = uniform post average. When given, weights are listed
    // most-recent-period-first (matching kappa_lin): weight j applies to
    // post coordinate T_post - 1 - j.
    std::optional<Vector> estimand_weights;
    int threads = 1;

    void validate() const;
};

struct IntervalReport {
    double point = 0.0;
    double half_width = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double bias_component = 0.0;   // kappa * S_pre_hat
    double noise_component = 0.0;  // critical value on the finite-sample covariance
    double critical_value = 0.0;
    double conventional_lower = 0.0;
    double conventional_upper = 0.0;
    PretestResult pretest;

    // The interval is computed even when phi = 1 but carries no conditional
    // validity claim in that case.
    bool conditionally_valid() const { return pretest.phi == 0; }
};

// psi(x) = |post average of x| + coeff * ((1/(T_pre-1)) sum |x_pre|^p)^{1/p},
// where coeff is kappa (iterative), 1 (overall) or kappa_lin (weighted), and
// the post term is |sum c_t x_t| in the weighted case.
double psi_statistic(const Vector& x, const TimeLayout& layout, const SeverityParams& params,
                     const std::optional<Vector>& weights = std::nullopt);

// Monte-Carlo (1-alpha) quantile of psi(Z), Z ~ N(0, Sigma), sampled via
// symmetric eigendecomposition with small negative eigenvalues clamped to 0.
// The order statistic at index ceil((1-alpha)*S) (1-based) is returned.
// Deterministic given the seed; draw j uses substream (seed, j).
double critical_value(double alpha, const Matrix& sigma, const TimeLayout& layout,
                      const SeverityParams& params, std::uint64_t seed, int mc_draws,
                      const std::optional<Vector>& weights = std::nullopt, int threads = 1);

// Quantile of the standard normal distribution (Acklam's rational
// approximation, refined by one Halley step).
double normal_quantile(double prob);

// The conditionally valid interval of point +- (bias + noise), alongside the
// conventional z-interval read off the same covariance.
IntervalReport confidence_interval(const ThetaEstimate& est, const InferenceParams& params);

}  // namespace didguard
