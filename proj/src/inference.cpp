#include "didguard/inference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "didguard/parallel.hpp"
#include "didguard/rng.hpp"
#include "didguard/severity.hpp"

namespace didguard {

namespace {

void check_weights(const std::optional<Vector>& weights, const TimeLayout& layout) {
    if (weights && weights->size() != layout.post_length()) {
        throw std::invalid_argument("estimand weights length must equal T_post");
    }
}

// Estimand weights are listed most-recent-period-first (matching the
// kappa_lin pairing), so weight j applies to post coordinate m - 1 - j.
Vector chronological_weights(const Vector& weights) {
    return weights.reverse();
}

double severity_coefficient(const TimeLayout& layout, const SeverityParams& params,
                            const std::optional<Vector>& weights) {
    if (weights) {
        if (params.mode == ViolationMode::Overall) {
            throw std::invalid_argument("weighted estimands are supported in iterative mode only");
        }
        return kappa_lin(*weights, params.p);
    }
    return params.mode == ViolationMode::Overall ? 1.0 : kappa(layout.post_length(), params.p);
}

}  // namespace

void InferenceParams::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0, 1)");
    }
    if (mc_draws < 1000) {
        throw std::invalid_argument("mc_draws must be at least 1000");
    }
    if (mc_draws < 5000) {
        std::cerr << "warning: mc_draws below 5000; critical values will be noisy\n";
    }
    severity.validate();
}

double psi_statistic(const Vector& x, const TimeLayout& layout, const SeverityParams& params,
                     const std::optional<Vector>& weights) {
    if (x.size() != layout.theta_length()) {
        throw std::invalid_argument("psi_statistic: input length does not match layout");
    }
    check_weights(weights, layout);

    const auto post = x.tail(layout.post_length());
    const double point_term =
        weights ? std::abs(chronological_weights(*weights).dot(post)) : std::abs(post.mean());
    const double sev = severity(x.head(layout.pre_block_length()), params.p);
    return point_term + severity_coefficient(layout, params, weights) * sev;
}

double critical_value(double alpha, const Matrix& sigma, const TimeLayout& layout,
                      const SeverityParams& params, std::uint64_t seed, int mc_draws,
                      const std::optional<Vector>& weights, int threads) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("critical_value: alpha must lie in (0, 1)");
    }
    if (mc_draws < 1) throw std::invalid_argument("critical_value: need at least one draw");
    if (sigma.rows() != layout.theta_length()) {
        throw std::invalid_argument("critical_value: covariance dimension does not match layout");
    }
    check_covariance(sigma);

    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
    Vector lambda = es.eigenvalues().cwiseMax(0.0);
    const Matrix sampler = es.eigenvectors() * lambda.cwiseSqrt().asDiagonal();

    const int dim = static_cast<int>(sigma.rows());
    std::vector<double> psi_values(mc_draws);
    parallel_for(mc_draws, threads, [&](int lo, int hi) {
        Vector g(dim);
        for (int j = lo; j < hi; ++j) {
            auto eng = rng::engine_for(seed, static_cast<std::uint64_t>(j));
            std::normal_distribution<double> normal;
            for (int k = 0; k < dim; ++k) g[k] = normal(eng);
            psi_values[j] = psi_statistic(sampler * g, layout, params, weights);
        }
    });

    std::sort(psi_values.begin(), psi_values.end());
    // Upper empirical quantile: order statistic ceil((1-alpha)*S), 1-based.
    const int k = std::clamp(static_cast<int>(std::ceil((1.0 - alpha) * mc_draws)), 1, mc_draws);
    return psi_values[k - 1];
}

double normal_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0)) {
        throw std::invalid_argument("normal_quantile: probability must lie in (0, 1)");
    }
    // Acklam's approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (prob < p_low) {
        const double q = std::sqrt(-2.0 * std::log(prob));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (prob <= 1.0 - p_low) {
        const double q = prob - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - prob));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley refinement against the erfc-based CDF.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - prob;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

IntervalReport confidence_interval(const ThetaEstimate& est, const InferenceParams& params) {
    params.validate();
    est.validate();
    if (!est.has_covariance()) {
        throw std::invalid_argument(
            "confidence_interval: estimate has no covariance; run the bootstrap first");
    }
    const TimeLayout& layout = est.layout;
    check_weights(params.estimand_weights, layout);

    const ThetaEstimate eff = params.severity.mode == ViolationMode::Overall
                                  ? transform_theta_to_overall(est)
                                  : est;

    IntervalReport report;
    report.pretest = run_pretest(est, params.severity);

    const auto post = eff.post_block();
    report.point = params.estimand_weights
                       ? chronological_weights(*params.estimand_weights).dot(post)
                       : post.mean();
    report.bias_component = bias_bound(report.pretest.s_pre_hat, layout, params.severity,
                                       params.estimand_weights);
    report.critical_value =
        critical_value(params.alpha, eff.covariance, layout, params.severity, params.seed,
                       params.mc_draws, params.estimand_weights, params.threads);
    // Finite-sample covariance is stored, so the critical value already
    // carries the 1/sqrt(n) factor via degree-1 homogeneity of psi.
    report.noise_component = report.critical_value;
    report.half_width = report.bias_component + report.noise_component;
    report.lower = report.point - report.half_width;
    report.upper = report.point + report.half_width;

    Vector w = Vector::Zero(layout.theta_length());
    if (params.estimand_weights) {
        w.tail(layout.post_length()) = chronological_weights(*params.estimand_weights);
    } else {
        w.tail(layout.post_length()).setConstant(1.0 / layout.post_length());
    }
    const double var_point = std::max(0.0, w.dot(eff.covariance * w));
    const double conv_half = normal_quantile(1.0 - params.alpha / 2.0) * std::sqrt(var_point);
    report.conventional_lower = report.point - conv_half;
    report.conventional_upper = report.point + conv_half;
    return report;
}

}  // namespace didguard
