#include "didguard/core.hpp"

#include <cmath>
#include <stdexcept>

namespace didguard {

TimeLayout::TimeLayout(int total_periods, int treatment_time)
    : total_periods_(total_periods), treatment_time_(treatment_time) {
    if (total_periods < 3) {
        throw std::invalid_argument("TimeLayout: need at least 3 periods");
    }
    if (treatment_time < 3 || treatment_time > total_periods) {
        throw std::invalid_argument(
            "TimeLayout: treatment time must lie in [3, T] so that T_pre >= 2");
    }
}

std::string to_string(ViolationMode mode) {
    return mode == ViolationMode::Iterative ? "iterative" : "overall";
}

void SeverityParams::validate() const {
    if (!(p >= 1.0)) {
        throw std::invalid_argument("SeverityParams: p must be >= 1");
    }
    if (!(threshold_M >= 0.0) || !std::isfinite(threshold_M)) {
        throw std::invalid_argument("SeverityParams: threshold M must be a finite nonnegative real");
    }
}

void check_covariance(const Matrix& sigma) {
    if (sigma.rows() != sigma.cols()) {
        throw std::invalid_argument("covariance matrix must be square");
    }
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if (((sigma - sigma.transpose()).cwiseAbs().maxCoeff()) > kSymmetryTol * scale) {
        throw std::invalid_argument("covariance matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
    const double lambda_max = es.eigenvalues().maxCoeff();
    const double lambda_min = es.eigenvalues().minCoeff();
    if (lambda_min < -kPsdRelTol * std::max(lambda_max, 0.0)) {
        throw std::invalid_argument("covariance matrix is not PSD within tolerance");
    }
}

void ThetaEstimate::validate() const {
    if (values.size() != layout.theta_length()) {
        throw std::invalid_argument("ThetaEstimate: values length does not match layout");
    }
    if (effective_n < 1) {
        throw std::invalid_argument("ThetaEstimate: effective_n must be positive");
    }
    if (has_covariance()) {
        if (covariance.rows() != layout.theta_length()) {
            throw std::invalid_argument("ThetaEstimate: covariance dimension does not match layout");
        }
        check_covariance(covariance);
    }
}

Vector iterative_to_overall(const Vector& r) {
    if (!r.allFinite()) {
        throw std::invalid_argument("iterative_to_overall: non-finite input");
    }
    Vector delta(r.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        acc += r[i];
        delta[i] = acc;
    }
    return delta;
}

Vector overall_to_iterative(const Vector& delta) {
    if (!delta.allFinite()) {
        throw std::invalid_argument("overall_to_iterative: non-finite input");
    }
    Vector r(delta.size());
    for (Eigen::Index i = delta.size() - 1; i > 0; --i) {
        r[i] = delta[i] - delta[i - 1];
    }
    if (delta.size() > 0) r[0] = delta[0];
    return r;
}

ThetaEstimate transform_theta_to_overall(const ThetaEstimate& est) {
    est.validate();
    const int pre = est.layout.pre_block_length();
    const int len = est.layout.theta_length();

    ThetaEstimate out = est;
    out.values.head(pre) = iterative_to_overall(est.values.head(pre));
    if (est.has_covariance()) {
        Matrix l = Matrix::Identity(len, len);
        for (int i = 0; i < pre; ++i) {
            for (int j = 0; j < i; ++j) l(i, j) = 1.0;
        }
        out.covariance = l * est.covariance * l.transpose();
    }
    return out;
}

}  // namespace didguard
