#pragma once

#include <Eigen/Dense>
#include <string>

namespace didguard {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Relative eigenvalue tolerance below which a covariance matrix is rejected
// as not PSD; eigenvalues in [-tol*lambda_max, 0] are treated as zero.
inline constexpr double kPsdRelTol = 1e-8;
inline constexpr double kSymmetryTol = 1e-10;

// Time indexing backbone: periods 1..T, treatment starts at t0.
// The last pre-treatment period t0-1 is the reference period everywhere.
class TimeLayout {
  public:
    TimeLayout(int total_periods, int treatment_time);

    int total_periods() const { return total_periods_; }
    int treatment_time() const { return treatment_time_; }
    int pre_length() const { return treatment_time_ - 1; }
    int post_length() const { return total_periods_ - pre_length(); }

    // Length of the theta vector (r_2..r_{t0-1}, dd_{t0}..dd_T) = T - 1.
    int theta_length() const { return total_periods_ - 1; }

    // Number of pre-block entries (r_2..r_{t0-1}) = T_pre - 1.
    int pre_block_length() const { return pre_length() - 1; }

    friend bool operator==(const TimeLayout&, const TimeLayout&) = default;

  private:
    int total_periods_;
    int treatment_time_;
};

enum class ViolationMode { Iterative, Overall };

std::string to_string(ViolationMode mode);

// Norm order p in [1, inf] with M and the iterative/overall choice.
struct SeverityParams {
    double p = 2.0;  // may be +infinity
    double threshold_M = 0.0;
    ViolationMode mode = ViolationMode::Iterative;

    void validate() const;
};

// The estimated vector theta_hat = (r_2..r_{t0-1}, dd_{t0}..dd_T) together
// with its finite-sample covariance. An empty (0x0) covariance means "not
// available, pair with the bootstrap".
struct ThetaEstimate {
    TimeLayout layout;
    Vector values;
    Matrix covariance;  // finite-sample covariance of theta_hat itself
    long effective_n = 1;

    bool has_covariance() const { return covariance.size() > 0; }
    Eigen::VectorBlock<const Vector> pre_block() const {
        return values.head(layout.pre_block_length());
    }
    Eigen::VectorBlock<const Vector> post_block() const {
        return values.tail(layout.post_length());
    }

    // Throws if dimensions disagree with the layout, the covariance is
    // asymmetric beyond 1e-10, or it has an eigenvalue below
    // -1e-8 * lambda_max.
    void validate() const;
};

// Checks symmetry and the PSD tolerance; throws std::invalid_argument.
void check_covariance(const Matrix& sigma);

// Delta_t = sum_{s<=t} r_s with r_1 = 0. Input and output indexed t = 2..T.
Vector iterative_to_overall(const Vector& r);

// Inverse of the above: r_2 = Delta_2, r_t = Delta_t - Delta_{t-1}.
Vector overall_to_iterative(const Vector& delta);

// Rewrites an iterative-mode estimate in overall terms: cumulative sums on
// the pre-block, covariance mapped through the same linear transform.
ThetaEstimate transform_theta_to_overall(const ThetaEstimate& est);

}  // namespace didguard
