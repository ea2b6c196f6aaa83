#include "didguard/severity.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace didguard {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double conjugate_order(double p) {
    if (p == 1.0) return kInf;
    if (std::isinf(p)) return 1.0;
    return p / (p - 1.0);
}
}  // namespace

double severity(const Vector& values, double p) {
    if (values.size() == 0) {
        throw std::invalid_argument("severity: empty vector");
    }
    if (!(p >= 1.0)) {
        throw std::invalid_argument("severity: p must be >= 1");
    }
    if (std::isinf(p)) {
        return values.cwiseAbs().maxCoeff();
    }
    const double m = static_cast<double>(values.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        acc += std::pow(std::abs(values[i]), p);
    }
    return std::pow(acc / m, 1.0 / p);
}

double kappa(int t_post, double p) {
    if (t_post < 1) throw std::invalid_argument("kappa: T_post must be >= 1");
    if (!(p >= 1.0)) throw std::invalid_argument("kappa: p must be >= 1");
    const double m = static_cast<double>(t_post);
    if (p == 1.0) return m;                 // q = inf: max_t t = T_post
    if (std::isinf(p)) return (m + 1) / 2;  // q = 1: mean of 1..T_post
    const double q = conjugate_order(p);
    double acc = 0.0;
    for (int t = 1; t <= t_post; ++t) acc += std::pow(t, q);
    return std::pow(acc / m, 1.0 / q);
}

double kappa_lin(const Vector& weights, double p) {
    if (weights.size() == 0) throw std::invalid_argument("kappa_lin: empty weights");
    if (!(p >= 1.0)) throw std::invalid_argument("kappa_lin: p must be >= 1");
    if (!weights.allFinite()) throw std::invalid_argument("kappa_lin: non-finite weights");
    const int m = static_cast<int>(weights.size());
    // a_t = |c_{T_post - t + 1}| * t for t = 1..T_post
    Vector a(m);
    for (int t = 1; t <= m; ++t) a[t - 1] = std::abs(weights[m - t]) * t;

    if (p == 1.0) return m * a.maxCoeff();      // q = inf
    if (std::isinf(p)) return a.sum();          // q = 1, T_post^{1/p} = 1
    const double q = conjugate_order(p);
    double acc = 0.0;
    for (int t = 0; t < m; ++t) acc += std::pow(a[t], q);
    return std::pow(m, 1.0 / p) * std::pow(acc, 1.0 / q);
}

double bias_bound(double s_pre, const TimeLayout& layout, const SeverityParams& params,
                  const std::optional<Vector>& weights) {
    params.validate();
    if (!(s_pre >= 0.0)) throw std::invalid_argument("bias_bound: s_pre must be >= 0");
    if (weights) {
        if (params.mode == ViolationMode::Overall) {
            throw std::invalid_argument("bias_bound: weighted estimands are supported in iterative mode only");
        }
        return kappa_lin(*weights, params.p) * s_pre;
    }
    if (params.mode == ViolationMode::Overall) return s_pre;
    return kappa(layout.post_length(), params.p) * s_pre;
}

Vector worst_case_post_violations(const TimeLayout& layout, double p, double target_severity) {
    if (!(target_severity > 0.0)) {
        throw std::invalid_argument("worst_case_post_violations: target severity must be > 0");
    }
    const int m = layout.post_length();
    Vector r(m);
    if (p == 1.0) {
        // q = inf limit: all mass on the first post period.
        r.setZero();
        r[0] = m * target_severity;
        return r;
    }
    if (std::isinf(p)) {
        // q = 1: Hoelder equality needs every coordinate at the maximum.
        r.setConstant(target_severity);
        return r;
    }
    const double q = p / (p - 1.0);
    // |r_t|^p proportional to (T_post - t + 1)^q, i.e. r_t ~ (T_post - t + 1)^{q-1}.
    for (int t = 1; t <= m; ++t) r[t - 1] = std::pow(m - t + 1, q - 1.0);
    r *= target_severity / severity(r, p);
    return r;
}

}  // namespace didguard
