#include <random>

#include "didguard/core.hpp"
#include "doctest.h"

using namespace didguard;

namespace {
Vector make_vector(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}
}  // namespace

TEST_CASE("TimeLayout arithmetic and bounds") {
    TimeLayout layout(6, 4);
    CHECK(layout.pre_length() == 3);
    CHECK(layout.post_length() == 3);
    CHECK(layout.theta_length() == 5);
    CHECK(layout.pre_block_length() == 2);

    CHECK_THROWS(TimeLayout(6, 2));   // T_pre would be 1
    CHECK_THROWS(TimeLayout(6, 7));   // t0 beyond T
    CHECK_THROWS(TimeLayout(2, 3));

    // (T_pre - 1) + T_post = T - 1 for every admissible pair.
    for (int t = 3; t <= 12; ++t) {
        for (int t0 = 3; t0 <= t; ++t0) {
            TimeLayout l(t, t0);
            CHECK(l.pre_block_length() + l.post_length() == t - 1);
        }
    }
}

TEST_CASE("iterative <-> overall transforms") {
    CHECK(iterative_to_overall(make_vector({1, 2, 3})).isApprox(make_vector({1, 3, 6})));
    CHECK(iterative_to_overall(make_vector({0, 0})).isApprox(make_vector({0, 0}), 0));
    CHECK(iterative_to_overall(make_vector({0.5, -0.5, 0.25}))
              .isApprox(make_vector({0.5, 0.0, 0.25})));

    CHECK(overall_to_iterative(make_vector({1, 3, 6})).isApprox(make_vector({1, 2, 3})));
    CHECK(overall_to_iterative(make_vector({3.25}))[0] == 3.25);
    CHECK(overall_to_iterative(make_vector({0.5, 0.0, 0.25}))
              .isApprox(make_vector({0.5, -0.5, 0.25})));

    Vector bad(2);
    bad << 1.0, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(iterative_to_overall(bad));
    CHECK_THROWS(overall_to_iterative(bad));
}

TEST_CASE("transform round-trip on random vectors") {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    for (int len = 1; len <= 50; ++len) {
        Vector r(len);
        for (int i = 0; i < len; ++i) r[i] = unif(eng);
        const Vector back = overall_to_iterative(iterative_to_overall(r));
        CHECK((back - r).cwiseAbs().maxCoeff() <= 1e-12 * r.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("transform_theta_to_overall") {
    TimeLayout layout(4, 4);  // T_pre = 3, T_post = 1: pre-block (r_2, r_3)
    ThetaEstimate est{layout, make_vector({1, 2, 5}), Matrix::Identity(3, 3), 10};

    const ThetaEstimate overall = transform_theta_to_overall(est);
    CHECK(overall.values.isApprox(make_vector({1, 3, 5})));
    Matrix expected(3, 3);
    expected << 1, 1, 0, 1, 2, 0, 0, 0, 1;
    CHECK(overall.covariance.isApprox(expected, 1e-14));

    est.covariance = Matrix::Zero(3, 3);
    CHECK(transform_theta_to_overall(est).covariance.isZero(0));

    // Single pre entry: the transform is the identity.
    TimeLayout small(3, 3);
    ThetaEstimate tiny{small, make_vector({2, 4}), Matrix::Identity(2, 2), 10};
    const ThetaEstimate same = transform_theta_to_overall(tiny);
    CHECK(same.values.isApprox(tiny.values, 0));
    CHECK(same.covariance.isApprox(tiny.covariance, 0));
}

TEST_CASE("transform preserves covariance symmetry and PSD") {
    std::mt19937_64 eng(11);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
        TimeLayout layout(7, 5);
        const int len = layout.theta_length();
        Matrix a(len, len);
        for (int i = 0; i < len; ++i) {
            for (int j = 0; j < len; ++j) a(i, j) = normal(eng);
        }
        Vector values(len);
        for (int i = 0; i < len; ++i) values[i] = normal(eng);
        ThetaEstimate est{layout, values, a * a.transpose(), 10};
        const ThetaEstimate overall = transform_theta_to_overall(est);
        CHECK_NOTHROW(overall.validate());
    }
}

TEST_CASE("ThetaEstimate validation") {
    TimeLayout layout(4, 4);
    ThetaEstimate est{layout, Vector::Zero(3), Matrix::Identity(3, 3), 10};
    CHECK_NOTHROW(est.validate());

    est.values = Vector::Zero(2);
    CHECK_THROWS(est.validate());
    est.values = Vector::Zero(3);

    est.covariance = Matrix::Identity(3, 3);
    est.covariance(0, 1) = 0.5;  // asymmetric
    CHECK_THROWS(est.validate());

    est.covariance = -Matrix::Identity(3, 3);  // negative definite
    CHECK_THROWS(est.validate());

    est.covariance = Matrix();  // empty covariance is allowed
    CHECK_NOTHROW(est.validate());
}
