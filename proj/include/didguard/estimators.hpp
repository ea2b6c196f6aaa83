#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "didguard/core.hpp"

namespace didguard {

enum class StudyDesign { Panel, RepeatedCrossSection };

struct Observation {
    std::string unit_id;     // may be empty (repeated cross-sections)
    int time = 0;            // 1..T
    bool treated = false;
    double outcome = 0.0;
    std::string cluster_id;  // may be empty
    double weight = 1.0;
};

// Long-format data with its layout. Cells are (group, period) pairs.
struct Dataset {
    std::vector<Observation> rows;
    StudyDesign design = StudyDesign::RepeatedCrossSection;
    TimeLayout layout{3, 3};

    // Checks cell occupancy (>= 2 rows each), weight positivity and, for
    // panels, that every unit appears exactly once per period with constant
    // treatment status.
    void validate() const;
};

enum class ResampleLevel { Cluster, Unit, Row };

enum class PointEstimator { SampleMeans, Twfe };

struct BootstrapConfig {
    int replications = 1000;
    ResampleLevel resample_level = ResampleLevel::Row;
    std::uint64_t seed = 0;
    int threads = 1;
};

// Double differences of weighted cell means: pre-block r_hat relative to the
// previous period, post-block dd_hat relative to period t0 - 1. The plug-in
// covariance is filled for repeated cross-sections; panels get an empty
// covariance and must be paired with the bootstrap.
ThetaEstimate estimate_theta_sample_means(const Dataset& data);

// Saturated two-way fixed-effects OLS with leads (delta_{t0-1} = 0
// normalized) and lags; returns r_hat_t = delta_t - delta_{t-1} and
// beta_hat_t. Requires an unweighted balanced panel. Covariance left empty.
ThetaEstimate estimate_theta_twfe(const Dataset& data);

// Empirical covariance of B resampled point estimates. Resampling keeps all
// rows of a drawn cluster/unit together; resamples with an empty cell are
// redrawn a bounded number of times. Deterministic given the seed and
// independent of the thread count.
Matrix estimate_covariance_bootstrap(const Dataset& data, PointEstimator point,
                                     const BootstrapConfig& cfg);

}  // namespace didguard
