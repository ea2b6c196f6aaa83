#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "didguard/core.hpp"
#include "didguard/estimators.hpp"
#include "didguard/inference.hpp"

namespace didguard::sim {

// Simulation population: nonlinear control trend, scaled sinusoidal
// violations, constant post-treatment level shift.
struct DgpSpec {
    TimeLayout layout{4, 4};
    double s_pre_target = 0.1;
    double threshold_M = 2.0;
    double p = 2.0;
    double trend_alpha = 0.3;
    double ar_rho = 0.7;
    double effect_beta = 2.0;
    double sigma_treated = 2.1;
    double sigma_control = 1.5;
    int n_per_cell = 100;

    // S_post implied by the extrapolation assumption: S_pre when the
    // condition holds, 10 * S_pre when it is violated.
    double s_post_target() const {
        return s_pre_target <= threshold_M ? s_pre_target : 10.0 * s_pre_target;
    }

    void validate() const;
};

struct Population {
    TimeLayout layout{4, 4};
    Vector mean_control;            // E[Y_t(0) | D=0], length T
    Vector mean_treated_untreated;  // E[Y_t(0) | D=1]
    Vector mean_treated;            // E[Y_t(1) | D=1] for t >= t0
    Vector violations_r;            // r_2..r_T
    double true_tau_att = 0.0;
    double true_tau_dd = 0.0;
};

enum class ExperimentKind {
    RejectionCurve,
    ConditionalCoverage,
    ValidReporting,
    ExpectedWidth,
    WidthVsP,
};

std::string to_string(ExperimentKind kind);

struct ScenarioPoint {
    std::string scenario_id;
    std::string x_name;
    double x_value = 0.0;
    DgpSpec dgp;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::RejectionCurve;
    std::vector<ScenarioPoint> grid;
    int replications = 5000;
    double alpha = 0.05;
    int mc_draws = 5000;
    std::uint64_t master_seed = 0;

    void validate() const;
};

struct ResultRow {
    std::string experiment;
    std::string scenario_id;
    std::string x_name;
    double x_value = 0.0;
    std::string metric;
    double value = 0.0;  // NaN marks an undefined conditional quantity
    double mc_se = 0.0;
    long n_conditioning = 0;
};

Population build_population(const DgpSpec& spec);

// Independent normal draws per (group, period) cell; repeated cross-sections.
Dataset sample_dataset(const Population& pop, const DgpSpec& spec, std::uint64_t seed);

// Monte-Carlo experiment driver. Replicate i at grid point g derives its
// randomness from (master_seed, g, i); output is identical for any thread
// count.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, int threads = 1);

// Tidy CSV with columns experiment, scenario_id, x_name, x_value, metric,
// value, mc_se, n_conditioning.
std::string results_to_csv(const std::vector<ResultRow>& rows);

}  // namespace didguard::sim
