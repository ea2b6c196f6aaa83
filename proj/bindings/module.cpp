#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "didguard/estimators.hpp"
#include "didguard/inference.hpp"
#include "didguard/io.hpp"
#include "didguard/severity.hpp"
#include "didguard/sim.hpp"

namespace py = pybind11;
using namespace didguard;

namespace {

ViolationMode mode_from_string(const std::string& text) {
    if (text == "iterative") return ViolationMode::Iterative;
    if (text == "overall") return ViolationMode::Overall;
    throw std::invalid_argument("mode must be 'iterative' or 'overall'");
}

py::dict pretest_dict(const PretestResult& pre) {
    py::dict d;
    d["s_pre_hat"] = pre.s_pre_hat;
    d["threshold_M"] = pre.threshold_M;
    d["phi"] = pre.phi;
    d["margin"] = pre.margin;
    d["mode"] = pre.mode == ViolationMode::Iterative ? "iterative" : "overall";
    return d;
}

py::dict interval_dict(const IntervalReport& report) {
    py::dict d;
    d["point"] = report.point;
    d["half_width"] = report.half_width;
    d["lower"] = report.lower;
    d["upper"] = report.upper;
    d["bias_component"] = report.bias_component;
    d["noise_component"] = report.noise_component;
    d["critical_value"] = report.critical_value;
    d["conventional_lower"] = report.conventional_lower;
    d["conventional_upper"] = report.conventional_upper;
    d["conditionally_valid"] = report.conditionally_valid();
    d["pretest"] = pretest_dict(report.pretest);
    return d;
}

ThetaEstimate make_estimate(const Vector& values, const Matrix& covariance, int total_periods,
                            int treatment_time, long effective_n) {
    return ThetaEstimate{TimeLayout(total_periods, treatment_time), values, covariance,
                         effective_n};
}

}  // namespace

PYBIND11_MODULE(_didguard, m) {
    m.doc() = "Pre-trend severity tests and conditionally valid intervals for "
              "difference-in-differences";

    m.def("severity", &severity, py::arg("values"), py::arg("p"),
          "Normalized p-aggregate of absolute violations; max for p = inf.");
    m.def("kappa", &kappa, py::arg("t_post"), py::arg("p"),
          "Severity-to-bias conversion constant for the uniform post average.");
    m.def("kappa_lin", &kappa_lin, py::arg("weights"), py::arg("p"),
          "Weighted-estimand constant; weights listed most recent period first.");
    m.def(
        "worst_case_post_violations",
        [](int total_periods, int treatment_time, double p, double s) {
            return worst_case_post_violations(TimeLayout(total_periods, treatment_time), p, s);
        },
        py::arg("total_periods"), py::arg("treatment_time"), py::arg("p"), py::arg("severity"),
        "Post-period violations attaining the sharp bias bound.");
    m.def("normal_quantile", &normal_quantile, py::arg("prob"));

    m.def(
        "critical_value",
        [](double alpha, const Matrix& sigma, int treatment_time, double p,
           const std::string& mode, std::uint64_t seed, int mc_draws,
           std::optional<Vector> weights, int threads) {
            const TimeLayout layout(static_cast<int>(sigma.rows()) + 1, treatment_time);
            const SeverityParams params{p, 0.0, mode_from_string(mode)};
            return critical_value(alpha, sigma, layout, params, seed, mc_draws, weights, threads);
        },
        py::arg("alpha"), py::arg("sigma"), py::arg("treatment_time"), py::arg("p") = 2.0,
        py::arg("mode") = "iterative", py::arg("seed") = 0, py::arg("mc_draws") = 5000,
        py::arg("weights") = std::nullopt, py::arg("threads") = 1,
        "Monte-Carlo noise quantile for a (T-1) x (T-1) covariance.");

    m.def(
        "pretest",
        [](const Vector& values, const Matrix& covariance, int total_periods, int treatment_time,
           double threshold_M, double p, const std::string& mode, long effective_n) {
            const ThetaEstimate est =
                make_estimate(values, covariance, total_periods, treatment_time, effective_n);
            return pretest_dict(
                run_pretest(est, SeverityParams{p, threshold_M, mode_from_string(mode)}));
        },
        py::arg("values"), py::arg("covariance"), py::arg("total_periods"),
        py::arg("treatment_time"), py::arg("threshold_M"), py::arg("p") = 2.0,
        py::arg("mode") = "iterative", py::arg("effective_n") = 1);

    m.def(
        "confidence_interval",
        [](const Vector& values, const Matrix& covariance, int total_periods, int treatment_time,
           double threshold_M, double p, const std::string& mode, double alpha,
           std::uint64_t seed, int mc_draws, std::optional<Vector> weights, int threads,
           long effective_n) {
            const ThetaEstimate est =
                make_estimate(values, covariance, total_periods, treatment_time, effective_n);
            InferenceParams params;
            params.alpha = alpha;
            params.mc_draws = mc_draws;
            params.seed = seed;
            params.threads = threads;
            params.severity = SeverityParams{p, threshold_M, mode_from_string(mode)};
            params.estimand_weights = std::move(weights);
            return interval_dict(confidence_interval(est, params));
        },
        py::arg("values"), py::arg("covariance"), py::arg("total_periods"),
        py::arg("treatment_time"), py::arg("threshold_M"), py::arg("p") = 2.0,
        py::arg("mode") = "iterative", py::arg("alpha") = 0.05, py::arg("seed") = 0,
        py::arg("mc_draws") = 5000, py::arg("weights") = std::nullopt, py::arg("threads") = 1,
        py::arg("effective_n") = 1,
        "Pretest plus the conditionally valid interval for theta = (r_pre, dd_post).");

    m.def(
        "analyze_csv",
        [](const std::string& path, int treatment_time, double threshold_M, double p,
           const std::string& mode, double alpha, std::uint64_t seed, int mc_draws,
           std::optional<Vector> weights, int threads, int bootstrap_reps) {
            Dataset data = io::load_dataset_csv(path, treatment_time);
            ThetaEstimate est = estimate_theta_sample_means(data);
            if (!est.has_covariance()) {
                BootstrapConfig cfg;
                cfg.replications = bootstrap_reps;
                cfg.seed = seed;
                cfg.threads = threads;
                cfg.resample_level =
                    data.design == StudyDesign::Panel ? ResampleLevel::Unit : ResampleLevel::Row;
                est.covariance =
                    estimate_covariance_bootstrap(data, PointEstimator::SampleMeans, cfg);
            }
            InferenceParams params;
            params.alpha = alpha;
            params.mc_draws = mc_draws;
            params.seed = seed;
            params.threads = threads;
            params.severity = SeverityParams{p, threshold_M, mode_from_string(mode)};
            params.estimand_weights = std::move(weights);
            const IntervalReport report = confidence_interval(est, params);

            py::dict out;
            out["theta"] = est.values;
            out["covariance"] = est.covariance;
            out["effective_n"] = est.effective_n;
            out["total_periods"] = est.layout.total_periods();
            out["treatment_time"] = est.layout.treatment_time();
            out["interval"] = interval_dict(report);
            return out;
        },
        py::arg("path"), py::arg("treatment_time"), py::arg("threshold_M"), py::arg("p") = 2.0,
        py::arg("mode") = "iterative", py::arg("alpha") = 0.05, py::arg("seed") = 0,
        py::arg("mc_draws") = 5000, py::arg("weights") = std::nullopt, py::arg("threads") = 1,
        py::arg("bootstrap_reps") = 1000,
        "End-to-end analysis of a long-format CSV (see the CLI schema).");

    m.def(
        "simulate_rejection_curve",
        [](std::vector<double> s_pre_values, double threshold_M, int total_periods,
           int treatment_time, int n_per_cell, double p, int replications,
           std::uint64_t master_seed, int threads) {
            sim::ExperimentSpec spec;
            spec.kind = sim::ExperimentKind::RejectionCurve;
            spec.replications = replications;
            spec.master_seed = master_seed;
            for (double s : s_pre_values) {
                sim::ScenarioPoint point;
                point.dgp.layout = TimeLayout(total_periods, treatment_time);
                point.dgp.threshold_M = threshold_M;
                point.dgp.p = p;
                point.dgp.s_pre_target = s;
                point.dgp.n_per_cell = n_per_cell;
                point.scenario_id = "s_pre=" + std::to_string(s);
                point.x_name = "s_pre";
                point.x_value = s;
                spec.grid.push_back(std::move(point));
            }
            const auto rows = sim::run_experiment(spec, threads);
            py::list out;
            for (const auto& row : rows) {
                py::dict d;
                d["s_pre"] = row.x_value;
                d["rejection_rate"] = row.value;
                d["mc_se"] = row.mc_se;
                out.append(std::move(d));
            }
            return out;
        },
        py::arg("s_pre_values"), py::arg("threshold_M"), py::arg("total_periods") = 4,
        py::arg("treatment_time") = 4, py::arg("n_per_cell") = 100, py::arg("p") = 2.0,
        py::arg("replications") = 1000, py::arg("master_seed") = 0, py::arg("threads") = 1,
        "Pretest rejection rate over a severity grid (deterministic in the seed).");
}
