#include "didguard/sim.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "didguard/parallel.hpp"
#include "didguard/rng.hpp"
#include "didguard/severity.hpp"

namespace didguard::sim {

namespace {

Vector scaled_violations(const Vector& prelim, double target, double p, const char* which) {
    if (target == 0.0) return Vector::Zero(prelim.size());
    const double base = severity(prelim, p);
    if (base == 0.0) {
        throw std::runtime_error(std::string("build_population: preliminary ") + which +
                                 " severity is zero, cannot rescale");
    }
    return (target / base) * prelim;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

void DgpSpec::validate() const {
    if (!(s_pre_target >= 0.0)) throw std::invalid_argument("DgpSpec: S_pre must be >= 0");
    if (!(p >= 1.0)) throw std::invalid_argument("DgpSpec: p must be >= 1");
    if (!(sigma_treated > 0.0) || !(sigma_control > 0.0)) {
        throw std::invalid_argument("DgpSpec: noise scales must be positive");
    }
    if (n_per_cell < 1) throw std::invalid_argument("DgpSpec: n_per_cell must be positive");
}

void ExperimentSpec::validate() const {
    if (grid.empty()) throw std::invalid_argument("ExperimentSpec: empty grid");
    if (replications < 1) throw std::invalid_argument("ExperimentSpec: replications must be >= 1");
    if (kind != ExperimentKind::WidthVsP && replications < 100) {
        throw std::invalid_argument("ExperimentSpec: replications must be >= 100");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ExperimentSpec: bad alpha");
    for (const auto& point : grid) point.dgp.validate();
}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::RejectionCurve: return "rejection_curve";
        case ExperimentKind::ConditionalCoverage: return "conditional_coverage";
        case ExperimentKind::ValidReporting: return "valid_reporting";
        case ExperimentKind::ExpectedWidth: return "expected_width";
        case ExperimentKind::WidthVsP: return "width_vs_p";
    }
    return "unknown";
}

Population build_population(const DgpSpec& spec) {
    spec.validate();
    const int T = spec.layout.total_periods();
    const int t0 = spec.layout.treatment_time();
    const double log_t = std::log(static_cast<double>(T));

    // Preliminary violations, indexed t = 2..T.
    Vector prelim(T - 1);
    for (int t = 2; t <= T; ++t) {
        prelim[t - 2] = log_t * (std::sin(t) + std::cos(t / 2.0));
    }
    const int pre_len = spec.layout.pre_block_length();
    Vector r(T - 1);
    r.head(pre_len) = scaled_violations(prelim.head(pre_len), spec.s_pre_target, spec.p, "pre");
    r.tail(T - t0 + 1) =
        scaled_violations(prelim.tail(T - t0 + 1), spec.s_post_target(), spec.p, "post");

    Population pop;
    pop.layout = spec.layout;
    pop.violations_r = r;
    pop.mean_control.resize(T);
    pop.mean_treated_untreated.resize(T);
    pop.mean_treated.resize(T);

    double m = 0.0;  // recursion starts at m_0 = 0
    double cum_r = 0.0;
    for (int t = 1; t <= T; ++t) {
        m = spec.ar_rho * m + spec.trend_alpha * t + log_t * (std::cos(t) + std::sin(t / 2.0));
        if (t >= 2) cum_r += r[t - 2];  // r_1 = 0
        pop.mean_control[t - 1] = m;
        pop.mean_treated_untreated[t - 1] = m + cum_r;
        pop.mean_treated[t - 1] =
            pop.mean_treated_untreated[t - 1] + (t >= t0 ? spec.effect_beta : 0.0);
    }

    pop.true_tau_att = spec.effect_beta;
    // The DD estimand picks up the average accumulated violation relative
    // to t0 - 1 on top of the effect.
    double gap = 0.0;
    double run = 0.0;
    for (int t = t0; t <= T; ++t) {
        run += r[t - 2];
        gap += run;
    }
    pop.true_tau_dd = spec.effect_beta + gap / spec.layout.post_length();
    return pop;
}

Dataset sample_dataset(const Population& pop, const DgpSpec& spec, std::uint64_t seed) {
    const int T = pop.layout.total_periods();
    const int t0 = pop.layout.treatment_time();

    Dataset data;
    data.design = StudyDesign::RepeatedCrossSection;
    data.layout = pop.layout;
    data.rows.reserve(static_cast<std::size_t>(2 * T) * spec.n_per_cell);

    int cell = 0;
    for (int d = 0; d <= 1; ++d) {
        for (int t = 1; t <= T; ++t, ++cell) {
            const double mean = d == 0 ? pop.mean_control[t - 1]
                                : t >= t0 ? pop.mean_treated[t - 1]
                                          : pop.mean_treated_untreated[t - 1];
            const double sigma = d == 0 ? spec.sigma_control : spec.sigma_treated;
            auto eng = rng::engine_for(seed, static_cast<std::uint64_t>(cell));
            std::normal_distribution<double> normal(mean, sigma);
            for (int i = 0; i < spec.n_per_cell; ++i) {
                data.rows.push_back(Observation{"", t, d == 1, normal(eng), "", 1.0});
            }
        }
    }
    return data;
}

namespace {

struct Replicate {
    int phi = 1;
    bool covered = false;
    bool conventional_covered = false;
    double width = 0.0;
};

double proportion_se(double p_hat, long n) {
    return n > 0 ? std::sqrt(p_hat * (1.0 - p_hat) / n) : 0.0;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, int threads) {
    spec.validate();
    std::vector<ResultRow> out;
    const bool needs_interval = spec.kind != ExperimentKind::RejectionCurve;

    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
        const ScenarioPoint& point = spec.grid[g];
        const Population pop = build_population(point.dgp);
        const SeverityParams sev{point.dgp.p, point.dgp.threshold_M, ViolationMode::Iterative};

        const int reps = spec.replications;
        std::vector<Replicate> results(reps);
        parallel_for(reps, threads, [&](int lo, int hi) {
            for (int i = lo; i < hi; ++i) {
                // WidthVsP reuses the same draw across the p sweep.
                const std::uint64_t seed =
                    spec.kind == ExperimentKind::WidthVsP
                        ? rng::mix(spec.master_seed, 0, static_cast<std::uint64_t>(i))
                        : rng::mix(spec.master_seed, static_cast<std::uint64_t>(g),
                                   static_cast<std::uint64_t>(i));
                const Dataset data = sample_dataset(pop, point.dgp, seed);
                const ThetaEstimate est = estimate_theta_sample_means(data);

                Replicate& rep = results[i];
                if (!needs_interval) {
                    rep.phi = run_pretest(est, sev).phi;
                    continue;
                }
                InferenceParams params;
                params.alpha = spec.alpha;
                params.mc_draws = spec.mc_draws;
                params.seed = rng::mix(seed, 0x1f);
                params.severity = sev;
                const IntervalReport report = confidence_interval(est, params);
                rep.phi = report.pretest.phi;
                rep.covered = pop.true_tau_att >= report.lower && pop.true_tau_att <= report.upper;
                rep.conventional_covered = pop.true_tau_att >= report.conventional_lower &&
                                           pop.true_tau_att <= report.conventional_upper;
                rep.width = 2.0 * report.half_width;
            }
        });

        long n_pass = 0, n_cov = 0, n_conv_cov = 0, n_valid = 0;
        double width_sum = 0.0, width_sq = 0.0;
        for (const auto& rep : results) {
            if (rep.phi == 0) {
                ++n_pass;
                if (rep.covered) ++n_cov;
                if (rep.conventional_covered) ++n_conv_cov;
            }
            if (rep.phi == 0 && rep.covered) ++n_valid;
            width_sum += rep.width;
            width_sq += rep.width * rep.width;
        }
        const long n = reps;
        auto emit = [&](const std::string& metric, double value, double se, long cond) {
            out.push_back(ResultRow{to_string(spec.kind), point.scenario_id, point.x_name,
                                    point.x_value, metric, value, se, cond});
        };

        const double reject = 1.0 - static_cast<double>(n_pass) / n;
        emit("rejection_rate", reject, proportion_se(reject, n), n);
        if (needs_interval) {
            const double nan = std::nan("");
            if (n_pass > 0) {
                const double cov = static_cast<double>(n_cov) / n_pass;
                const double conv = static_cast<double>(n_conv_cov) / n_pass;
                emit("conditional_coverage", cov, proportion_se(cov, n_pass), n_pass);
                emit("conventional_conditional_coverage", conv, proportion_se(conv, n_pass),
                     n_pass);
            } else {
                emit("conditional_coverage", nan, nan, 0);
                emit("conventional_conditional_coverage", nan, nan, 0);
            }
            const double valid = static_cast<double>(n_valid) / n;
            emit("valid_reporting", valid, proportion_se(valid, n), n);
            const double mean_width = width_sum / n;
            const double var_width =
                n > 1 ? std::max(0.0, (width_sq - n * mean_width * mean_width) / (n - 1)) : 0.0;
            emit("expected_width", mean_width, std::sqrt(var_width / n), n);
        }
    }
    return out;
}

std::string results_to_csv(const std::vector<ResultRow>& rows) {
    std::string csv = "experiment,scenario_id,x_name,x_value,metric,value,mc_se,n_conditioning\n";
    for (const auto& row : rows) {
        csv += row.experiment + ',' + row.scenario_id + ',' + row.x_name + ',' +
               format_double(row.x_value) + ',' + row.metric + ',' + format_double(row.value) +
               ',' + format_double(row.mc_se) + ',' + std::to_string(row.n_conditioning) + '\n';
    }
    return csv;
}

}  // namespace didguard::sim
