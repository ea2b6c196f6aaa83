// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.
// Usage: acceptance <cli-binary> <configs-dir>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "didguard/estimators.hpp"
#include "didguard/inference.hpp"
#include "didguard/severity.hpp"
#include "didguard/sim.hpp"

using namespace didguard;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
int g_threads = 4;
std::string g_cli;
std::string g_configs;
std::vector<std::string> g_notes;

void note(const std::string& text) { g_notes.push_back(text); }

double analytic_kappa(int m, double p) {
    if (p == 1.0) return m;
    if (p == 2.0) return std::sqrt((m + 1.0) * (2.0 * m + 1.0) / 6.0);
    return (m + 1.0) / 2.0;  // p = inf
}

// ------------------------------------------------------------------------

bool criterion_kappa_closed_forms() {
    for (int m = 1; m <= 10; ++m) {
        for (double p : {1.0, 2.0, kInf}) {
            if (std::abs(kappa(m, p) - analytic_kappa(m, p)) > 1e-12) {
                note("kappa(" + std::to_string(m) + ") mismatch");
                return false;
            }
        }
    }
    return true;
}

double induced_gap(const Vector& r) {
    double gap = 0.0, run = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        run += r[i];
        gap += run;
    }
    return std::abs(gap) / static_cast<double>(r.size());
}

bool criterion_sharpness() {
    for (int m = 1; m <= 6; ++m) {
        TimeLayout layout(3 + m, 4);
        for (double p : {1.0, 2.0, 3.0, kInf}) {
            const double s = 0.7;
            const Vector r = worst_case_post_violations(layout, p, s);
            const double bound = kappa(m, p) * s;
            if (std::abs(severity(r, p) - s) > 1e-10 || std::abs(induced_gap(r) - bound) > 1e-10) {
                note("bound not attained at T_post=" + std::to_string(m));
                return false;
            }
        }
    }
    std::mt19937_64 eng(2024);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 10000; ++trial) {
        const int m = 1 + trial % 6;
        TimeLayout layout(3 + m, 4);
        Vector r(m);
        for (int i = 0; i < m; ++i) r[i] = normal(eng);
        for (double p : {1.0, 2.0, 3.0, kInf}) {
            const double s = severity(r, p);
            if (s > 0.0 && induced_gap(r) > kappa(m, p) * s + 1e-10) {
                note("random vector beat the bound");
                return false;
            }
        }
    }
    return true;
}

bool criterion_twfe_equivalence() {
    std::mt19937_64 eng(7);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> total_dist(3, 6);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int total = total_dist(eng);
        std::uniform_int_distribution<int> t0_dist(3, total);
        const TimeLayout layout(total, t0_dist(eng));
        std::uniform_int_distribution<int> n_dist(2, 20);
        const int per_group = n_dist(eng);

        Dataset data;
        data.design = StudyDesign::Panel;
        data.layout = layout;
        for (int d = 0; d <= 1; ++d) {
            for (int u = 0; u < per_group; ++u) {
                const std::string id = (d ? "t" : "c") + std::to_string(u);
                const double level = 3.0 * normal(eng);
                for (int t = 1; t <= total; ++t) {
                    data.rows.push_back({id, t, d == 1, level + normal(eng), id, 1.0});
                }
            }
        }
        const Vector a = estimate_theta_sample_means(data).values;
        const Vector b = estimate_theta_twfe(data).values;
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
    }
    note("max OLS vs means deviation " + std::to_string(worst));
    return worst <= 1e-8;
}

bool criterion_critical_value_oracle() {
    // T_pre = 2, T_post = 1: psi(Z) = |Z_1| + |Z_2| regardless of p.
    const TimeLayout layout(3, 3);
    const SeverityParams params{2.0, 1.0, ViolationMode::Iterative};
    const double f = critical_value(0.05, Matrix::Identity(2, 2), layout, params, 11, 5000,
                                    std::nullopt, g_threads);

    std::mt19937_64 eng(123456);
    std::normal_distribution<double> normal;
    std::vector<double> draws(1000000);
    for (auto& d : draws) d = std::abs(normal(eng)) + std::abs(normal(eng));
    std::nth_element(draws.begin(), draws.begin() + 949999, draws.end());
    const double oracle = draws[949999];
    note("f = " + std::to_string(f) + ", brute force = " + std::to_string(oracle));
    if (std::abs(f - oracle) > 0.02) return false;

    std::mt19937_64 meng(13);
    Matrix a(2, 2);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) a(i, j) = normal(meng);
    }
    const Matrix sigma = a * a.transpose();
    const double base = critical_value(0.05, sigma, layout, params, 3, 5000);
    const double scaled = critical_value(0.05, 4.0 * sigma, layout, params, 3, 5000);
    if (std::abs(scaled - 2.0 * base) > 1e-12 * std::abs(base)) {
        note("scale equivariance violated");
        return false;
    }
    return true;
}

sim::ExperimentSpec figure2_design(sim::ExperimentKind kind, int replications) {
    sim::ExperimentSpec spec;
    spec.kind = kind;
    spec.replications = replications;
    spec.master_seed = 424242;
    return spec;
}

sim::ScenarioPoint figure2_point(double s_pre, int n, const std::string& x_name, double x_value) {
    sim::ScenarioPoint point;
    point.dgp.layout = TimeLayout(4, 4);  // T_pre = 3, T_post = 1
    point.dgp.threshold_M = 2.0;
    point.dgp.p = 2.0;
    point.dgp.s_pre_target = s_pre;
    point.dgp.n_per_cell = n;
    point.scenario_id = x_name + "=" + std::to_string(x_value);
    point.x_name = x_name;
    point.x_value = x_value;
    return point;
}

double metric_value(const std::vector<sim::ResultRow>& rows, const std::string& scenario,
                    const std::string& metric, double* se = nullptr) {
    for (const auto& row : rows) {
        if (row.scenario_id == scenario && row.metric == metric) {
            if (se) *se = row.mc_se;
            return row.value;
        }
    }
    return std::nan("");
}

bool criterion_test_consistency() {
    sim::ExperimentSpec spec = figure2_design(sim::ExperimentKind::RejectionCurve, 2000);
    for (int n : {100, 400, 1600}) {
        for (double s : {1.5, 2.5}) {
            auto point = figure2_point(s, n, "n", n);
            point.scenario_id = "s=" + std::to_string(s) + ",n=" + std::to_string(n);
            spec.grid.push_back(point);
        }
    }
    const auto rows = sim::run_experiment(spec, g_threads);

    const double low = metric_value(rows, "s=1.500000,n=400", "rejection_rate");
    const double high = metric_value(rows, "s=2.500000,n=400", "rejection_rate");
    note("rejection at n=400: " + std::to_string(low) + " (S=1.5), " + std::to_string(high) +
         " (S=2.5)");
    if (!(low <= 0.05 && high >= 0.95)) return false;

    // |rate - target| nonincreasing in n up to 2 MC-se at both offsets.
    for (double s : {1.5, 2.5}) {
        const double target = s > 2.0 ? 1.0 : 0.0;
        double prev_err = kInf, prev_se = 0.0;
        for (int n : {100, 400, 1600}) {
            double se = 0.0;
            const double rate = metric_value(
                rows, "s=" + std::to_string(s) + ",n=" + std::to_string(n), "rejection_rate", &se);
            const double err = std::abs(rate - target);
            if (err > prev_err + 2.0 * std::sqrt(se * se + prev_se * prev_se)) {
                note("rejection curve not sharpening at S=" + std::to_string(s));
                return false;
            }
            prev_err = err;
            prev_se = se;
        }
    }
    return true;
}

bool criterion_conditional_coverage() {
    sim::ExperimentSpec spec = figure2_design(sim::ExperimentKind::ConditionalCoverage, 1000);
    spec.grid.push_back(figure2_point(1.5, 200, "s_pre", 1.5));
    const auto rows = sim::run_experiment(spec, g_threads);
    const double ours = metric_value(rows, spec.grid[0].scenario_id, "conditional_coverage");
    const double conventional =
        metric_value(rows, spec.grid[0].scenario_id, "conventional_conditional_coverage");
    note("conditional coverage: ours " + std::to_string(ours) + ", conventional " +
         std::to_string(conventional));
    return ours >= 0.94 && conventional <= 0.10;
}

bool criterion_valid_reporting() {
    sim::ExperimentSpec spec = figure2_design(sim::ExperimentKind::ValidReporting, 1000);
    for (int n : {100, 400, 1600}) {
        spec.grid.push_back(figure2_point(1.5, n, "n", n));
    }
    const auto rows = sim::run_experiment(spec, g_threads);
    double prev = -kInf, prev_se = 0.0;
    double last = 0.0;
    for (int n : {100, 400, 1600}) {
        double se = 0.0;
        last = metric_value(rows, "n=" + std::to_string(static_cast<double>(n)), "valid_reporting",
                            &se);
        if (last < prev - 2.0 * std::sqrt(se * se + prev_se * prev_se)) {
            note("valid reporting not nondecreasing in n");
            return false;
        }
        prev = last;
        prev_se = se;
    }
    note("valid reporting at n=1600: " + std::to_string(last));
    return last >= 0.93;
}

sim::ScenarioPoint width_point(int t_pre, double p, int replicate_kind_x) {
    sim::ScenarioPoint point;
    point.dgp.layout = TimeLayout(t_pre + 4, t_pre + 1);  // T_post = 4
    point.dgp.s_pre_target = 0.1;
    point.dgp.threshold_M = 100.0;
    point.dgp.p = p;
    point.dgp.n_per_cell = 100;
    point.x_name = replicate_kind_x == 0 ? "t_pre" : "p";
    point.x_value = replicate_kind_x == 0 ? t_pre : p;
    std::ostringstream id;
    id << "p=" << p << ",t_pre=" << t_pre;
    point.scenario_id = id.str();
    return point;
}

bool criterion_width_shapes() {
    sim::ExperimentSpec spec = figure2_design(sim::ExperimentKind::ExpectedWidth, 500);
    spec.mc_draws = 2000;
    spec.grid.push_back(width_point(3, 1.0, 0));
    spec.grid.push_back(width_point(50, 1.0, 0));
    spec.grid.push_back(width_point(5, kInf, 0));
    spec.grid.push_back(width_point(100, kInf, 0));
    const auto rows = sim::run_experiment(spec, g_threads);

    const double w1_short = metric_value(rows, "p=1,t_pre=3", "expected_width");
    const double w1_long = metric_value(rows, "p=1,t_pre=50", "expected_width");
    const double winf_short = metric_value(rows, "p=inf,t_pre=5", "expected_width");
    const double winf_long = metric_value(rows, "p=inf,t_pre=100", "expected_width");
    note("width p=1: " + std::to_string(w1_short) + " -> " + std::to_string(w1_long) +
         "; p=inf: " + std::to_string(winf_short) + " -> " + std::to_string(winf_long));
    if (!(w1_long < w1_short) || !(winf_long > winf_short)) return false;

    // Single-draw width across the p sweep: interior minimum in [1.2, 4].
    sim::ExperimentSpec sweep = figure2_design(sim::ExperimentKind::WidthVsP, 1);
    sweep.mc_draws = 5000;
    const std::vector<double> p_grid = {1.0, 1.2, 1.4, 1.7, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0};
    for (double p : p_grid) sweep.grid.push_back(width_point(10, p, 1));
    const auto widths = sim::run_experiment(sweep, g_threads);

    int best = 0;
    double best_width = kInf;
    for (std::size_t i = 0; i < sweep.grid.size(); ++i) {
        const double w = metric_value(widths, sweep.grid[i].scenario_id, "expected_width");
        if (w < best_width) {
            best_width = w;
            best = static_cast<int>(i);
        }
    }
    note("width-vs-p minimum at p = " + std::to_string(p_grid[best]));
    return best > 0 && best + 1 < static_cast<int>(p_grid.size()) && p_grid[best] >= 1.2 &&
           p_grid[best] <= 4.0;
}

bool criterion_failure_regime() {
    sim::ExperimentSpec spec = figure2_design(sim::ExperimentKind::ConditionalCoverage, 1000);
    spec.grid.push_back(figure2_point(2.5, 200, "s_pre", 2.5));
    const auto rows = sim::run_experiment(spec, g_threads);
    const double ours = metric_value(rows, spec.grid[0].scenario_id, "conditional_coverage");
    const double conventional =
        metric_value(rows, spec.grid[0].scenario_id, "conventional_conditional_coverage");
    note("failure-regime conditional coverage: ours " + std::to_string(ours) + ", conventional " +
         std::to_string(conventional));
    // NaN (no conditioning replicates) would also be honest, but the design
    // leaves enough passes to measure; require a real, low number.
    return ours <= 0.50 && conventional <= 0.50;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

bool criterion_determinism() {
    const std::string config = g_configs + "/smoke.conf";
    std::vector<std::string> outputs;
    for (int round = 0; round < 2; ++round) {
        for (int threads : {1, 8}) {
            const std::string out_dir =
                "/tmp/didguard_acceptance_" + std::to_string(round) + "_" + std::to_string(threads);
            const std::string cmd = "'" + g_cli + "' simulate --config '" + config +
                                    "' --out-dir '" + out_dir + "' --threads " +
                                    std::to_string(threads) + " > /dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0) {
                note("simulate run failed: " + cmd);
                return false;
            }
            outputs.push_back(read_file(out_dir + "/conditional_coverage.csv"));
        }
    }
    for (const auto& csv : outputs) {
        if (csv.empty() || csv != outputs[0]) {
            note("CSV outputs differ across runs/threads");
            return false;
        }
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: acceptance <cli-binary> <configs-dir>\n");
        return 2;
    }
    g_cli = argv[1];
    g_configs = argv[2];
    g_threads = std::max(1u, std::thread::hardware_concurrency());

    struct Criterion {
        const char* name;
        bool (*run)();
    };
    const Criterion criteria[] = {
        {"kappa closed forms (1e-12)", criterion_kappa_closed_forms},
        {"worst-case violations attain the sharp bound", criterion_sharpness},
        {"TWFE and sample-means estimates agree (1e-8)", criterion_twfe_equivalence},
        {"critical value matches a brute-force quantile", criterion_critical_value_oracle},
        {"pretest consistency across sample sizes", criterion_test_consistency},
        {"conditional coverage: ours >= 0.94, conventional <= 0.10", criterion_conditional_coverage},
        {"probability of valid reporting >= 0.93 at n=1600", criterion_valid_reporting},
        {"width shapes across T_pre and p", criterion_width_shapes},
        {"failure regime: both coverages <= 0.50", criterion_failure_regime},
        {"byte-identical CSVs across thread counts", criterion_determinism},
    };

    int failures = 0;
    int index = 0;
    for (const auto& criterion : criteria) {
        ++index;
        g_notes.clear();
        const bool ok = criterion.run();
        std::printf("[%2d] %s  %s\n", index, ok ? "PASS" : "FAIL", criterion.name);
        for (const auto& line : g_notes) std::printf("       %s\n", line.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
