#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "didguard/estimators.hpp"
#include "didguard/inference.hpp"
#include "didguard/io.hpp"
#include "didguard/severity.hpp"
#include "didguard/sim.hpp"

namespace {

using namespace didguard;

constexpr int kExitInputError = 2;
constexpr int kExitPretestReject = 3;

int default_threads() {
    if (const char* env = std::getenv("DIDGUARD_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid DIDGUARD_THREADS='" << env << "'\n";
    }
    return 1;
}

double parse_p(const std::string& text) {
    if (text == "inf" || text == "Inf" || text == "INF" || text == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    const double p = std::stod(text);
    if (!(p >= 1.0)) throw std::runtime_error("p must be >= 1 (or 'inf'), got '" + text + "'");
    return p;
}

ViolationMode parse_mode(const std::string& text) {
    if (text == "iterative") return ViolationMode::Iterative;
    if (text == "overall") return ViolationMode::Overall;
    throw std::runtime_error("mode must be 'iterative' or 'overall', got '" + text + "'");
}

Vector parse_weights(const std::string& text) {
    std::vector<double> values;
    std::stringstream stream(text);
    std::string field;
    while (std::getline(stream, field, ',')) values.push_back(std::stod(field));
    Vector w(static_cast<Eigen::Index>(values.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = values[i];
    return w;
}

std::string format_mode(ViolationMode mode) {
    return mode == ViolationMode::Iterative ? "iterative" : "overall";
}

// ---------------------------------------------------------------- analyze --

struct AnalyzeOptions {
    std::string data_path;
    int t0 = 0;
    double threshold_M = 0.0;
    std::string p_text = "2";
    bool p_given = false;
    std::string mode_text = "iterative";
    double alpha = 0.05;
    std::string cov = "plugin";
    int bootstrap_reps = 1000;
    std::string resample_level = "row";
    std::string estimator = "means";
    std::string weights_text;
    int mc_draws = 5000;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string output = "text";
    bool show_invalid = false;
    bool fail_on_reject = false;
    io::CsvOptions csv;
};

void print_analysis_text(const ThetaEstimate& est, const IntervalReport& report,
                         const AnalyzeOptions& opt) {
    const TimeLayout& layout = est.layout;
    std::printf("periods: %d (treatment starts at %d), effective n per cell: %ld\n",
                layout.total_periods(), layout.treatment_time(), est.effective_n);
    std::printf("\n%-28s %12s\n", "component", "estimate");
    int k = 0;
    for (int t = 2; t <= layout.treatment_time() - 1; ++t, ++k) {
        std::printf("pre-trend violation r[%d]%*s %12.6f\n", t, t >= 10 ? 3 : 4, "",
                    est.values[k]);
    }
    for (int t = layout.treatment_time(); t <= layout.total_periods(); ++t, ++k) {
        std::printf("double difference dd[%d]%*s %12.6f\n", t, t >= 10 ? 4 : 5, "",
                    est.values[k]);
    }

    const auto& pre = report.pretest;
    std::printf("\npretest (%s violations): S_pre = %.6f vs M = %.6f -> %s\n",
                format_mode(pre.mode).c_str(), pre.s_pre_hat, pre.threshold_M,
                pre.phi == 0 ? "PASS (extrapolation condition not rejected)"
                             : "REJECT (extrapolation condition rejected)");

    if (pre.phi == 0 || opt.show_invalid) {
        if (pre.phi != 0) {
            std::printf("interval shown on request; it carries no conditional validity claim:\n");
        }
        std::printf("point estimate:       %12.6f\n", report.point);
        std::printf("interval (alpha=%.3g): [%.6f, %.6f]\n", opt.alpha, report.lower,
                    report.upper);
        std::printf("  bias component:     %12.6f\n", report.bias_component);
        std::printf("  noise component:    %12.6f\n", report.noise_component);
        std::printf("conventional z-interval: [%.6f, %.6f]\n", report.conventional_lower,
                    report.conventional_upper);
    } else {
        std::printf("interval suppressed (pretest rejected; use --show-invalid to print it)\n");
    }
}

int cmd_analyze(const AnalyzeOptions& opt) {
    if (!opt.p_given) {
        std::cerr << "notice: --p not given, defaulting to p = 2\n";
    }
    const int threads = opt.threads > 0 ? opt.threads : default_threads();

    Dataset data = io::load_dataset_csv(opt.data_path, opt.t0, opt.csv);

    ThetaEstimate est = opt.estimator == "twfe" ? estimate_theta_twfe(data)
                                                : estimate_theta_sample_means(data);
    if (opt.cov == "bootstrap" || !est.has_covariance()) {
        BootstrapConfig cfg;
        cfg.replications = opt.bootstrap_reps;
        cfg.seed = opt.seed;
        cfg.threads = threads;
        cfg.resample_level = opt.resample_level == "cluster" ? ResampleLevel::Cluster
                             : opt.resample_level == "unit"  ? ResampleLevel::Unit
                                                             : ResampleLevel::Row;
        if (opt.cov != "bootstrap") {
            std::cerr << "notice: estimator provides no plug-in covariance; bootstrapping\n";
        }
        est.covariance = estimate_covariance_bootstrap(
            data, opt.estimator == "twfe" ? PointEstimator::Twfe : PointEstimator::SampleMeans,
            cfg);
    }

    InferenceParams params;
    params.alpha = opt.alpha;
    params.mc_draws = opt.mc_draws;
    params.seed = opt.seed;
    params.threads = threads;
    params.severity = SeverityParams{parse_p(opt.p_text), opt.threshold_M,
                                     parse_mode(opt.mode_text)};
    if (!opt.weights_text.empty()) params.estimand_weights = parse_weights(opt.weights_text);

    const IntervalReport report = confidence_interval(est, params);
    if (opt.output == "json") {
        std::cout << io::analysis_report_json(est, report) << "\n";
    } else {
        print_analysis_text(est, report, opt);
    }
    return report.pretest.phi == 1 && opt.fail_on_reject ? kExitPretestReject : 0;
}

// --------------------------------------------------------------- simulate --

using IniSection = std::map<std::string, std::string>;
using IniFile = std::map<std::string, IniSection>;

IniFile parse_ini(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open config '" + path + "'");
    IniFile sections;
    std::string line, current;
    long line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        const auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        const auto end = line.find_last_not_of(" \t\r");
        line = line.substr(begin, end - begin + 1);
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": malformed section header");
            }
            current = line.substr(1, line.size() - 2);
            sections.try_emplace(current);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || current.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 'key = value' inside a section");
        }
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = strip(line.substr(0, eq));
        if (!sections[current].emplace(key, strip(line.substr(eq + 1))).second) {
            throw std::runtime_error(path + ": duplicate key '" + key + "' in [" + current + "]");
        }
    }
    return sections;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream stream(text);
    std::string field;
    while (std::getline(stream, field, ',')) {
        const auto b = field.find_first_not_of(" \t");
        const auto e = field.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(field.substr(b, e - b + 1));
    }
    return out;
}

sim::ExperimentKind parse_kind(const std::string& text) {
    for (auto kind : {sim::ExperimentKind::RejectionCurve, sim::ExperimentKind::ConditionalCoverage,
                      sim::ExperimentKind::ValidReporting, sim::ExperimentKind::ExpectedWidth,
                      sim::ExperimentKind::WidthVsP}) {
        if (sim::to_string(kind) == text) return kind;
    }
    throw std::runtime_error("unknown experiment kind '" + text + "'");
}

// Applies one scalar field override to a DgpSpec; 't_pre' rebuilds the
// layout keeping T_post fixed.
void apply_dgp_field(sim::DgpSpec& dgp, const std::string& key, const std::string& value) {
    if (key == "s_pre_target") {
        dgp.s_pre_target = std::stod(value);
    } else if (key == "threshold_M") {
        dgp.threshold_M = std::stod(value);
    } else if (key == "p") {
        dgp.p = parse_p(value);
    } else if (key == "trend_alpha") {
        dgp.trend_alpha = std::stod(value);
    } else if (key == "ar_rho") {
        dgp.ar_rho = std::stod(value);
    } else if (key == "effect_beta") {
        dgp.effect_beta = std::stod(value);
    } else if (key == "sigma_treated") {
        dgp.sigma_treated = std::stod(value);
    } else if (key == "sigma_control") {
        dgp.sigma_control = std::stod(value);
    } else if (key == "n_per_cell") {
        dgp.n_per_cell = std::stoi(value);
    } else if (key == "total_periods") {
        dgp.layout = TimeLayout(std::stoi(value), dgp.layout.treatment_time());
    } else if (key == "treatment_time") {
        dgp.layout = TimeLayout(dgp.layout.total_periods(), std::stoi(value));
    } else if (key == "t_pre") {
        const int t_pre = std::stoi(value);
        const int t_post = dgp.layout.post_length();
        dgp.layout = TimeLayout(t_pre + t_post, t_pre + 1);
    } else {
        throw std::runtime_error("unknown dgp key '" + key + "'");
    }
}

sim::ExperimentSpec spec_from_config(const IniFile& ini, const std::string& path) {
    for (const auto& [name, section] : ini) {
        if (name != "experiment" && name != "dgp" && name != "grid") {
            throw std::runtime_error(path + ": unknown section [" + name + "]");
        }
    }
    sim::ExperimentSpec spec;
    if (auto it = ini.find("experiment"); it != ini.end()) {
        for (const auto& [key, value] : it->second) {
            if (key == "kind") {
                spec.kind = parse_kind(value);
            } else if (key == "replications") {
                spec.replications = std::stoi(value);
            } else if (key == "alpha") {
                spec.alpha = std::stod(value);
            } else if (key == "mc_draws") {
                spec.mc_draws = std::stoi(value);
            } else if (key == "master_seed") {
                spec.master_seed = std::stoull(value);
            } else {
                throw std::runtime_error(path + ": unknown experiment key '" + key + "'");
            }
        }
    }

    sim::DgpSpec base;
    if (auto it = ini.find("dgp"); it != ini.end()) {
        // Layout keys first so later keys see the final layout.
        for (const auto& key : {"total_periods", "treatment_time", "t_pre"}) {
            if (auto kv = it->second.find(key); kv != it->second.end()) {
                apply_dgp_field(base, key, kv->second);
            }
        }
        for (const auto& [key, value] : it->second) {
            if (key == std::string("total_periods") || key == std::string("treatment_time") ||
                key == std::string("t_pre")) {
                continue;
            }
            apply_dgp_field(base, key, value);
        }
    }

    std::string x_name;
    std::vector<std::string> x_values;
    std::vector<std::string> p_values;
    if (auto it = ini.find("grid"); it != ini.end()) {
        for (const auto& [key, value] : it->second) {
            if (key == "x_name") {
                x_name = value;
            } else if (key == "x_values") {
                x_values = split_list(value);
            } else if (key == "p_values") {
                p_values = split_list(value);
            } else {
                throw std::runtime_error(path + ": unknown grid key '" + key + "'");
            }
        }
    }
    if (x_name.empty() != x_values.empty()) {
        throw std::runtime_error(path + ": [grid] needs both x_name and x_values");
    }
    if (p_values.empty()) p_values.push_back("");

    for (const auto& p_text : p_values) {
        sim::DgpSpec with_p = base;
        std::string prefix;
        if (!p_text.empty()) {
            apply_dgp_field(with_p, "p", p_text);
            prefix = "p=" + p_text + ",";
        }
        if (x_values.empty()) {
            sim::ScenarioPoint point;
            point.scenario_id = prefix.empty() ? "base" : prefix.substr(0, prefix.size() - 1);
            point.x_name = p_text.empty() ? "none" : "p";
            point.x_value = p_text.empty() ? 0.0 : with_p.p;
            point.dgp = with_p;
            spec.grid.push_back(std::move(point));
            continue;
        }
        for (const auto& value : x_values) {
            sim::ScenarioPoint point;
            point.dgp = with_p;
            apply_dgp_field(point.dgp, x_name, value);
            point.scenario_id = prefix + x_name + "=" + value;
            point.x_name = x_name;
            point.x_value = std::stod(value == "inf" ? "inf" : value);
            if (x_name == "p") point.x_value = point.dgp.p;
            spec.grid.push_back(std::move(point));
        }
    }
    return spec;
}

struct SimulateOptions {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    std::optional<int> replications;
    std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateOptions& opt) {
    sim::ExperimentSpec spec = spec_from_config(parse_ini(opt.config_path), opt.config_path);
    if (opt.replications) spec.replications = *opt.replications;
    if (opt.seed) spec.master_seed = *opt.seed;
    const int threads = opt.threads > 0 ? opt.threads : default_threads();

    const auto rows = sim::run_experiment(spec, threads);
    const std::string csv = sim::results_to_csv(rows);

    std::filesystem::create_directories(opt.out_dir);
    const std::string out_path =
        (std::filesystem::path(opt.out_dir) / (sim::to_string(spec.kind) + ".csv")).string();
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << csv;

    std::printf("experiment %s: %d replicates x %zu scenario(s) -> %s\n",
                sim::to_string(spec.kind).c_str(), spec.replications, spec.grid.size(),
                out_path.c_str());
    for (const auto& row : rows) {
        std::printf("  %-28s %-36s %12.6g (se %.3g, n=%ld)\n", row.scenario_id.c_str(),
                    row.metric.c_str(), row.value, row.mc_se, row.n_conditioning);
    }
    return 0;
}

// ---------------------------------------------------------------- critval --

struct CritvalOptions {
    std::string sigma_path;
    int t0 = 0;
    double alpha = 0.05;
    std::string p_text = "2";
    bool p_given = false;
    std::string mode_text = "iterative";
    std::string weights_text;
    int mc_draws = 5000;
    std::uint64_t seed = 0;
    int threads = 0;
};

int cmd_critval(const CritvalOptions& opt) {
    if (!opt.p_given) {
        std::cerr << "notice: --p not given, defaulting to p = 2\n";
    }
    const Matrix sigma = io::load_matrix_csv(opt.sigma_path);
    const TimeLayout layout(static_cast<int>(sigma.rows()) + 1, opt.t0);
    const SeverityParams params{parse_p(opt.p_text), 0.0, parse_mode(opt.mode_text)};
    std::optional<Vector> weights;
    if (!opt.weights_text.empty()) weights = parse_weights(opt.weights_text);
    const double f = critical_value(opt.alpha, sigma, layout, params, opt.seed, opt.mc_draws,
                                    weights, opt.threads > 0 ? opt.threads : default_threads());
    std::printf("%.6f\n", f);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pre-trend severity tests and conditionally valid intervals for "
                 "difference-in-differences"};
    app.require_subcommand(1);
    app.set_config("--config-file")->configurable(false);

    AnalyzeOptions an;
    CLI::App* analyze = app.add_subcommand("analyze", "Analyze a long-format dataset");
    analyze->add_option("--data", an.data_path, "Dataset CSV path")->required();
    analyze->add_option("--t0", an.t0, "First treated period (1-based)")->required();
    analyze->add_option("--M", an.threshold_M, "Severity threshold (no default: a substantive choice)")
        ->required();
    analyze->add_option("--p", an.p_text, "Severity order in [1, inf], accepts 'inf'");
    analyze->add_option("--mode", an.mode_text, "Violation mode: iterative|overall")
        ->check(CLI::IsMember({"iterative", "overall"}));
    analyze->add_option("--alpha", an.alpha, "Miscoverage level")->check(CLI::Range(1e-6, 0.999999));
    analyze->add_option("--cov", an.cov, "Covariance: plugin|bootstrap")
        ->check(CLI::IsMember({"plugin", "bootstrap"}));
    analyze->add_option("--bootstrap-reps", an.bootstrap_reps, "Bootstrap replications");
    analyze->add_option("--resample-level", an.resample_level, "Bootstrap level: row|unit|cluster")
        ->check(CLI::IsMember({"row", "unit", "cluster"}));
    analyze->add_option("--estimator", an.estimator, "Point estimator: means|twfe")
        ->check(CLI::IsMember({"means", "twfe"}));
    analyze->add_option("--weights", an.weights_text,
                        "Estimand weights, comma list of length T_post, most recent period first");
    analyze->add_option("--mc-draws", an.mc_draws, "Critical-value Monte-Carlo draws");
    analyze->add_option("--seed", an.seed, "Random seed");
    analyze->add_option("--threads", an.threads, "Worker threads (default: DIDGUARD_THREADS or 1)");
    analyze->add_option("--output", an.output, "Output format: text|json")
        ->check(CLI::IsMember({"text", "json"}));
    analyze->add_flag("--show-invalid", an.show_invalid,
                      "Print the interval even when the pretest rejects");
    analyze->add_flag("--fail-on-reject", an.fail_on_reject,
                      "Exit with status 3 when the pretest rejects");
    analyze->add_option("--unit-column", an.csv.unit_column, "Unit id column name");
    analyze->add_option("--time-column", an.csv.time_column, "Period column name");
    analyze->add_option("--treated-column", an.csv.treated_column, "Treatment column name");
    analyze->add_option("--outcome-column", an.csv.outcome_column, "Outcome column name");
    analyze->add_option("--cluster-column", an.csv.cluster_column, "Cluster id column name");
    analyze->add_option("--weight-column", an.csv.weight_column, "Weight column name");

    SimulateOptions si;
    CLI::App* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo experiment");
    simulate->add_option("--config", si.config_path, "Experiment config (.conf)")->required();
    simulate->add_option("--out-dir", si.out_dir, "Output directory for result CSVs");
    simulate->add_option("--threads", si.threads, "Worker threads (default: DIDGUARD_THREADS or 1)");
    int reps_override = 0;
    std::uint64_t seed_override = 0;
    auto* reps_opt = simulate->add_option("--replications", reps_override,
                                          "Override the configured replication count");
    auto* seed_opt = simulate->add_option("--seed", seed_override, "Override the master seed");

    CritvalOptions cv;
    CLI::App* critval = app.add_subcommand("critval", "Critical value for a given covariance");
    critval->add_option("--sigma", cv.sigma_path, "Covariance CSV ((T-1) x (T-1), no header)")
        ->required();
    critval->add_option("--t0", cv.t0, "First treated period (1-based)")->required();
    critval->add_option("--alpha", cv.alpha, "Miscoverage level");
    critval->add_option("--p", cv.p_text, "Severity order in [1, inf], accepts 'inf'");
    critval->add_option("--mode", cv.mode_text, "Violation mode: iterative|overall")
        ->check(CLI::IsMember({"iterative", "overall"}));
    critval->add_option("--weights", cv.weights_text, "Estimand weights, most recent period first");
    critval->add_option("--mc-draws", cv.mc_draws, "Monte-Carlo draws");
    critval->add_option("--seed", cv.seed, "Random seed");
    critval->add_option("--threads", cv.threads, "Worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) {
            an.p_given = analyze->count("--p") > 0;
            return cmd_analyze(an);
        }
        if (simulate->parsed()) {
            if (reps_opt->count() > 0) si.replications = reps_override;
            if (seed_opt->count() > 0) si.seed = seed_override;
            return cmd_simulate(si);
        }
        cv.p_given = critval->count("--p") > 0;
        return cmd_critval(cv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}
