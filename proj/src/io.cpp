#include "didguard/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace didguard::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

std::string trimmed(std::string s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c); };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), is_space));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), is_space).base(), s.end());
    return s;
}

double parse_double(const std::string& text, long line_no, const std::string& column) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line_no) + ", column '" + column +
                                 "': cannot parse '" + text + "' as a number");
    }
}

long parse_int(const std::string& text, long line_no, const std::string& column) {
    try {
        std::size_t used = 0;
        const long v = std::stol(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line_no) + ", column '" + column +
                                 "': cannot parse '" + text + "' as an integer");
    }
}

}  // namespace

Dataset load_dataset_csv(const std::string& path, int treatment_time, const CsvOptions& options) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(file, line)) throw std::runtime_error("'" + path + "' is empty");
    const auto header = split_csv_line(line);
    auto column_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trimmed(header[i]) == name) return static_cast<int>(i);
        }
        return -1;
    };
    const int col_unit = column_of(options.unit_column);
    const int col_time = column_of(options.time_column);
    const int col_treated = column_of(options.treated_column);
    const int col_outcome = column_of(options.outcome_column);
    const int col_cluster = column_of(options.cluster_column);
    const int col_weight = column_of(options.weight_column);
    for (const auto& [col, name] :
         {std::pair{col_time, options.time_column}, {col_treated, options.treated_column},
          {col_outcome, options.outcome_column}}) {
        if (col < 0) throw std::runtime_error("missing required column '" + name + "'");
    }

    std::vector<Observation> rows;
    int max_time = 0;
    bool all_units_present = col_unit >= 0;
    long line_no = 1;
    while (std::getline(file, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        const auto fields = split_csv_line(line);
        auto field = [&](int col, const std::string& name) -> std::string {
            if (col >= static_cast<int>(fields.size())) {
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": missing value for column '" + name + "'");
            }
            return trimmed(fields[col]);
        };
        Observation obs;
        obs.time = static_cast<int>(parse_int(field(col_time, options.time_column), line_no,
                                              options.time_column));
        const std::string treated = field(col_treated, options.treated_column);
        if (treated != "0" && treated != "1") {
            throw std::runtime_error("line " + std::to_string(line_no) + ", column '" +
                                     options.treated_column + "': expected 0 or 1, got '" +
                                     treated + "'");
        }
        obs.treated = treated == "1";
        obs.outcome = parse_double(field(col_outcome, options.outcome_column), line_no,
                                   options.outcome_column);
        if (col_unit >= 0) obs.unit_id = field(col_unit, options.unit_column);
        if (col_cluster >= 0) obs.cluster_id = field(col_cluster, options.cluster_column);
        if (col_weight >= 0) {
            const std::string w = field(col_weight, options.weight_column);
            if (!w.empty()) obs.weight = parse_double(w, line_no, options.weight_column);
        }
        all_units_present = all_units_present && !obs.unit_id.empty();
        max_time = std::max(max_time, obs.time);
        rows.push_back(std::move(obs));
    }
    if (rows.empty()) throw std::runtime_error("'" + path + "' contains no data rows");

    Dataset data;
    data.rows = std::move(rows);
    data.layout = TimeLayout(max_time, treatment_time);
    data.design = all_units_present ? StudyDesign::Panel : StudyDesign::RepeatedCrossSection;
    data.validate();
    return data;
}

Matrix load_matrix_csv(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open '" + path + "'");
    std::vector<std::vector<double>> values;
    std::string line;
    long line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        const auto fields = split_csv_line(line);
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            row.push_back(parse_double(trimmed(fields[i]), line_no, "col " + std::to_string(i + 1)));
        }
        values.push_back(std::move(row));
    }
    if (values.empty()) throw std::runtime_error("'" + path + "' contains no data");
    const std::size_t n = values.size();
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (values[i].size() != n) {
            throw std::runtime_error("matrix is not square: row " + std::to_string(i + 1) +
                                     " has " + std::to_string(values[i].size()) + " of " +
                                     std::to_string(n) + " entries");
        }
        for (std::size_t j = 0; j < n; ++j) m(i, j) = values[i][j];
    }
    return m;
}

std::string analysis_report_json(const ThetaEstimate& est, const IntervalReport& report) {
    nlohmann::json j;
    j["theta"]["values"] = std::vector<double>(est.values.begin(), est.values.end());
    j["theta"]["effective_n"] = est.effective_n;
    if (est.has_covariance()) {
        std::vector<std::vector<double>> cov;
        for (Eigen::Index r = 0; r < est.covariance.rows(); ++r) {
            cov.emplace_back(est.covariance.row(r).begin(), est.covariance.row(r).end());
        }
        j["theta"]["covariance"] = cov;
    } else {
        j["theta"]["covariance"] = nullptr;
    }
    j["theta"]["total_periods"] = est.layout.total_periods();
    j["theta"]["treatment_time"] = est.layout.treatment_time();

    const auto& pretest = report.pretest;
    j["pretest"] = {{"s_pre_hat", pretest.s_pre_hat},
                    {"threshold_M", pretest.threshold_M},
                    {"phi", pretest.phi},
                    {"margin", pretest.margin},
                    {"mode", to_string(pretest.mode)},
                    {"extrapolation_condition", pretest.phi == 0}};
    j["interval"] = {{"point", report.point},
                     {"half_width", report.half_width},
                     {"lower", report.lower},
                     {"upper", report.upper},
                     {"bias_component", report.bias_component},
                     {"noise_component", report.noise_component},
                     {"critical_value", report.critical_value},
                     {"conditionally_valid", report.conditionally_valid()}};
    j["conventional_interval"] = {{"lower", report.conventional_lower},
                                  {"upper", report.conventional_upper}};
    return j.dump(2);
}

}  // namespace didguard::io
