#pragma once

#include <string>

#include "didguard/estimators.hpp"
#include "didguard/inference.hpp"

namespace didguard::io {

struct CsvOptions {
    // Column names; time/treated/outcome are required in the header,
    // the rest are optional.
    std::string unit_column = "unit_id";
    std::string time_column = "time";
    std::string treated_column = "treated";
    std::string outcome_column = "outcome";
    std::string cluster_column = "cluster_id";
    std::string weight_column = "weight";
};

// Long-format CSV (comma delimited, '.' decimal separator, header required).
// The design is Panel when a fully populated unit column is present,
// repeated cross-sections otherwise. T is inferred from the largest period.
Dataset load_dataset_csv(const std::string& path, int treatment_time,
                         const CsvOptions& options = {});

// Square numeric matrix, one row per line, no header.
Matrix load_matrix_csv(const std::string& path);

// Full machine-readable analysis report: theta values and covariance,
// pretest verdict, and both intervals.
std::string analysis_report_json(const ThetaEstimate& est, const IntervalReport& report);

}  // namespace didguard::io
