#include "didguard/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

#include "didguard/parallel.hpp"
#include "didguard/rng.hpp"

namespace didguard {

namespace {

struct CellStats {
    long count = 0;
    double sum_w = 0.0;
    double sum_wy = 0.0;
    double sum_wyy = 0.0;
    double sum_ww = 0.0;

    double mean() const { return sum_wy / sum_w; }
    double effective_n() const { return sum_w * sum_w / sum_ww; }
    double variance() const {
        // Weighted sample variance with a frequency-style Bessel correction.
        const double m = mean();
        const double raw = sum_wyy / sum_w - m * m;
        return std::max(0.0, raw) * count / (count - 1.0);
    }
};

int cell_index(bool treated, int time, int total_periods) {
    return (treated ? total_periods : 0) + time - 1;
}

std::string cell_name(bool treated, int time) {
    return "(group " + std::string(treated ? "treated" : "control") + ", period " +
           std::to_string(time) + ")";
}

// Per-cell statistics indexed as control cells 0..T-1, treated cells T..2T-1.
std::vector<CellStats> cell_statistics(const std::vector<Observation>& rows,
                                       const TimeLayout& layout) {
    std::vector<CellStats> cells(2 * layout.total_periods());
    for (const auto& row : rows) {
        auto& cell = cells[cell_index(row.treated, row.time, layout.total_periods())];
        cell.count += 1;
        cell.sum_w += row.weight;
        cell.sum_wy += row.weight * row.outcome;
        cell.sum_wyy += row.weight * row.outcome * row.outcome;
        cell.sum_ww += row.weight * row.weight;
    }
    return cells;
}

void require_no_empty_cell(const std::vector<CellStats>& cells, const TimeLayout& layout) {
    for (int d = 0; d <= 1; ++d) {
        for (int t = 1; t <= layout.total_periods(); ++t) {
            if (cells[cell_index(d == 1, t, layout.total_periods())].count == 0) {
                throw std::runtime_error("empty cell " + cell_name(d == 1, t));
            }
        }
    }
}

// Coefficients of theta components on cell means; row k of the result holds
// the linear map from the 2T cell means to theta_k.
Matrix theta_cell_coefficients(const TimeLayout& layout) {
    const int T = layout.total_periods();
    const int t0 = layout.treatment_time();
    Matrix coef = Matrix::Zero(layout.theta_length(), 2 * T);
    int k = 0;
    for (int t = 2; t <= t0 - 1; ++t, ++k) {
        coef(k, cell_index(true, t, T)) += 1.0;
        coef(k, cell_index(true, t - 1, T)) -= 1.0;
        coef(k, cell_index(false, t, T)) -= 1.0;
        coef(k, cell_index(false, t - 1, T)) += 1.0;
    }
    for (int t = t0; t <= T; ++t, ++k) {
        coef(k, cell_index(true, t, T)) += 1.0;
        coef(k, cell_index(true, t0 - 1, T)) -= 1.0;
        coef(k, cell_index(false, t, T)) -= 1.0;
        coef(k, cell_index(false, t0 - 1, T)) += 1.0;
    }
    return coef;
}

Vector theta_values_from_cells(const std::vector<CellStats>& cells, const TimeLayout& layout) {
    Vector means(2 * layout.total_periods());
    for (int i = 0; i < means.size(); ++i) means[i] = cells[i].mean();
    return theta_cell_coefficients(layout) * means;
}

Vector point_estimate(const std::vector<Observation>& rows, const TimeLayout& layout,
                      PointEstimator which);

}  // namespace

void Dataset::validate() const {
    auto cells = cell_statistics(rows, layout);
    for (int d = 0; d <= 1; ++d) {
        for (int t = 1; t <= layout.total_periods(); ++t) {
            const auto& cell = cells[cell_index(d == 1, t, layout.total_periods())];
            if (cell.count < 2) {
                throw std::invalid_argument("cell " + cell_name(d == 1, t) +
                                            " needs at least 2 rows");
            }
        }
    }
    for (const auto& row : rows) {
        if (!(row.weight > 0.0) || !std::isfinite(row.weight)) {
            throw std::invalid_argument("weights must be strictly positive and finite");
        }
        if (row.time < 1 || row.time > layout.total_periods()) {
            throw std::invalid_argument("row period " + std::to_string(row.time) +
                                        " outside 1.." + std::to_string(layout.total_periods()));
        }
        if (!std::isfinite(row.outcome)) {
            throw std::invalid_argument("non-finite outcome");
        }
    }
    if (design == StudyDesign::Panel) {
        std::map<std::string, std::pair<bool, std::vector<int>>> units;
        for (const auto& row : rows) {
            if (row.unit_id.empty()) {
                throw std::invalid_argument("panel design requires unit ids");
            }
            auto [it, fresh] = units.try_emplace(row.unit_id, row.treated,
                                                 std::vector<int>(layout.total_periods(), 0));
            if (!fresh && it->second.first != row.treated) {
                throw std::invalid_argument("unit " + row.unit_id +
                                            " changes treatment status across periods");
            }
            it->second.second[row.time - 1] += 1;
        }
        for (const auto& [id, info] : units) {
            for (int t = 0; t < layout.total_periods(); ++t) {
                if (info.second[t] != 1) {
                    throw std::invalid_argument("unit " + id + " does not appear exactly once in period " +
                                                std::to_string(t + 1));
                }
            }
        }
    }
}

ThetaEstimate estimate_theta_sample_means(const Dataset& data) {
    data.validate();
    auto cells = cell_statistics(data.rows, data.layout);

    ThetaEstimate est{data.layout, theta_values_from_cells(cells, data.layout), Matrix(), 0};
    est.effective_n =
        std::max<long>(1, std::min_element(cells.begin(), cells.end(), [](auto& a, auto& b) {
                              return a.count < b.count;
                          })->count);

    if (data.design == StudyDesign::RepeatedCrossSection) {
        // Cell means are independent across cells; propagate their variances
        // through the two double-difference maps.
        Vector cell_var(2 * data.layout.total_periods());
        for (int i = 0; i < cell_var.size(); ++i) {
            cell_var[i] = cells[i].variance() / cells[i].effective_n();
        }
        const Matrix coef = theta_cell_coefficients(data.layout);
        est.covariance = coef * cell_var.asDiagonal() * coef.transpose();
    }
    return est;
}

ThetaEstimate estimate_theta_twfe(const Dataset& data) {
    data.validate();
    if (data.design != StudyDesign::Panel) {
        throw std::invalid_argument("estimate_theta_twfe: requires a panel dataset");
    }
    for (const auto& row : data.rows) {
        if (row.weight != 1.0) {
            throw std::invalid_argument("estimate_theta_twfe: weighted data is unsupported");
        }
    }
    return ThetaEstimate{data.layout, point_estimate(data.rows, data.layout, PointEstimator::Twfe),
                         Matrix(), static_cast<long>(data.rows.size() / data.layout.total_periods())};
}

namespace {

Vector twfe_values(const std::vector<Observation>& rows, const TimeLayout& layout) {
    const int T = layout.total_periods();
    const int t0 = layout.treatment_time();

    std::unordered_map<std::string, int> unit_index;
    for (const auto& row : rows) {
        unit_index.try_emplace(row.unit_id, static_cast<int>(unit_index.size()));
    }
    const int nu = static_cast<int>(unit_index.size());

    // Columns: unit dummies | time dummies t = 2..T | D * 1{t = s} for
    // s in {1..t0-2} and {t0..T} (delta_{t0-1} normalized to zero).
    std::vector<int> interaction_col(T + 1, -1);
    int col = nu + (T - 1);
    for (int s = 1; s <= t0 - 2; ++s) interaction_col[s] = col++;
    for (int s = t0; s <= T; ++s) interaction_col[s] = col++;
    const int ncols = col;

    Matrix x = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), ncols);
    Vector y(static_cast<Eigen::Index>(rows.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const auto& row = rows[i];
        x(i, unit_index.at(row.unit_id)) = 1.0;
        if (row.time >= 2) x(i, nu + row.time - 2) = 1.0;
        if (row.treated && interaction_col[row.time] >= 0) {
            x(i, interaction_col[row.time]) = 1.0;
        }
        y[i] = row.outcome;
    }

    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    if (qr.rank() < ncols) {
        throw std::runtime_error("estimate_theta_twfe: design matrix is rank deficient");
    }
    const Vector beta = qr.solve(y);

    Vector theta(layout.theta_length());
    // Pre-block: r_t = delta_t - delta_{t-1} with delta_{t0-1} = 0.
    auto delta_at = [&](int s) {
        return s == t0 - 1 ? 0.0 : beta[interaction_col[s]];
    };
    int k = 0;
    for (int t = 2; t <= t0 - 1; ++t, ++k) theta[k] = delta_at(t) - delta_at(t - 1);
    for (int t = t0; t <= T; ++t, ++k) theta[k] = beta[interaction_col[t]];
    return theta;
}

Vector point_estimate(const std::vector<Observation>& rows, const TimeLayout& layout,
                      PointEstimator which) {
    if (which == PointEstimator::Twfe) return twfe_values(rows, layout);
    auto cells = cell_statistics(rows, layout);
    require_no_empty_cell(cells, layout);
    return theta_values_from_cells(cells, layout);
}

}  // namespace

Matrix estimate_covariance_bootstrap(const Dataset& data, PointEstimator point,
                                     const BootstrapConfig& cfg) {
    data.validate();
    if (cfg.replications < 100) {
        throw std::invalid_argument("bootstrap needs at least 100 replications");
    }
    if (cfg.replications < 400) {
        std::cerr << "warning: fewer than 400 bootstrap replications; covariance will be noisy\n";
    }

    // Group rows by the resampling unit.
    std::map<std::string, std::vector<int>> groups;
    for (int i = 0; i < static_cast<int>(data.rows.size()); ++i) {
        const auto& row = data.rows[i];
        switch (cfg.resample_level) {
            case ResampleLevel::Row:
                groups["#" + std::to_string(i)].push_back(i);
                break;
            case ResampleLevel::Unit:
                if (row.unit_id.empty()) {
                    throw std::invalid_argument("unit-level bootstrap requires unit ids");
                }
                groups[row.unit_id].push_back(i);
                break;
            case ResampleLevel::Cluster:
                if (row.cluster_id.empty()) {
                    throw std::invalid_argument("cluster-level bootstrap requires cluster ids");
                }
                groups[row.cluster_id].push_back(i);
                break;
        }
    }
    if (cfg.resample_level == ResampleLevel::Cluster && groups.size() < 2) {
        throw std::invalid_argument("cluster-level bootstrap requires at least 2 clusters");
    }
    std::vector<const std::vector<int>*> group_rows;
    group_rows.reserve(groups.size());
    for (const auto& [id, members] : groups) group_rows.push_back(&members);

    const int n_groups = static_cast<int>(group_rows.size());
    const int len = data.layout.theta_length();
    Matrix draws(cfg.replications, len);

    parallel_for(cfg.replications, cfg.threads, [&](int lo, int hi) {
        std::vector<Observation> resample;
        for (int b = lo; b < hi; ++b) {
            auto eng = rng::engine_for(cfg.seed, static_cast<std::uint64_t>(b));
            std::uniform_int_distribution<int> pick(0, n_groups - 1);
            bool done = false;
            for (int attempt = 0; attempt < 100 && !done; ++attempt) {
                resample.clear();
                for (int g = 0; g < n_groups; ++g) {
                    const auto& members = *group_rows[pick(eng)];
                    for (int idx : members) {
                        Observation obs = data.rows[idx];
                        // Relabel so duplicated draws stay distinct units.
                        if (!obs.unit_id.empty()) {
                            obs.unit_id = std::to_string(g) + "/" + obs.unit_id;
                        }
                        resample.push_back(std::move(obs));
                    }
                }
                try {
                    draws.row(b) = point_estimate(resample, data.layout, point);
                    done = true;
                } catch (const std::runtime_error&) {
                    // Empty cell (or rank-deficient resample): redraw.
                }
            }
            if (!done) {
                throw std::runtime_error(
                    "bootstrap: could not draw a usable resample within the retry budget");
            }
        }
    });

    const Eigen::RowVectorXd mean = draws.colwise().mean();
    const Matrix centered = draws.rowwise() - mean;
    return centered.transpose() * centered / (cfg.replications - 1.0);
}

}  // namespace didguard
