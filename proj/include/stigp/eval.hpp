#pragma once

#include <optional>
#include <vector>

#include "stigp/linalg.hpp"

namespace stigp::eval {

struct MetricReport {
    double mae = 0.0;
    double rmse = 0.0;
    // Empty when either series has zero variance.
    std::optional<double> pcc;
    std::size_t horizon = 0;
    std::vector<double> per_step_abs_err;
};

/// MAE, RMSE and Pearson correlation of `predicted` against `truth`.
MetricReport metrics(const std::vector<double>& truth, const std::vector<double>& predicted);

/// Pearson correlation, or empty for a zero-variance series.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Repeats the last training value.
std::vector<double> baseline_persistence(const std::vector<double>& train_targets, std::size_t horizon);

/// Extends the line through the first and last training values.
std::vector<double> baseline_drift(const std::vector<double>& train_targets, std::size_t horizon);

}  // namespace stigp::eval
