#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stigp/dataset.hpp"
#include "stigp/eval.hpp"
#include "stigp/forecaster.hpp"

namespace stigp::report {

inline constexpr int kSchemaVersion = 1;

/// Forecast document as written by `predict`:
///   { schema, target, train_len, horizon,
///     steps:  [{t, mean, dispersion, mean_variance, contributors}],
///     raw:    [{row_l, t, mean, variance}],
///     blocks: [{rows, nlml, restart, theta: {signal_var, length_scale, noise_var}, coreg_diag}],
///     manifest }
/// `nlml` is the negative log marginal likelihood in standardized units;
/// `length_scale` is an array in ARD mode.
nlohmann::json forecast_to_json(const forecast::Forecast& forecast, const std::string& target_name,
                                const nlohmann::json& manifest);

/// Per-block fit summaries for run manifests.
nlohmann::json block_summaries(const forecast::Forecast& forecast);

/// The parts of a forecast document the evaluation and report commands need.
struct ForecastDoc {
    std::string target;
    std::size_t train_len = 0;
    std::size_t horizon = 0;
    std::vector<forecast::StepForecast> steps;
};

/// Throws ParseError on a schema mismatch or missing fields.
ForecastDoc forecast_from_json(const nlohmann::json& doc);

nlohmann::json metrics_to_json(const eval::MetricReport& report);

/// Fixed-width table of named metric reports; undefined correlations render as "n/a".
std::string metrics_table(const std::vector<std::pair<std::string, eval::MetricReport>>& rows);

/// Plot-data CSV with columns t,truth,predicted,dispersion,split and one row per
/// t_1..t_{M+H}. Training rows take truth from `history`; forecast rows take it
/// from `truth` when that file reaches far enough, and stay empty otherwise.
std::string plot_data_csv(const ForecastDoc& doc, const Dataset& history,
                          const std::optional<Dataset>& truth);

}  // namespace stigp::report
