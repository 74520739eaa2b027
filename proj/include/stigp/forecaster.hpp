#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stigp/dataset.hpp"
#include "stigp/gp.hpp"
#include "stigp/mtgp.hpp"

namespace stigp::forecast {

struct ForecastConfig {
    std::size_t target = 0;
    std::size_t train_len = 0;   // M
    std::size_t embedding = 0;   // L; the forecast covers L-1 steps
    std::size_t block_size = 5;  // J, mappings fitted jointly
    gp::OptimConfig optim;
    std::uint64_t seed = 0;
    bool ard = false;
    // Blocks fitted concurrently; results do not depend on it.
    unsigned threads = 1;

    void validate() const;
};

/// Z-score statistics computed from the training window t_1..t_M only.
struct Standardizer {
    Vector input_means;
    Vector input_stds;
    double target_mean = 0.0;
    double target_std = 1.0;
    // Variables whose training window has zero variance (their std is forced to 1).
    std::vector<std::size_t> constant_variables;
    bool target_constant = false;

    static Standardizer fit(const Dataset& dataset, std::size_t target, std::size_t train_len);

    /// Standardized snapshots of the training window, one row per time point (M x N).
    Matrix inputs(const Dataset& dataset, std::size_t train_len) const;
    /// Standardized target over the training window.
    Vector target(const Dataset& dataset, std::size_t target_index, std::size_t train_len) const;
};

/// One future value predicted by one mapping, in data units.
struct RawPrediction {
    std::size_t row = 0;   // mapping l
    std::size_t step = 0;  // k: predicts t_{M+k}
    double mean = 0.0;
    double variance = 0.0;
};

struct StepForecast {
    std::size_t step = 0;
    std::size_t t = 0;  // 1-based time index M + step
    double mean = 0.0;
    double dispersion = 0.0;     // population std of the contributing means
    double mean_variance = 0.0;  // average predictive variance of the contributors
    std::size_t contributors = 0;
};

struct BlockSummary {
    std::size_t block_index = 0;
    std::vector<std::size_t> rows;
    double log_likelihood = 0.0;  // standardized units
    int restart = 0;
    int iterations = 0;
    bool converged = false;
    gp::KernelParams theta;
    Matrix coreg;  // K^f
};

struct Forecast {
    std::size_t target = 0;
    std::size_t train_len = 0;
    std::size_t embedding = 0;
    std::size_t block_size = 0;
    std::vector<StepForecast> steps;
    std::vector<RawPrediction> raw;  // sorted by (row, step)
    std::vector<BlockSummary> blocks;
    Standardizer standardizer;

    std::size_t horizon() const { return embedding - 1; }
};

/// Averages each future step over the mappings that predict it. `raw` must
/// hold exactly one entry for every (row l in 2..L, step k in 1..l-1).
std::vector<StepForecast> aggregate(const std::vector<RawPrediction>& raw, std::size_t embedding,
                                    std::size_t train_len);

/// Standardize, partition the mapping rows into blocks of `block_size`, fit
/// each block jointly, predict every row's future points and average per step.
/// Reads only the first `train_len` columns of `dataset`.
Forecast run(const Dataset& dataset, const ForecastConfig& config);

/// `run` with one mapping per block (independent single-task regressions).
Forecast single_task_run(const Dataset& dataset, ForecastConfig config);

/// Seed used for block `block` of a run seeded with `seed`.
std::uint64_t block_seed(std::uint64_t seed, std::size_t block);

}  // namespace stigp::forecast
