#include "stigp/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <future>
#include <random>
#include <string>

#include "stigp/error.hpp"
#include "stigp/sti.hpp"

namespace stigp::forecast {

void ForecastConfig::validate() const {
    if (block_size < 1) throw InvalidArgument("forecast: block size J must be at least 1");
    if (embedding < 2) throw InvalidArgument("forecast: embedding dimension must be at least 2");
    if (embedding > train_len) throw InvalidArgument("forecast: embedding dimension exceeds train length");
    optim.validate();
}

Standardizer Standardizer::fit(const Dataset& dataset, std::size_t target, std::size_t train_len) {
    if (train_len < 1 || train_len > dataset.num_times())
        throw InvalidArgument("standardize: train length out of range");
    if (target >= dataset.num_variables()) throw InvalidArgument("standardize: target out of range");
    const auto m = static_cast<Eigen::Index>(train_len);
    const Matrix window = dataset.values.leftCols(m);

    Standardizer s;
    s.input_means = window.rowwise().mean();
    s.input_stds.resize(window.rows());
    for (Eigen::Index i = 0; i < window.rows(); ++i) {
        const double var = (window.row(i).array() - s.input_means[i]).square().mean();
        double sd = std::sqrt(var);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(s.input_means[i])))) {
            sd = 1.0;
            s.constant_variables.push_back(static_cast<std::size_t>(i));
        }
        s.input_stds[i] = sd;
    }
    const auto t = static_cast<Eigen::Index>(target);
    s.target_mean = s.input_means[t];
    s.target_std = s.input_stds[t];
    s.target_constant = std::find(s.constant_variables.begin(), s.constant_variables.end(), target) !=
                        s.constant_variables.end();
    return s;
}

Matrix Standardizer::inputs(const Dataset& dataset, std::size_t train_len) const {
    const auto m = static_cast<Eigen::Index>(train_len);
    const Matrix window = dataset.values.leftCols(m);
    return ((window.colwise() - input_means).array().colwise() / input_stds.array()).matrix().transpose();
}

Vector Standardizer::target(const Dataset& dataset, std::size_t target_index, std::size_t train_len) const {
    const auto m = static_cast<Eigen::Index>(train_len);
    const Vector y = dataset.values.row(static_cast<Eigen::Index>(target_index)).head(m).transpose();
    return ((y.array() - target_mean) / target_std).matrix();
}

std::vector<StepForecast> aggregate(const std::vector<RawPrediction>& raw, std::size_t embedding,
                                    std::size_t train_len) {
    if (embedding < 2) throw InvalidArgument("aggregate: embedding dimension must be at least 2");
    const std::size_t horizon = embedding - 1;
    std::vector<std::vector<const RawPrediction*>> by_step(horizon);
    for (const RawPrediction& p : raw) {
        if (p.step < 1 || p.step > horizon || p.row < p.step + 1 || p.row > embedding)
            throw Error("aggregate: prediction (row " + std::to_string(p.row) + ", step " +
                        std::to_string(p.step) + ") outside the mapping matrix");
        by_step[p.step - 1].push_back(&p);
    }

    std::vector<StepForecast> out;
    for (std::size_t k = 1; k <= horizon; ++k) {
        auto& contrib = by_step[k - 1];
        if (contrib.size() != embedding - k)
            throw Error("aggregate: step " + std::to_string(k) + " has " + std::to_string(contrib.size()) +
                        " contributors, expected " + std::to_string(embedding - k));
        std::sort(contrib.begin(), contrib.end(),
                  [](const RawPrediction* a, const RawPrediction* b) { return a->row < b->row; });
        for (std::size_t i = 1; i < contrib.size(); ++i)
            if (contrib[i]->row == contrib[i - 1]->row)
                throw Error("aggregate: duplicate prediction for row " + std::to_string(contrib[i]->row));

        const double count = static_cast<double>(contrib.size());
        double sum = 0.0, var_sum = 0.0;
        for (const auto* p : contrib) {
            sum += p->mean;
            var_sum += p->variance;
        }
        const double mean = sum / count;
        double sq = 0.0;
        for (const auto* p : contrib) sq += (p->mean - mean) * (p->mean - mean);

        StepForecast step;
        step.step = k;
        step.t = train_len + k;
        step.mean = mean;
        step.dispersion = std::sqrt(sq / count);
        step.mean_variance = var_sum / count;
        step.contributors = contrib.size();
        out.push_back(step);
    }
    return out;
}

std::uint64_t block_seed(std::uint64_t seed, std::size_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), 0x5eedu};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

namespace {

struct BlockResult {
    BlockSummary summary;
    std::vector<RawPrediction> raw;
};

BlockResult fit_and_predict(const sti::TaskBlock& block, const Matrix& inputs, const Vector& target,
                            const Standardizer& stats, const ForecastConfig& config) {
    mtgp::MtgpModel model;
    try {
        model = mtgp::fit_block(block, inputs, target, config.optim, block_seed(config.seed, block.block_index),
                                config.ard);
    } catch (const IllConditionedError& e) {
        throw BlockFitError(e.what(), block.block_index);
    }

    BlockResult out;
    out.summary.block_index = block.block_index;
    out.summary.rows = model.rows;
    out.summary.log_likelihood = model.fit.log_likelihood;
    out.summary.restart = model.fit.restart;
    out.summary.iterations = model.fit.iterations;
    out.summary.converged = model.fit.converged;
    out.summary.theta = model.params;
    out.summary.coreg = model.coreg.covariance();

    const double scale = stats.target_std;
    for (std::size_t j = 0; j < block.rows.size(); ++j) {
        const sti::MappingTask& row = block.rows[j];
        if (row.predict_inputs.empty()) continue;
        const Matrix query = inputs.middleRows(static_cast<Eigen::Index>(row.predict_inputs.begin),
                                               static_cast<Eigen::Index>(row.predict_inputs.size()));
        const gp::Prediction pred = mtgp::predict(model, static_cast<int>(j), query);
        for (Eigen::Index i = 0; i < query.rows(); ++i) {
            RawPrediction p;
            p.row = row.row;
            p.step = static_cast<std::size_t>(i) + 1;
            p.mean = pred.mean[i] * scale + stats.target_mean;
            p.variance = pred.var[i] * scale * scale;
            out.raw.push_back(p);
        }
    }
    return out;
}

}  // namespace

Forecast run(const Dataset& dataset, const ForecastConfig& config) {
    config.validate();
    dataset.validate();
    const sti::StiProblem problem =
        sti::StiProblem(dataset.num_variables(), dataset.num_times(), config.target, config.train_len,
                        config.embedding);
    if (dataset.missing.size() > 0 &&
        dataset.missing.leftCols(static_cast<Eigen::Index>(config.train_len)).any())
        throw InvalidArgument("forecast: training window has missing cells; impute first");

    Forecast out;
    out.target = config.target;
    out.train_len = config.train_len;
    out.embedding = config.embedding;
    out.block_size = config.block_size;
    out.standardizer = Standardizer::fit(dataset, config.target, config.train_len);
    const Matrix inputs = out.standardizer.inputs(dataset, config.train_len);
    const Vector target = out.standardizer.target(dataset, config.target, config.train_len);

    const std::vector<sti::TaskBlock> blocks = problem.partition_blocks(config.block_size);
    std::vector<BlockResult> results(blocks.size());
    const std::size_t workers = std::max(1u, config.threads);
    if (workers == 1) {
        for (std::size_t b = 0; b < blocks.size(); ++b)
            results[b] = fit_and_predict(blocks[b], inputs, target, out.standardizer, config);
    } else {
        // Each block writes its own slot, so completion order is irrelevant.
        for (std::size_t first = 0; first < blocks.size(); first += workers) {
            std::vector<std::future<BlockResult>> pending;
            const std::size_t last = std::min(blocks.size(), first + workers);
            for (std::size_t b = first; b < last; ++b)
                pending.push_back(std::async(std::launch::async, [&, b] {
                    return fit_and_predict(blocks[b], inputs, target, out.standardizer, config);
                }));
            for (std::size_t b = first; b < last; ++b) results[b] = pending[b - first].get();
        }
    }

    for (BlockResult& r : results) {
        out.blocks.push_back(std::move(r.summary));
        out.raw.insert(out.raw.end(), r.raw.begin(), r.raw.end());
    }
    std::sort(out.raw.begin(), out.raw.end(), [](const RawPrediction& a, const RawPrediction& b) {
        return a.row != b.row ? a.row < b.row : a.step < b.step;
    });
    out.steps = aggregate(out.raw, config.embedding, config.train_len);
    return out;
}

Forecast single_task_run(const Dataset& dataset, ForecastConfig config) {
    config.block_size = 1;
    return run(dataset, config);
}

}  // namespace stigp::forecast
