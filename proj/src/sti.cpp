#include "stigp/sti.hpp"

#include <algorithm>
#include <string>

#include "stigp/error.hpp"

namespace stigp::sti {

StiProblem::StiProblem(std::size_t num_variables, std::size_t num_times, std::size_t target,
                       std::size_t train_len, std::size_t embedding)
    : num_variables_(num_variables),
      num_times_(num_times),
      target_(target),
      train_len_(train_len),
      embedding_(embedding) {
    if (embedding_ < 2) throw InvalidArgument("sti: embedding dimension L must be at least 2");
    if (embedding_ > train_len_)
        throw InvalidArgument("sti: embedding dimension L=" + std::to_string(embedding_) +
                              " exceeds train length M=" + std::to_string(train_len_) +
                              " (at most M-1 steps can be predicted)");
    if (train_len_ > num_times_)
        throw InvalidArgument("sti: train length M=" + std::to_string(train_len_) +
                              " exceeds the " + std::to_string(num_times_) + " observed time points");
    if (target_ >= num_variables_)
        throw InvalidArgument("sti: target index " + std::to_string(target_) + " out of range");
}

MappingTask StiProblem::mapping_task(std::size_t row) const {
    if (row < 1 || row > embedding_)
        throw InvalidArgument("sti: row " + std::to_string(row) + " outside [1, " +
                              std::to_string(embedding_) + "]");
    const std::size_t m = train_len_;
    MappingTask task;
    task.row = row;
    task.train_inputs = {0, m - row + 1};
    task.train_targets = {row - 1, m};
    task.predict_inputs = {m - row + 1, m};
    return task;
}

std::vector<TaskBlock> StiProblem::partition_blocks(std::size_t block_size) const {
    std::vector<TaskBlock> blocks;
    for (const auto& rows : block_rows(embedding_, block_size)) {
        TaskBlock block;
        block.block_index = blocks.size();
        for (std::size_t r : rows) block.rows.push_back(mapping_task(r));
        blocks.push_back(std::move(block));
    }
    return blocks;
}

StiProblem build_sti(const Dataset& dataset, std::size_t target, std::size_t train_len,
                     std::size_t embedding) {
    if (dataset.has_missing())
        throw InvalidArgument("sti: dataset has missing cells; impute before building the problem");
    return StiProblem(dataset.num_variables(), dataset.num_times(), target, train_len, embedding);
}

std::vector<std::vector<std::size_t>> block_rows(std::size_t embedding, std::size_t block_size) {
    if (block_size < 1) throw InvalidArgument("sti: block size J must be at least 1");
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t first = 1; first <= embedding; first += block_size) {
        std::vector<std::size_t> rows;
        for (std::size_t r = first; r <= std::min(embedding, first + block_size - 1); ++r)
            rows.push_back(r);
        out.push_back(std::move(rows));
    }
    return out;
}

}  // namespace stigp::sti
