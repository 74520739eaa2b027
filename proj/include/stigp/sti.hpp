#pragma once

#include <cstddef>
#include <vector>

#include "stigp/dataset.hpp"

namespace stigp::sti {

/// Half-open range [begin, end) of 0-based time columns.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool empty() const { return end == begin; }
    bool operator==(const IndexRange&) const = default;
};

/// One row of the mapping matrix. Row `row` (1-based, l in the docs) maps the
/// snapshot X(t_m) to y(t_{m+l-1}). Documentation uses 1-based time t_1..t_M;
/// the ranges below are 0-based columns.
struct MappingTask {
    std::size_t row = 0;
    IndexRange train_inputs;    // t_1 .. t_{M-l+1}
    IndexRange train_targets;   // t_l .. t_M
    IndexRange predict_inputs;  // t_{M-l+2} .. t_M, empty for l = 1

    /// 0-based column of the future target predicted from predict input `i`:
    /// column M + i, i.e. t_{M+1+i}.
    std::size_t predicted_column(std::size_t i) const { return predict_inputs.end + i; }
};

/// Consecutive rows fitted jointly.
struct TaskBlock {
    std::size_t block_index = 0;
    std::vector<MappingTask> rows;
};

/// Mapping matrix of a target variable over the first `train_len` observations
/// with `embedding` rows. Predicts t_{M+1}..t_{M+L-1}. Holds only the shape of
/// the source dataset, never the data.
class StiProblem {
public:
    StiProblem(std::size_t num_variables, std::size_t num_times, std::size_t target,
               std::size_t train_len, std::size_t embedding);

    std::size_t num_variables() const { return num_variables_; }
    std::size_t num_times() const { return num_times_; }
    std::size_t target() const { return target_; }
    std::size_t train_len() const { return train_len_; }
    std::size_t embedding() const { return embedding_; }
    std::size_t horizon() const { return embedding_ - 1; }

    MappingTask mapping_task(std::size_t row) const;
    std::vector<TaskBlock> partition_blocks(std::size_t block_size) const;

private:
    std::size_t num_variables_;
    std::size_t num_times_;
    std::size_t target_;
    std::size_t train_len_;
    std::size_t embedding_;
};

/// Validates the arguments and builds the problem. Throws InvalidArgument for
/// embedding > train_len, embedding < 2, train_len > T, a target out of range or
/// a dataset with missing cells.
StiProblem build_sti(const Dataset& dataset, std::size_t target, std::size_t train_len,
                     std::size_t embedding);

/// Index-only form of `partition_blocks`: rows 1..embedding tiled with stride
/// `block_size`, the last block possibly shorter.
std::vector<std::vector<std::size_t>> block_rows(std::size_t embedding, std::size_t block_size);

}  // namespace stigp::sti
