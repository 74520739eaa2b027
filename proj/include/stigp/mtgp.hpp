#pragma once

#include <cstdint>
#include <vector>

#include "stigp/gp.hpp"
#include "stigp/sti.hpp"

namespace stigp::mtgp {

/// Inter-task covariance K^f = L L^T, stored as its lower-triangular factor
/// with a strictly positive diagonal.
struct CoregMatrix {
    Matrix factor;

    Eigen::Index num_tasks() const { return factor.rows(); }
    Matrix covariance() const { return factor * factor.transpose(); }
    /// Correlation implied by K^f between tasks a and b.
    double correlation(Eigen::Index a, Eigen::Index b) const;

    static CoregMatrix identity(Eigen::Index tasks);
    /// Cholesky factor of a positive definite K^f.
    static CoregMatrix from_covariance(const Matrix& kf);

    void validate() const;
};

/// Training points of all tasks in one stack, task-major and time-ascending.
struct StackedData {
    Matrix inputs;           // one row per stacked point
    std::vector<int> task;   // task label of each row
    Vector targets;
    int num_tasks = 0;

    Eigen::Index size() const { return inputs.rows(); }
    void validate() const;

    /// Appends the rows of `inputs` with the given targets as task `label`.
    void append(int label, const Matrix& inputs, const Vector& targets);
};

/// Packed log-parameters: the kernel block of gp::to_log followed by the free
/// coregionalization entries. The factor's (0,0) entry is pinned to 1 so the
/// overall scale lives in signal_var; each remaining row i contributes its
/// off-diagonal entries L(i,0..i-1) and then log L(i,i).
Vector pack(const gp::KernelParams& params, const CoregMatrix& coreg);
void unpack(const Vector& x, Eigen::Index num_length_scales, Eigen::Index num_tasks,
            gp::KernelParams& params, CoregMatrix& coreg);
Eigen::Index num_coreg_params(Eigen::Index num_tasks);

/// Entry ((x,j),(x',j')) = K^f(j,j') k_rbf(x,x') + noise_var [same stacked index].
Matrix stacked_cov(const StackedData& data, const gp::KernelParams& params, const CoregMatrix& coreg);

/// Gaussian log marginal likelihood of the stacked targets; the gradient is
/// with respect to `pack(params, coreg)`, including the free factor entries.
gp::LikelihoodEval evaluate_log_likelihood(const StackedData& data, const gp::KernelParams& params,
                                           const CoregMatrix& coreg, bool with_grad = true);

double log_marginal_likelihood(const StackedData& data, const gp::KernelParams& params,
                               const CoregMatrix& coreg);

struct MtgpModel {
    std::vector<std::size_t> rows;  // mapping rows of the block, task j <-> rows[j]
    StackedData data;
    gp::KernelParams params;
    CoregMatrix coreg;
    JitteredCholesky chol;
    Vector alpha;
    gp::FitSummary fit;
};

MtgpModel condition(StackedData data, const gp::KernelParams& params, const CoregMatrix& coreg);

/// Joint maximization over kernel hyperparameters and the coregionalization
/// factor. Every restart starts the factor at the identity; kernel starts
/// follow gp::initial_params on the task with the most training points and
/// the same restart schedule as gp::fit.
MtgpModel fit(StackedData data, const gp::OptimConfig& config, std::uint64_t seed, bool ard = false);

/// Stacks the rows of `block` from standardized data (inputs: T x N, one row
/// per time point; target: length T) and fits them jointly.
StackedData stack_block(const sti::TaskBlock& block, const Matrix& inputs, const Vector& target);
MtgpModel fit_block(const sti::TaskBlock& block, const Matrix& inputs, const Vector& target,
                    const gp::OptimConfig& config, std::uint64_t seed, bool ard = false);

/// Latent posterior of task `task` at the rows of `query`.
gp::Prediction predict(const MtgpModel& model, int task, const Matrix& query);

}  // namespace stigp::mtgp
