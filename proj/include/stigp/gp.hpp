#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "stigp/linalg.hpp"

namespace stigp::gp {

/// Hyperparameters of the squared-exponential (RBF) kernel plus white noise:
///
///     k(x, x') = signal_var * exp(-|x - x'|^2 / (2 l^2)) + noise_var * [same index]
///
/// `length_scales` holds a single entry for the isotropic kernel or one entry
/// per input dimension in ARD mode.
struct KernelParams {
    double signal_var = 1.0;
    double noise_var = 0.0;
    Vector length_scales = Vector::Ones(1);

    bool ard() const { return length_scales.size() > 1; }

    // Throws InvalidArgument unless every field is finite, signal_var > 0,
    // noise_var >= 0 and all length scales are positive. `dim` is checked
    // against the ARD length-scale count when positive.
    void validate(Eigen::Index dim = 0) const;

    static KernelParams isotropic(double signal_var, double length_scale, double noise_var);
};

/// Packing order of the log-parameter vector: log signal_var, log length
/// scale(s), log noise_var.
Vector to_log(const KernelParams& params);
KernelParams from_log(const Vector& log_params, Eigen::Index num_length_scales);

double kernel_eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x_prime,
                   bool same_index, const KernelParams& params);

/// Squared (optionally length-scale weighted) distances between the rows of `a` and `b`.
Matrix scaled_sq_dist(const Matrix& a, const Matrix& b, const Vector& length_scales);

/// Noise-free RBF cross-covariance between the rows of `a` and `b`.
Matrix cross_cov(const Matrix& a, const Matrix& b, const KernelParams& params);

/// Training covariance of the rows of `inputs`: RBF part plus noise_var on the diagonal.
Matrix gram(const Matrix& inputs, const KernelParams& params);

/// Value and gradient of log p(y | X, params). The gradient is taken with respect
/// to the log-parameter vector (see `to_log`).
struct LikelihoodEval {
    double value = 0.0;
    Vector grad;
    double jitter = 0.0;
};

LikelihoodEval evaluate_log_likelihood(const Matrix& inputs, const Vector& targets,
                                       const KernelParams& params, bool with_grad = true);

double log_marginal_likelihood(const Matrix& inputs, const Vector& targets,
                               const KernelParams& params);

Vector log_marginal_likelihood_grad(const Matrix& inputs, const Vector& targets,
                                    const KernelParams& params);

/// Hyperparameter search settings. Bounds are natural-log bounds on the
/// amplitudes sigma_f, l and sigma_n (so the variances live in twice that range).
struct OptimConfig {
    double lower_bound = std::log(1e-3);
    double upper_bound = std::log(1e3);
    int max_run = 3;
    int max_iters = 200;
    double grad_tol = 1e-6;

    void validate() const;
};

/// Bounds for the packed log-parameter vector of a kernel with `num_length_scales` scales.
void kernel_bounds(const OptimConfig& config, Eigen::Index num_length_scales, Vector& lower,
                   Vector& upper);

/// Data-driven starting point: signal_var = var(y), l = median pairwise input
/// distance, noise_var = 0.01 var(y). Degenerate statistics fall back to 1.
KernelParams initial_params(const Matrix& inputs, const Vector& targets, bool ard);

/// Start of restart `restart` (0-based). Restart 0 is `base`; later restarts
/// scale each hyperparameter by a log-uniform factor in [1/4, 4] drawn from `rng`.
KernelParams restart_params(const KernelParams& base, int restart, std::mt19937_64& rng);

struct RestartTrace {
    double initial_log_likelihood = 0.0;
    double final_log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    bool failed = false;
};

struct FitSummary {
    double log_likelihood = 0.0;
    int restart = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<RestartTrace> restarts;
};

/// A conditioned GP: training data, hyperparameters, cached factorization.
/// Immutable once built.
struct GpModel {
    Matrix inputs;
    Vector targets;
    KernelParams params;
    JitteredCholesky chol;
    Vector alpha;
    FitSummary fit;
};

/// Conditions a GP on data with fixed hyperparameters.
GpModel condition(const Matrix& inputs, const Vector& targets, const KernelParams& params);

/// Maximizes the log marginal likelihood over `config.max_run` restarts with
/// projected BFGS in the log domain. Deterministic given `seed`.
GpModel fit(const Matrix& inputs, const Vector& targets, const OptimConfig& config,
            std::uint64_t seed, bool ard = false);

struct Prediction {
    Vector mean;
    Vector var;
};

/// Latent (noise-free) posterior at the rows of `query`.
Prediction predict(const GpModel& model, const Matrix& query);

}  // namespace stigp::gp
