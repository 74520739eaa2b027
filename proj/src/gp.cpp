#include "stigp/gp.hpp"

#include <algorithm>

#include "restart_search.hpp"
#include "stigp/error.hpp"

namespace stigp::gp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double sample_variance(const Vector& v) {
    if (v.size() < 2) return 0.0;
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(v.size());
}

double median_pairwise_distance(const Matrix& inputs) {
    const Eigen::Index n = inputs.rows();
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            d.push_back((inputs.row(i) - inputs.row(j)).norm());
    if (d.empty()) return 0.0;
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
    double med = d[mid];
    if (d.size() % 2 == 0) {
        const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
        med = 0.5 * (med + lower);
    }
    return med;
}

void check_training_data(const Matrix& inputs, const Vector& targets) {
    if (inputs.rows() < 1) throw InvalidArgument("gp: need at least one training point");
    if (inputs.rows() != targets.size())
        throw InvalidArgument("gp: input rows and target count differ");
    if (!inputs.allFinite() || !targets.allFinite())
        throw InvalidArgument("gp: non-finite training data");
}

}  // namespace

void KernelParams::validate(Eigen::Index dim) const {
    if (!std::isfinite(signal_var) || !(signal_var > 0.0))
        throw InvalidArgument("kernel: signal_var must be finite and positive");
    if (!std::isfinite(noise_var) || noise_var < 0.0)
        throw InvalidArgument("kernel: noise_var must be finite and non-negative");
    if (length_scales.size() < 1 || !length_scales.allFinite() ||
        !(length_scales.array() > 0.0).all())
        throw InvalidArgument("kernel: length scales must be finite and positive");
    if (dim > 0 && ard() && length_scales.size() != dim)
        throw InvalidArgument("kernel: ARD length-scale count does not match input dimension");
}

KernelParams KernelParams::isotropic(double signal_var, double length_scale, double noise_var) {
    KernelParams p;
    p.signal_var = signal_var;
    p.noise_var = noise_var;
    p.length_scales = Vector::Constant(1, length_scale);
    return p;
}

Vector to_log(const KernelParams& params) {
    const Eigen::Index nl = params.length_scales.size();
    Vector x(nl + 2);
    x[0] = std::log(params.signal_var);
    x.segment(1, nl) = params.length_scales.array().log();
    x[nl + 1] = std::log(params.noise_var);
    return x;
}

KernelParams from_log(const Vector& log_params, Eigen::Index num_length_scales) {
    if (log_params.size() < num_length_scales + 2)
        throw InvalidArgument("from_log: parameter vector too short");
    KernelParams p;
    p.signal_var = std::exp(log_params[0]);
    p.length_scales = log_params.segment(1, num_length_scales).array().exp();
    p.noise_var = std::exp(log_params[num_length_scales + 1]);
    return p;
}

double kernel_eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x_prime,
                   bool same_index, const KernelParams& params) {
    if (x.size() != x_prime.size()) throw InvalidArgument("kernel_eval: dimension mismatch");
    params.validate(x.size());
    double r2 = 0.0;
    if (params.ard()) {
        r2 = ((x - x_prime).array() / params.length_scales.array()).square().sum();
    } else {
        const double l = params.length_scales[0];
        r2 = (x - x_prime).squaredNorm() / (l * l);
    }
    return params.signal_var * std::exp(-0.5 * r2) + (same_index ? params.noise_var : 0.0);
}

Matrix scaled_sq_dist(const Matrix& a, const Matrix& b, const Vector& length_scales) {
    if (a.cols() != b.cols()) throw InvalidArgument("scaled_sq_dist: dimension mismatch");
    Matrix d(a.rows(), b.rows());
    if (length_scales.size() > 1) {
        if (length_scales.size() != a.cols())
            throw InvalidArgument("scaled_sq_dist: length-scale count mismatch");
        const Eigen::RowVectorXd inv = length_scales.cwiseInverse().transpose();
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < b.rows(); ++j)
                d(i, j) = ((a.row(i) - b.row(j)).cwiseProduct(inv)).squaredNorm();
    } else {
        const double inv2 = 1.0 / (length_scales[0] * length_scales[0]);
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < b.rows(); ++j)
                d(i, j) = (a.row(i) - b.row(j)).squaredNorm() * inv2;
    }
    return d;
}

Matrix cross_cov(const Matrix& a, const Matrix& b, const KernelParams& params) {
    params.validate(a.cols());
    return params.signal_var * (-0.5 * scaled_sq_dist(a, b, params.length_scales)).array().exp().matrix();
}

Matrix gram(const Matrix& inputs, const KernelParams& params) {
    if (inputs.rows() < 1) throw InvalidArgument("gram: no inputs");
    if (!inputs.allFinite()) throw InvalidArgument("gram: non-finite inputs");
    Matrix k = cross_cov(inputs, inputs, params);
    // Distances on the diagonal are exactly zero; enforce exact symmetry too.
    k = 0.5 * (k + k.transpose()).eval();
    k.diagonal().setConstant(params.signal_var + params.noise_var);
    return k;
}

LikelihoodEval evaluate_log_likelihood(const Matrix& inputs, const Vector& targets,
                                       const KernelParams& params, bool with_grad) {
    check_training_data(inputs, targets);
    params.validate(inputs.cols());

    const Eigen::Index n = inputs.rows();
    const Matrix k = gram(inputs, params);
    const JitteredCholesky chol = jittered_cholesky(k);
    const Vector alpha = chol.llt.solve(targets);

    LikelihoodEval out;
    out.jitter = chol.jitter;
    out.value = -0.5 * targets.dot(alpha) - 0.5 * log_det(chol.llt) - 0.5 * static_cast<double>(n) * kLog2Pi;
    if (!with_grad) return out;

    // d log p / d theta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta)
    const Matrix k_inv = chol.llt.solve(Matrix::Identity(n, n));
    const Matrix q = alpha * alpha.transpose() - k_inv;

    Matrix rbf = k;
    rbf.diagonal().setConstant(params.signal_var);

    const Eigen::Index nl = params.length_scales.size();
    out.grad.resize(nl + 2);
    out.grad[0] = 0.5 * q.cwiseProduct(rbf).sum();
    if (params.ard()) {
        for (Eigen::Index d = 0; d < nl; ++d) {
            const double l = params.length_scales[d];
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double diff = inputs(i, d) - inputs(j, d);
                    acc += q(i, j) * rbf(i, j) * diff * diff;
                }
            out.grad[1 + d] = 0.5 * acc / (l * l);
        }
    } else {
        const double l = params.length_scales[0];
        const Matrix d2 = scaled_sq_dist(inputs, inputs, Vector::Ones(1));
        out.grad[1] = 0.5 * (q.array() * rbf.array() * d2.array()).sum() / (l * l);
    }
    out.grad[nl + 1] = 0.5 * params.noise_var * q.trace();
    return out;
}

double log_marginal_likelihood(const Matrix& inputs, const Vector& targets,
                               const KernelParams& params) {
    return evaluate_log_likelihood(inputs, targets, params, false).value;
}

Vector log_marginal_likelihood_grad(const Matrix& inputs, const Vector& targets,
                                    const KernelParams& params) {
    return evaluate_log_likelihood(inputs, targets, params, true).grad;
}

void OptimConfig::validate() const {
    if (!std::isfinite(lower_bound) || !std::isfinite(upper_bound) || !(lower_bound < upper_bound))
        throw InvalidArgument("optim: lower bound must be below upper bound");
    if (max_run < 1) throw InvalidArgument("optim: max_run must be at least 1");
    if (max_iters < 0) throw InvalidArgument("optim: max_iters must be non-negative");
    if (!(grad_tol >= 0.0)) throw InvalidArgument("optim: grad_tol must be non-negative");
}

void kernel_bounds(const OptimConfig& config, Eigen::Index num_length_scales, Vector& lower,
                   Vector& upper) {
    lower.resize(num_length_scales + 2);
    upper.resize(num_length_scales + 2);
    lower.setConstant(config.lower_bound);
    upper.setConstant(config.upper_bound);
    // signal and noise enter as variances
    lower[0] *= 2.0;
    upper[0] *= 2.0;
    lower[num_length_scales + 1] *= 2.0;
    upper[num_length_scales + 1] *= 2.0;
}

KernelParams initial_params(const Matrix& inputs, const Vector& targets, bool ard) {
    double var = sample_variance(targets);
    if (!(var > 0.0)) var = 1.0;
    double l = median_pairwise_distance(inputs);
    if (!(l > 0.0)) l = 1.0;
    KernelParams p;
    p.signal_var = var;
    p.noise_var = 0.01 * var;
    p.length_scales = Vector::Constant(ard ? inputs.cols() : 1, l);
    return p;
}

KernelParams restart_params(const KernelParams& base, int restart, std::mt19937_64& rng) {
    if (restart == 0) return base;
    std::uniform_real_distribution<double> log_factor(std::log(0.25), std::log(4.0));
    KernelParams p = base;
    p.signal_var *= std::exp(log_factor(rng));
    for (Eigen::Index i = 0; i < p.length_scales.size(); ++i)
        p.length_scales[i] *= std::exp(log_factor(rng));
    p.noise_var *= std::exp(log_factor(rng));
    return p;
}

GpModel condition(const Matrix& inputs, const Vector& targets, const KernelParams& params) {
    check_training_data(inputs, targets);
    params.validate(inputs.cols());
    GpModel model;
    model.inputs = inputs;
    model.targets = targets;
    model.params = params;
    model.chol = jittered_cholesky(gram(inputs, params));
    model.alpha = model.chol.llt.solve(targets);
    return model;
}

GpModel fit(const Matrix& inputs, const Vector& targets, const OptimConfig& config,
            std::uint64_t seed, bool ard) {
    check_training_data(inputs, targets);
    config.validate();

    const KernelParams base = initial_params(inputs, targets, ard);
    const Eigen::Index nl = base.length_scales.size();
    Vector lower, upper;
    kernel_bounds(config, nl, lower, upper);

    std::mt19937_64 rng(seed);
    std::vector<Vector> starts;
    for (int r = 0; r < config.max_run; ++r)
        starts.push_back(to_log(restart_params(base, r, rng)).cwiseMax(lower).cwiseMin(upper));

    const detail::LogLikelihoodFn lml = [&](const Vector& x, double& value, Vector& grad) {
        try {
            LikelihoodEval e = evaluate_log_likelihood(inputs, targets, from_log(x, nl), true);
            value = e.value;
            grad = std::move(e.grad);
            return true;
        } catch (const IllConditionedError&) {
            return false;
        }
    };

    detail::SearchOutcome outcome = detail::restart_search(lml, starts, lower, upper, config);
    if (!outcome.any_success)
        throw IllConditionedError("gp fit: every restart failed to factor the kernel matrix");

    GpModel model = condition(inputs, targets, from_log(outcome.best_x, nl));
    model.fit = std::move(outcome.summary);
    return model;
}

Prediction predict(const GpModel& model, const Matrix& query) {
    if (query.cols() != model.inputs.cols()) throw InvalidArgument("gp predict: dimension mismatch");
    const Matrix k_star = cross_cov(query, model.inputs, model.params);
    Prediction out;
    out.mean = k_star * model.alpha;
    const Matrix v = model.chol.llt.matrixL().solve(k_star.transpose());
    out.var = (model.params.signal_var - v.colwise().squaredNorm().transpose().array()).max(0.0).matrix();
    return out;
}

}  // namespace stigp::gp
