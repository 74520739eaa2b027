#include "stigp/mtgp.hpp"

#include <cmath>
#include <string>

#include "restart_search.hpp"
#include "stigp/error.hpp"

namespace stigp::mtgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Task covariance expanded to stacked indices.
Matrix expand_task_cov(const StackedData& data, const Matrix& kf) {
    const Eigen::Index n = data.size();
    Matrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = kf(data.task[i], data.task[j]);
    return out;
}

// Unscaled squared distances between stacked inputs; reused across evaluations
// of the isotropic kernel.
Matrix sq_dist(const StackedData& data) {
    return gp::scaled_sq_dist(data.inputs, data.inputs, Vector::Ones(1));
}

gp::LikelihoodEval evaluate_impl(const StackedData& data, const Matrix* d2_plain,
                                 const gp::KernelParams& params, const CoregMatrix& coreg,
                                 bool with_grad) {
    const Eigen::Index n = data.size();
    const Eigen::Index tasks = coreg.num_tasks();
    const Matrix kf = coreg.covariance();

    Matrix rbf;
    Matrix d2_local;
    if (params.ard()) {
        rbf = gp::cross_cov(data.inputs, data.inputs, params);
    } else {
        if (!d2_plain) {
            d2_local = sq_dist(data);
            d2_plain = &d2_local;
        }
        const double l = params.length_scales[0];
        rbf = params.signal_var * (-0.5 / (l * l) * d2_plain->array()).exp().matrix();
    }
    rbf.diagonal().setConstant(params.signal_var);
    const Matrix signal = expand_task_cov(data, kf).cwiseProduct(rbf);
    Matrix sigma = signal;
    sigma.diagonal().array() += params.noise_var;

    const JitteredCholesky chol = jittered_cholesky(sigma);
    const Vector alpha = chol.llt.solve(data.targets);

    gp::LikelihoodEval out;
    out.jitter = chol.jitter;
    out.value = -0.5 * data.targets.dot(alpha) - 0.5 * log_det(chol.llt) -
                0.5 * static_cast<double>(n) * kLog2Pi;
    if (!with_grad) return out;

    const Matrix q = alpha * alpha.transpose() - chol.llt.solve(Matrix::Identity(n, n));
    const Eigen::Index nl = params.length_scales.size();
    out.grad.resize(nl + 2 + num_coreg_params(tasks));

    const Matrix qs = q.cwiseProduct(signal);
    out.grad[0] = 0.5 * qs.sum();
    if (params.ard()) {
        for (Eigen::Index d = 0; d < nl; ++d) {
            const double l = params.length_scales[d];
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double diff = data.inputs(i, d) - data.inputs(j, d);
                    acc += qs(i, j) * diff * diff;
                }
            out.grad[1 + d] = 0.5 * acc / (l * l);
        }
    } else {
        const double l = params.length_scales[0];
        out.grad[1] = 0.5 * (qs.array() * d2_plain->array()).sum() / (l * l);
    }
    out.grad[nl + 1] = 0.5 * params.noise_var * q.trace();

    // With T(a,b) = sum over task-a rows i, task-b rows j of q_ij rbf_ij,
    // d log p / d L(a,b) = (T L)(a,b).
    Matrix t = Matrix::Zero(tasks, tasks);
    const Matrix qr = q.cwiseProduct(rbf);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) t(data.task[i], data.task[j]) += qr(i, j);
    const Matrix tl = t * coreg.factor;
    Eigen::Index k = nl + 2;
    for (Eigen::Index i = 1; i < tasks; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) out.grad[k++] = tl(i, j);
        out.grad[k++] = tl(i, i) * coreg.factor(i, i);
    }
    return out;
}

}  // namespace

double CoregMatrix::correlation(Eigen::Index a, Eigen::Index b) const {
    const Matrix kf = covariance();
    return kf(a, b) / std::sqrt(kf(a, a) * kf(b, b));
}

CoregMatrix CoregMatrix::identity(Eigen::Index tasks) {
    if (tasks < 1) throw InvalidArgument("coreg: need at least one task");
    return CoregMatrix{Matrix::Identity(tasks, tasks)};
}

CoregMatrix CoregMatrix::from_covariance(const Matrix& kf) {
    if (kf.rows() != kf.cols() || kf.rows() < 1) throw InvalidArgument("coreg: K^f must be square");
    Eigen::LLT<Matrix> llt(kf);
    if (llt.info() != Eigen::Success) throw InvalidArgument("coreg: K^f is not positive definite");
    CoregMatrix c{llt.matrixL()};
    c.validate();
    return c;
}

void CoregMatrix::validate() const {
    if (factor.rows() < 1 || factor.rows() != factor.cols())
        throw InvalidArgument("coreg: factor must be square and non-empty");
    if (!factor.allFinite()) throw InvalidArgument("coreg: non-finite factor");
    if (!(factor.diagonal().array() > 0.0).all())
        throw InvalidArgument("coreg: factor diagonal must be strictly positive");
    if (!factor.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().isZero(0.0))
        throw InvalidArgument("coreg: factor must be lower triangular");
}

void StackedData::validate() const {
    if (size() < 1) throw InvalidArgument("mtgp: no training points");
    if (static_cast<Eigen::Index>(task.size()) != size() || targets.size() != size())
        throw InvalidArgument("mtgp: stacked sizes disagree");
    if (num_tasks < 1) throw InvalidArgument("mtgp: need at least one task");
    for (int label : task)
        if (label < 0 || label >= num_tasks)
            throw InvalidArgument("mtgp: invalid task label " + std::to_string(label));
    if (!inputs.allFinite() || !targets.allFinite()) throw InvalidArgument("mtgp: non-finite training data");
}

void StackedData::append(int label, const Matrix& rows, const Vector& values) {
    if (rows.rows() != values.size()) throw InvalidArgument("mtgp: input rows and targets differ");
    if (size() > 0 && rows.cols() != inputs.cols()) throw InvalidArgument("mtgp: input dimension mismatch");
    const Eigen::Index old = size();
    Matrix grown(old + rows.rows(), rows.cols());
    if (old) grown.topRows(old) = inputs;
    grown.bottomRows(rows.rows()) = rows;
    inputs = std::move(grown);
    Vector t(old + values.size());
    t << targets, values;
    targets = std::move(t);
    task.insert(task.end(), static_cast<std::size_t>(rows.rows()), label);
    num_tasks = std::max(num_tasks, label + 1);
}

Eigen::Index num_coreg_params(Eigen::Index num_tasks) { return num_tasks * (num_tasks + 1) / 2 - 1; }

Vector pack(const gp::KernelParams& params, const CoregMatrix& coreg) {
    const Vector kernel = gp::to_log(params);
    const Eigen::Index tasks = coreg.num_tasks();
    Vector x(kernel.size() + num_coreg_params(tasks));
    x.head(kernel.size()) = kernel;
    Eigen::Index k = kernel.size();
    for (Eigen::Index i = 1; i < tasks; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) x[k++] = coreg.factor(i, j) / coreg.factor(0, 0);
        x[k++] = std::log(coreg.factor(i, i) / coreg.factor(0, 0));
    }
    // Rescaling the factor to a unit (0,0) entry moves its scale into signal_var.
    x[0] += 2.0 * std::log(coreg.factor(0, 0));
    return x;
}

void unpack(const Vector& x, Eigen::Index num_length_scales, Eigen::Index num_tasks,
            gp::KernelParams& params, CoregMatrix& coreg) {
    if (x.size() != num_length_scales + 2 + num_coreg_params(num_tasks))
        throw InvalidArgument("mtgp: packed parameter size mismatch");
    params = gp::from_log(x, num_length_scales);
    coreg.factor = Matrix::Zero(num_tasks, num_tasks);
    coreg.factor(0, 0) = 1.0;
    Eigen::Index k = num_length_scales + 2;
    for (Eigen::Index i = 1; i < num_tasks; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) coreg.factor(i, j) = x[k++];
        coreg.factor(i, i) = std::exp(x[k++]);
    }
}

Matrix stacked_cov(const StackedData& data, const gp::KernelParams& params, const CoregMatrix& coreg) {
    data.validate();
    params.validate(data.inputs.cols());
    coreg.validate();
    if (coreg.num_tasks() < data.num_tasks) throw InvalidArgument("mtgp: task label exceeds K^f size");
    Matrix rbf = gp::cross_cov(data.inputs, data.inputs, params);
    rbf.diagonal().setConstant(params.signal_var);
    Matrix sigma = expand_task_cov(data, coreg.covariance()).cwiseProduct(rbf);
    sigma.diagonal().array() += params.noise_var;
    return sigma;
}

gp::LikelihoodEval evaluate_log_likelihood(const StackedData& data, const gp::KernelParams& params,
                                           const CoregMatrix& coreg, bool with_grad) {
    data.validate();
    params.validate(data.inputs.cols());
    coreg.validate();
    if (coreg.num_tasks() != data.num_tasks)
        throw InvalidArgument("mtgp: K^f size does not match the task count");
    if (coreg.factor(0, 0) == 1.0) return evaluate_impl(data, nullptr, params, coreg, with_grad);
    gp::KernelParams normalized_params;
    CoregMatrix normalized_coreg;
    unpack(pack(params, coreg), params.length_scales.size(), coreg.num_tasks(), normalized_params,
           normalized_coreg);
    return evaluate_impl(data, nullptr, normalized_params, normalized_coreg, with_grad);
}

double log_marginal_likelihood(const StackedData& data, const gp::KernelParams& params,
                               const CoregMatrix& coreg) {
    return evaluate_log_likelihood(data, params, coreg, false).value;
}

MtgpModel condition(StackedData data, const gp::KernelParams& params, const CoregMatrix& coreg) {
    MtgpModel model;
    const Matrix sigma = stacked_cov(data, params, coreg);
    if (coreg.num_tasks() != data.num_tasks)
        throw InvalidArgument("mtgp: K^f size does not match the task count");
    model.chol = jittered_cholesky(sigma);
    model.alpha = model.chol.llt.solve(data.targets);
    model.data = std::move(data);
    model.params = params;
    model.coreg = coreg;
    return model;
}

MtgpModel fit(StackedData data, const gp::OptimConfig& config, std::uint64_t seed, bool ard) {
    data.validate();
    config.validate();
    const Eigen::Index tasks = data.num_tasks;

    // Kernel starting point from the task with the most points (first on ties).
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(tasks), 0);
    for (int label : data.task) ++counts[static_cast<std::size_t>(label)];
    int largest = 0;
    for (int j = 1; j < tasks; ++j)
        if (counts[static_cast<std::size_t>(j)] > counts[static_cast<std::size_t>(largest)]) largest = j;
    Matrix largest_inputs(counts[static_cast<std::size_t>(largest)], data.inputs.cols());
    for (Eigen::Index i = 0, r = 0; i < data.size(); ++i)
        if (data.task[static_cast<std::size_t>(i)] == largest) largest_inputs.row(r++) = data.inputs.row(i);
    const gp::KernelParams base = gp::initial_params(largest_inputs, data.targets, ard);
    const Eigen::Index nl = base.length_scales.size();

    Vector kernel_lower, kernel_upper;
    gp::kernel_bounds(config, nl, kernel_lower, kernel_upper);
    const Eigen::Index dim = nl + 2 + num_coreg_params(tasks);
    Vector lower(dim), upper(dim);
    lower.head(nl + 2) = kernel_lower;
    upper.head(nl + 2) = kernel_upper;
    {
        Eigen::Index k = nl + 2;
        const double amp = std::exp(config.upper_bound);
        for (Eigen::Index i = 1; i < tasks; ++i) {
            for (Eigen::Index j = 0; j < i; ++j) {
                lower[k] = -amp;
                upper[k++] = amp;
            }
            lower[k] = config.lower_bound;
            upper[k++] = config.upper_bound;
        }
    }

    std::mt19937_64 rng(seed);
    const CoregMatrix start_coreg = CoregMatrix::identity(tasks);
    std::vector<Vector> starts;
    for (int r = 0; r < config.max_run; ++r)
        starts.push_back(pack(gp::restart_params(base, r, rng), start_coreg).cwiseMax(lower).cwiseMin(upper));

    Matrix d2;
    if (!ard) d2 = sq_dist(data);
    const detail::LogLikelihoodFn lml = [&](const Vector& x, double& value, Vector& grad) {
        gp::KernelParams params;
        CoregMatrix coreg;
        unpack(x, nl, tasks, params, coreg);
        try {
            gp::LikelihoodEval e = evaluate_impl(data, ard ? nullptr : &d2, params, coreg, true);
            value = e.value;
            grad = std::move(e.grad);
            return true;
        } catch (const IllConditionedError&) {
            return false;
        }
    };

    detail::SearchOutcome outcome = detail::restart_search(lml, starts, lower, upper, config);
    if (!outcome.any_success)
        throw IllConditionedError("mtgp fit: every restart failed to factor the stacked covariance");

    gp::KernelParams params;
    CoregMatrix coreg;
    unpack(outcome.best_x, nl, tasks, params, coreg);
    MtgpModel model = condition(std::move(data), params, coreg);
    model.fit = std::move(outcome.summary);
    return model;
}

StackedData stack_block(const sti::TaskBlock& block, const Matrix& inputs, const Vector& target) {
    if (inputs.rows() != target.size()) throw InvalidArgument("mtgp: inputs and target lengths differ");
    if (block.rows.empty()) throw InvalidArgument("mtgp: empty block");
    StackedData data;
    int label = 0;
    for (const sti::MappingTask& row : block.rows) {
        if (row.train_inputs.empty()) throw InvalidArgument("mtgp: block row without training pairs");
        if (row.train_inputs.end > static_cast<std::size_t>(inputs.rows()) ||
            row.train_targets.end > static_cast<std::size_t>(target.size()))
            throw InvalidArgument("mtgp: block row exceeds the supplied data");
        const auto ib = static_cast<Eigen::Index>(row.train_inputs.begin);
        const auto tb = static_cast<Eigen::Index>(row.train_targets.begin);
        const auto count = static_cast<Eigen::Index>(row.train_inputs.size());
        data.append(label++, inputs.middleRows(ib, count), target.segment(tb, count));
    }
    data.num_tasks = label;
    return data;
}

MtgpModel fit_block(const sti::TaskBlock& block, const Matrix& inputs, const Vector& target,
                    const gp::OptimConfig& config, std::uint64_t seed, bool ard) {
    MtgpModel model = fit(stack_block(block, inputs, target), config, seed, ard);
    for (const auto& row : block.rows) model.rows.push_back(row.row);
    return model;
}

gp::Prediction predict(const MtgpModel& model, int task, const Matrix& query) {
    if (task < 0 || task >= model.data.num_tasks)
        throw InvalidArgument("mtgp predict: unknown task " + std::to_string(task));
    if (query.cols() != model.data.inputs.cols()) throw InvalidArgument("mtgp predict: dimension mismatch");
    const Matrix kf = model.coreg.covariance();
    Matrix c = gp::cross_cov(query, model.data.inputs, model.params);
    for (Eigen::Index b = 0; b < c.cols(); ++b) c.col(b) *= kf(task, model.data.task[static_cast<std::size_t>(b)]);
    gp::Prediction out;
    out.mean = c * model.alpha;
    const Matrix v = model.chol.llt.matrixL().solve(c.transpose());
    const double prior = kf(task, task) * model.params.signal_var;
    out.var = (prior - v.colwise().squaredNorm().transpose().array()).max(0.0).matrix();
    return out;
}

}  // namespace stigp::mtgp
