#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "stigp/gp.hpp"
#include "stigp/optimizer.hpp"

namespace stigp::detail {

// Log-likelihood and its gradient at a packed log-parameter vector. Returns
// false when the kernel cannot be factored there.
using LogLikelihoodFn = std::function<bool(const Vector& x, double& value, Vector& grad)>;

struct SearchOutcome {
    Vector best_x;
    gp::FitSummary summary;
    bool any_success = false;
};

// Runs box-constrained BFGS on the negated log-likelihood from each start and
// keeps the run with the highest final log-likelihood (earliest wins ties).
inline SearchOutcome restart_search(const LogLikelihoodFn& lml, const std::vector<Vector>& starts,
                                    const Vector& lower, const Vector& upper,
                                    const gp::OptimConfig& config) {
    const Objective objective = [&lml](const Vector& x, Vector& grad) {
        double value = 0.0;
        if (!lml(x, value, grad) || !std::isfinite(value))
            return std::numeric_limits<double>::infinity();
        grad = -grad;
        return -value;
    };

    BoxBfgsOptions options;
    options.max_iters = config.max_iters;
    options.grad_tol = config.grad_tol;

    SearchOutcome out;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < starts.size(); ++r) {
        gp::RestartTrace trace;
        const BoxBfgsResult res = minimize_box_bfgs(objective, starts[r], lower, upper, options);
        trace.initial_log_likelihood = -res.initial_value;
        trace.final_log_likelihood = -res.value;
        trace.iterations = res.iterations;
        trace.converged = res.converged;
        trace.failed = !std::isfinite(res.value);
        out.summary.restarts.push_back(trace);
        if (trace.failed) continue;
        if (!out.any_success || trace.final_log_likelihood > best) {
            best = trace.final_log_likelihood;
            out.best_x = res.x;
            out.summary.log_likelihood = best;
            out.summary.restart = static_cast<int>(r);
            out.summary.iterations = res.iterations;
            out.summary.converged = res.converged;
            out.any_success = true;
        }
    }
    return out;
}

}  // namespace stigp::detail
