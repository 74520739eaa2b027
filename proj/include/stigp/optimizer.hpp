#pragma once

#include <functional>

#include "stigp/linalg.hpp"

namespace stigp {

// Objective for minimization. Writes the gradient into `grad` and returns the
// value; a non-finite return marks the point as infeasible.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct BoxBfgsOptions {
    int max_iters = 200;
    double grad_tol = 1e-6;
    // Relative decrease below which two consecutive steps count as stalled.
    double f_tol = 1e-12;
};

struct BoxBfgsResult {
    Vector x;
    double value = 0.0;
    double initial_value = 0.0;
    int iterations = 0;
    // Infinity norm of the projected gradient at `x`.
    double projected_grad_norm = 0.0;
    bool converged = false;
};

// Projected quasi-Newton (dense BFGS) minimization over the box [lower, upper]
// with Armijo backtracking. Coordinates pinned at a bound with the gradient
// pointing outward are frozen for the step. Iterates never leave the box.
BoxBfgsResult minimize_box_bfgs(const Objective& f, Vector x0, const Vector& lower,
                                const Vector& upper, const BoxBfgsOptions& options = {});

}  // namespace stigp
