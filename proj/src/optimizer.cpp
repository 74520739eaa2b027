#include "stigp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stigp/error.hpp"

namespace stigp {

namespace {

Vector project(const Vector& x, const Vector& lower, const Vector& upper) {
    return x.cwiseMax(lower).cwiseMin(upper);
}

double projected_grad_norm(const Vector& x, const Vector& g, const Vector& lower,
                           const Vector& upper) {
    return (x - project(x - g, lower, upper)).lpNorm<Eigen::Infinity>();
}

}  // namespace

BoxBfgsResult minimize_box_bfgs(const Objective& f, Vector x0, const Vector& lower,
                                const Vector& upper, const BoxBfgsOptions& options) {
    const Eigen::Index n = x0.size();
    if (lower.size() != n || upper.size() != n)
        throw InvalidArgument("minimize_box_bfgs: bound dimension mismatch");
    if ((lower.array() > upper.array()).any())
        throw InvalidArgument("minimize_box_bfgs: lower bound exceeds upper bound");

    BoxBfgsResult result;
    Vector x = project(x0, lower, upper);
    Vector g(n);
    double fx = f(x, g);
    result.initial_value = fx;
    if (!std::isfinite(fx) || !g.allFinite()) {
        result.x = x;
        result.value = fx;
        return result;
    }

    Matrix h = Matrix::Identity(n, n);
    bool h_is_identity = true;
    int stalls = 0;
    int iter = 0;
    for (; iter < options.max_iters; ++iter) {
        if (projected_grad_norm(x, g, lower, upper) <= options.grad_tol) {
            result.converged = true;
            break;
        }

        Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool at_lower = x[i] <= lower[i] && g[i] > 0.0;
            const bool at_upper = x[i] >= upper[i] && g[i] < 0.0;
            free[i] = !(at_lower || at_upper);
        }
        Vector g_free = free.select(g, 0.0);

        Vector dir = -(h * g_free);
        dir = free.select(dir, 0.0);
        if (dir.dot(g_free) >= 0.0) {
            h.setIdentity();
            h_is_identity = true;
            dir = -g_free;
        }

        // The very first step is scaled so it does not leave the region the
        // initial guess describes.
        double step = 1.0;
        if (h_is_identity) step = std::min(1.0, 1.0 / std::max(dir.lpNorm<Eigen::Infinity>(), 1e-300));

        Vector x_new(n), g_new(n);
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int bt = 0; bt < 50; ++bt) {
            x_new = project(x + step * dir, lower, upper);
            const double decrease = g.dot(x_new - x);
            if ((x_new - x).lpNorm<Eigen::Infinity>() == 0.0) break;
            f_new = f(x_new, g_new);
            if (std::isfinite(f_new) && g_new.allFinite() && f_new <= fx + 1e-4 * decrease) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }

        if (!accepted) {
            if (h_is_identity) break;
            h.setIdentity();
            h_is_identity = true;
            continue;
        }

        const Vector s = x_new - x;
        const Vector y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
            const double rho = 1.0 / sy;
            if (h_is_identity) h *= sy / y.squaredNorm();
            const Vector hy = h * y;
            h += rho * ((1.0 + rho * y.dot(hy)) * (s * s.transpose()) - hy * s.transpose() -
                        s * hy.transpose());
            h_is_identity = false;
        }

        const double rel = (fx - f_new) / std::max(1.0, std::abs(fx));
        x = x_new;
        g = g_new;
        fx = f_new;
        stalls = rel <= options.f_tol ? stalls + 1 : 0;
        if (stalls >= 2) {
            ++iter;
            break;
        }
    }

    result.x = x;
    result.value = fx;
    result.iterations = iter;
    result.projected_grad_norm = projected_grad_norm(x, g, lower, upper);
    result.converged = result.converged || result.projected_grad_norm <= options.grad_tol;
    return result;
}

}  // namespace stigp
