#pragma once

#include <cmath>
#include <random>

#include <Eigen/LU>

#include "stigp/gp.hpp"
#include "stigp/linalg.hpp"

namespace testing {

using stigp::Matrix;
using stigp::Vector;

// Hand-rolled generators for the property tests.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

    Matrix matrix(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * normal();
        return m;
    }
    Vector vector(Eigen::Index n, double scale = 1.0) { return matrix(n, 1, scale).col(0); }

    // Hyperparameters in a range where the Gram matrix is comfortably factorable.
    stigp::gp::KernelParams params(Eigen::Index ard_dim = 0) {
        stigp::gp::KernelParams p;
        p.signal_var = std::exp(uniform(-1.0, 1.0));
        p.noise_var = std::exp(uniform(-4.0, -1.0));
        p.length_scales = Vector::Constant(ard_dim > 0 ? ard_dim : 1, 1.0);
        for (Eigen::Index i = 0; i < p.length_scales.size(); ++i) p.length_scales[i] = std::exp(uniform(-0.5, 1.0));
        return p;
    }
};

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Dense oracle: log N(y | 0, K) through an explicit inverse and determinant.
inline double dense_log_likelihood(const Matrix& k, const Vector& y) {
    const Matrix kinv = k.inverse();
    const double n = static_cast<double>(y.size());
    return -0.5 * y.dot(kinv * y) - 0.5 * std::log(k.determinant()) - 0.5 * n * std::log(2.0 * M_PI);
}

// Central differences of f at x, step h per coordinate.
template <class F>
Vector finite_diff(F&& f, const Vector& x, double h = 1e-5) {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vector a = x, b = x;
        a[i] += h;
        b[i] -= h;
        g[i] = (f(a) - f(b)) / (2.0 * h);
    }
    return g;
}

// Relative agreement used by the gradient checks: |a-b| <= tol * max(|a|, |b|, floor).
inline bool grad_close(const Vector& a, const Vector& b, double tol, double floor = 1e-3) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        if (std::abs(a[i] - b[i]) > tol * scale) return false;
    }
    return true;
}

}  // namespace testing
