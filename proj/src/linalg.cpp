#include "stigp/linalg.hpp"

#include <cmath>

#include "stigp/error.hpp"

namespace stigp {

namespace {

constexpr double kJitterStart = 1e-6;
constexpr double kJitterStop = 1e-2;

bool factor_ok(const Eigen::LLT<Matrix>& llt) {
    if (llt.info() != Eigen::Success) return false;
    const auto diag = llt.matrixLLT().diagonal();
    return diag.allFinite() && (diag.array() > 0.0).all();
}

}  // namespace

bool try_jittered_cholesky(const Matrix& k, JitteredCholesky& out) {
    if (!k.allFinite()) return false;
    out.llt.compute(k);
    out.jitter = 0.0;
    if (factor_ok(out.llt)) return true;

    double scale = k.diagonal().mean();
    if (!(scale > 0.0)) scale = 1.0;
    Matrix shifted = k;
    for (double rel = kJitterStart; rel <= kJitterStop * (1.0 + 1e-12); rel *= 10.0) {
        const double jitter = rel * scale;
        shifted.diagonal() = k.diagonal().array() + jitter;
        out.llt.compute(shifted);
        if (factor_ok(out.llt)) {
            out.jitter = jitter;
            return true;
        }
    }
    return false;
}

JitteredCholesky jittered_cholesky(const Matrix& k) {
    JitteredCholesky out;
    if (!try_jittered_cholesky(k, out))
        throw IllConditionedError("kernel matrix is not positive definite after jitter escalation");
    return out;
}

double log_det(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace stigp
