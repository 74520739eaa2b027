#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace stigp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Cholesky factor of K + jitter*I. The first attempt uses no jitter; after
// that the jitter climbs from 1e-6 to 1e-2 times mean(diag K) in factors of 10.
struct JitteredCholesky {
    Eigen::LLT<Matrix> llt;
    double jitter = 0.0;
};

// Throws IllConditionedError when every rung of the ladder fails.
JitteredCholesky jittered_cholesky(const Matrix& k);

// Same ladder, but reports failure through the return value.
bool try_jittered_cholesky(const Matrix& k, JitteredCholesky& out);

// log|A| from the Cholesky factor of A.
double log_det(const Eigen::LLT<Matrix>& llt);

}  // namespace stigp
