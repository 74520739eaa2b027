#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "stigp/error.hpp"
#include "stigp/gp.hpp"
#include "support.hpp"

using namespace stigp;
using gp::KernelParams;
using testing::Gen;

TEST_CASE("kernel_eval closed forms") {
    Vector a = Vector::Zero(2);
    CHECK(gp::kernel_eval(a, a, true, KernelParams::isotropic(1.0, 1.0, 0.25)) == doctest::Approx(1.25));
    Vector x(1), y(1);
    x << 0.0;
    y << 2.0;
    CHECK(gp::kernel_eval(x, y, false, KernelParams::isotropic(1.0, 1.0, 0.09)) ==
          doctest::Approx(0.135335).epsilon(1e-6));
    Vector five = Vector::Constant(1, 5.0);
    CHECK(gp::kernel_eval(five, five, true, KernelParams::isotropic(4.0, 3.0, 0.0)) == 4.0);
    CHECK_THROWS_AS(gp::kernel_eval(a, x, false, KernelParams{}), InvalidArgument);
}

TEST_CASE("KernelParams validation") {
    CHECK_THROWS_AS(KernelParams::isotropic(0.0, 1.0, 0.1).validate(), InvalidArgument);
    CHECK_THROWS_AS(KernelParams::isotropic(1.0, -1.0, 0.1).validate(), InvalidArgument);
    CHECK_THROWS_AS(KernelParams::isotropic(1.0, 1.0, -0.1).validate(), InvalidArgument);
    CHECK_THROWS_AS(KernelParams::isotropic(1.0, NAN, 0.1).validate(), InvalidArgument);
    KernelParams ard = KernelParams::isotropic(1.0, 1.0, 0.1);
    ard.length_scales = Vector::Ones(3);
    CHECK_NOTHROW(ard.validate(3));
    CHECK_THROWS_AS(ard.validate(2), InvalidArgument);
}

TEST_CASE("log packing round trip") {
    KernelParams p = KernelParams::isotropic(2.0, 0.5, 0.01);
    const Vector x = gp::to_log(p);
    REQUIRE(x.size() == 3);
    CHECK(x[0] == doctest::Approx(std::log(2.0)));
    CHECK(x[2] == doctest::Approx(std::log(0.01)));
    const KernelParams q = gp::from_log(x, 1);
    CHECK(q.signal_var == doctest::Approx(2.0));
    CHECK(q.length_scales[0] == doctest::Approx(0.5));
}

TEST_CASE("gram") {
    Matrix x(2, 1);
    x << 0.0, 2.0;
    const Matrix k = gp::gram(x, KernelParams::isotropic(1.0, 1.0, 0.0));
    CHECK(k(0, 0) == 1.0);
    CHECK(k(0, 1) == doctest::Approx(std::exp(-2.0)));
    CHECK(k(1, 0) == k(0, 1));

    Gen g(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix in = g.matrix(g.integer(1, 9), g.integer(1, 4));
        const KernelParams p = g.params();
        const Matrix kk = gp::gram(in, p);
        CHECK(kk == kk.transpose());
        for (Eigen::Index i = 0; i < kk.rows(); ++i) CHECK(kk(i, i) == doctest::Approx(p.signal_var + p.noise_var));
    }
    const Matrix six = g.matrix(6, 3);
    const Matrix k6 = gp::gram(six, KernelParams::isotropic(1.0, 1.0, 1e-4));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(k6);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);

    Matrix bad = six;
    bad(2, 1) = NAN;
    CHECK_THROWS_AS(gp::gram(bad, KernelParams{}), InvalidArgument);
}

TEST_CASE("log marginal likelihood closed forms") {
    Matrix x = Matrix::Zero(1, 1);
    const KernelParams unit = KernelParams::isotropic(1.0, 1.0, 0.0);
    CHECK(gp::log_marginal_likelihood(x, Vector::Zero(1), unit) == doctest::Approx(-0.918939).epsilon(1e-6));
    CHECK(gp::log_marginal_likelihood(x, Vector::Ones(1), unit) == doctest::Approx(-1.418939).epsilon(1e-6));
}

TEST_CASE("log marginal likelihood matches the dense oracle") {
    Gen g(11);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index n = g.integer(1, 12), d = g.integer(1, 5);
        const Matrix in = g.matrix(n, d);
        const Vector y = g.vector(n);
        const KernelParams p = g.params(trial % 2 ? d : 0);
        const double oracle = testing::dense_log_likelihood(gp::gram(in, p), y);
        CHECK(testing::rel_err(gp::log_marginal_likelihood(in, y, p), oracle) < 1e-8);
    }
}

TEST_CASE("gradient matches central differences") {
    Gen g(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = g.integer(2, 10), d = g.integer(1, 4);
        const Matrix in = g.matrix(n, d);
        const Vector y = g.vector(n);
        const Eigen::Index nl = trial % 3 == 0 ? d : 1;
        const KernelParams p = g.params(nl > 1 ? nl : 0);
        auto f = [&](const Vector& z) { return gp::log_marginal_likelihood(in, y, gp::from_log(z, nl)); };
        const Vector fd = testing::finite_diff(f, gp::to_log(p));
        const Vector an = gp::log_marginal_likelihood_grad(in, y, p);
        CHECK(testing::grad_close(an, fd, 1e-4));
    }
}

TEST_CASE("noise gradient stays finite on duplicated inputs") {
    Matrix in(4, 2);
    in << 0.0, 1.0, 0.0, 1.0, 0.5, -1.0, 0.5, -1.0;
    Vector y(4);
    y << 1.0, 1.1, -0.3, -0.2;
    for (double sn2 : {1e-4, 1e-8, 1e-12}) {
        const Vector grad = gp::log_marginal_likelihood_grad(in, y, KernelParams::isotropic(1.0, 1.0, sn2));
        CHECK(grad.allFinite());
    }
}

TEST_CASE("jitter ladder") {
    Matrix k = Matrix::Ones(3, 3);  // rank one
    const JitteredCholesky c = jittered_cholesky(k);
    CHECK(c.jitter > 0.0);
    CHECK(c.jitter <= 1e-2);
    Matrix good = Matrix::Identity(2, 2);
    CHECK(jittered_cholesky(good).jitter == 0.0);
    Matrix indefinite(2, 2);
    indefinite << 1.0, 0.0, 0.0, -1.0;
    CHECK_THROWS_AS(jittered_cholesky(indefinite), IllConditionedError);
    JitteredCholesky out;
    CHECK_FALSE(try_jittered_cholesky(indefinite, out));
}

TEST_CASE("conditioned model invariants") {
    Gen g(3);
    const Matrix in = g.matrix(8, 3);
    const Vector y = g.vector(8);
    const KernelParams p = g.params();
    const gp::GpModel m = gp::condition(in, y, p);
    const Matrix k = gp::gram(in, p) + m.chol.jitter * Matrix::Identity(8, 8);
    const Matrix l = m.chol.llt.matrixL();
    CHECK((l * l.transpose() - k).norm() / k.norm() < 1e-8);
    CHECK((k * m.alpha - y).norm() / y.norm() < 1e-8);
}

TEST_CASE("predict") {
    SUBCASE("exact interpolation") {
        const gp::GpModel m = gp::condition(Matrix::Zero(1, 1), Vector::Constant(1, 3.0),
                                            KernelParams::isotropic(1.0, 1.0, 0.0));
        const auto pr = gp::predict(m, Matrix::Zero(1, 1));
        CHECK(pr.mean[0] == doctest::Approx(3.0));
        CHECK(pr.var[0] == doctest::Approx(0.0));
    }
    SUBCASE("far field reverts to the prior") {
        const gp::GpModel m = gp::condition(Matrix::Zero(1, 1), Vector::Constant(1, 3.0),
                                            KernelParams::isotropic(2.0, 1.0, 0.0));
        const auto pr = gp::predict(m, Matrix::Constant(1, 1, 100.0));
        CHECK(std::abs(pr.mean[0]) < 1e-12);
        CHECK(pr.var[0] == doctest::Approx(2.0));
    }
    SUBCASE("dense oracle") {
        Gen g(21);
        for (int trial = 0; trial < 10; ++trial) {
            const Matrix in = g.matrix(4, 2), q = g.matrix(2, 2);
            const Vector y = g.vector(4);
            const KernelParams p = g.params();
            const auto pr = gp::predict(gp::condition(in, y, p), q);
            const Matrix kinv = gp::gram(in, p).inverse();
            const Matrix ks = gp::cross_cov(q, in, p);
            const Vector mean = ks * kinv * y;
            const Matrix cov = gp::cross_cov(q, q, p) - ks * kinv * ks.transpose();
            for (int i = 0; i < 2; ++i) {
                CHECK(testing::rel_err(pr.mean[i], mean[i]) < 1e-8);
                CHECK(testing::rel_err(pr.var[i], std::max(0.0, cov(i, i))) < 1e-8);
            }
        }
    }
    SUBCASE("noise-free training points have near-zero variance") {
        Gen g(4);
        const Matrix in = g.matrix(6, 2, 3.0);
        const KernelParams p = KernelParams::isotropic(1.5, 1.0, 0.0);
        const auto pr = gp::predict(gp::condition(in, g.vector(6), p), in);
        CHECK((pr.var.array() >= 0.0).all());
        CHECK(pr.var.maxCoeff() <= 1e-8 * p.signal_var);
    }
    SUBCASE("dimension mismatch") {
        const gp::GpModel m = gp::condition(Matrix::Zero(2, 2), Vector::Zero(2), KernelParams{});
        CHECK_THROWS_AS(gp::predict(m, Matrix::Zero(1, 3)), InvalidArgument);
    }
}

TEST_CASE("restart schedule") {
    const KernelParams base = KernelParams::isotropic(2.0, 0.7, 0.02);
    std::mt19937_64 rng(9);
    const KernelParams r0 = gp::restart_params(base, 0, rng);
    CHECK(r0.signal_var == base.signal_var);
    for (int r = 1; r < 50; ++r) {
        const KernelParams p = gp::restart_params(base, r, rng);
        CHECK(p.signal_var / base.signal_var >= 0.25);
        CHECK(p.signal_var / base.signal_var <= 4.0);
        CHECK(p.noise_var / base.noise_var >= 0.25);
        CHECK(p.noise_var / base.noise_var <= 4.0);
        CHECK(p.length_scales[0] / base.length_scales[0] >= 0.25);
        CHECK(p.length_scales[0] / base.length_scales[0] <= 4.0);
    }
}

TEST_CASE("fit") {
    const gp::OptimConfig config;
    Vector lo, hi;
    SUBCASE("zero targets push the signal variance to its lower bound") {
        Gen g(1);
        const Matrix in = g.matrix(10, 2);
        const gp::GpModel m = gp::fit(in, Vector::Zero(10), config, 0);
        CHECK(std::log(m.params.signal_var) < 2.0 * config.lower_bound + 0.5);
    }
    SUBCASE("noiseless smooth function is reproduced at the training inputs") {
        Matrix in(15, 1);
        Vector y(15);
        for (int i = 0; i < 15; ++i) {
            in(i, 0) = -2.0 + 4.0 * i / 14.0;
            y[i] = std::sin(1.5 * in(i, 0));
        }
        y = (y.array() - y.mean()) / std::sqrt((y.array() - y.mean()).square().mean());
        const gp::GpModel m = gp::fit(in, y, config, 3);
        const auto pr = gp::predict(m, in);
        CHECK((pr.mean - y).cwiseAbs().maxCoeff() < 1e-3);
    }
    SUBCASE("bounds, restarts and determinism") {
        Gen g(2);
        for (int trial = 0; trial < 5; ++trial) {
            const Matrix in = g.matrix(12, 3);
            const Vector y = g.vector(12);
            const bool ard = trial % 2;
            const gp::GpModel a = gp::fit(in, y, config, 100 + trial, ard);
            const gp::GpModel b = gp::fit(in, y, config, 100 + trial, ard);
            const Vector xa = gp::to_log(a.params);
            CHECK(xa == gp::to_log(b.params));
            gp::kernel_bounds(config, a.params.length_scales.size(), lo, hi);
            CHECK((xa.array() >= lo.array()).all());
            CHECK((xa.array() <= hi.array()).all());
            REQUIRE(a.fit.restarts.size() == 3);
            for (const auto& r : a.fit.restarts) {
                if (r.failed) continue;
                CHECK(r.final_log_likelihood >= r.initial_log_likelihood);
                CHECK(a.fit.log_likelihood >= r.final_log_likelihood);
            }
            CHECK(a.fit.log_likelihood == doctest::Approx(gp::log_marginal_likelihood(in, y, a.params)));
        }
    }
    SUBCASE("interior optimum has a small gradient") {
        Gen g(8);
        const Matrix in = g.matrix(20, 2);
        Vector y(20);
        for (int i = 0; i < 20; ++i) y[i] = std::sin(in(i, 0)) + 0.1 * g.normal();
        const gp::GpModel m = gp::fit(in, y, config, 0);
        gp::kernel_bounds(config, 1, lo, hi);
        const Vector x = gp::to_log(m.params);
        if (((x - lo).array() > 1e-3).all() && ((hi - x).array() > 1e-3).all() && m.fit.converged)
            CHECK(gp::log_marginal_likelihood_grad(in, y, m.params).cwiseAbs().maxCoeff() <= config.grad_tol);
        else
            MESSAGE("optimum on a bound or not converged; gradient check skipped");
    }
    SUBCASE("validation") {
        gp::OptimConfig bad;
        bad.max_run = 0;
        CHECK_THROWS_AS(bad.validate(), InvalidArgument);
        bad = gp::OptimConfig{};
        bad.lower_bound = bad.upper_bound;
        CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    }
}
