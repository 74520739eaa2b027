#include <doctest.h>

#include <unsupported/Eigen/KroneckerProduct>

#include "stigp/error.hpp"
#include "stigp/mtgp.hpp"
#include "support.hpp"

using namespace stigp;
using gp::KernelParams;
using mtgp::CoregMatrix;
using mtgp::StackedData;
using testing::Gen;

namespace {

CoregMatrix random_coreg(Gen& g, Eigen::Index tasks) {
    CoregMatrix c;
    c.factor = Matrix::Zero(tasks, tasks);
    for (Eigen::Index i = 0; i < tasks; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) c.factor(i, j) = 0.5 * g.normal();
        c.factor(i, i) = std::exp(g.uniform(-0.5, 0.5));
    }
    return c;
}

StackedData random_stack(Gen& g, const std::vector<Eigen::Index>& sizes, Eigen::Index dim) {
    StackedData d;
    for (std::size_t j = 0; j < sizes.size(); ++j)
        d.append(static_cast<int>(j), g.matrix(sizes[j], dim), g.vector(sizes[j]));
    return d;
}

}  // namespace

TEST_CASE("coreg matrix") {
    const CoregMatrix id = CoregMatrix::identity(3);
    CHECK(id.covariance() == Matrix::Identity(3, 3));
    Matrix kf(2, 2);
    kf << 2.0, 1.0, 1.0, 2.0;
    const CoregMatrix c = CoregMatrix::from_covariance(kf);
    CHECK(c.covariance().isApprox(kf));
    CHECK(c.correlation(0, 1) == doctest::Approx(0.5));
    CoregMatrix bad = id;
    bad.factor(1, 1) = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = id;
    bad.factor(0, 2) = 0.1;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("pack and unpack") {
    Gen g(1);
    const CoregMatrix c = random_coreg(g, 3);
    const KernelParams p = g.params();
    const Vector x = mtgp::pack(p, c);
    CHECK(x.size() == 3 + mtgp::num_coreg_params(3));
    KernelParams q;
    CoregMatrix d;
    mtgp::unpack(x, 1, 3, q, d);
    CHECK(d.factor(0, 0) == 1.0);
    // Scale moves between signal_var and K^f but the product is preserved.
    CHECK((q.signal_var * d.covariance()).isApprox(p.signal_var * c.covariance(), 1e-12));
}

TEST_CASE("stacked covariance") {
    Gen g(2);
    SUBCASE("single task is the scaled Gram matrix") {
        const StackedData d = random_stack(g, {6}, 2);
        const KernelParams p = g.params();
        CoregMatrix c;
        c.factor = Matrix::Constant(1, 1, 1.7);
        KernelParams scaled = p;
        scaled.signal_var *= 1.7 * 1.7;
        CHECK((mtgp::stacked_cov(d, p, c) - gp::gram(d.inputs, scaled)).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("identity K^f is block diagonal") {
        const StackedData d = random_stack(g, {3, 4}, 2);
        const KernelParams p = g.params();
        const Matrix s = mtgp::stacked_cov(d, p, CoregMatrix::identity(2));
        CHECK(s.topRightCorner(3, 4).isZero(0.0));
        CHECK(s.topLeftCorner(3, 3).isApprox(gp::gram(d.inputs.topRows(3), p)));
        CHECK(s.bottomRightCorner(4, 4).isApprox(gp::gram(d.inputs.bottomRows(4), p)));
    }
    SUBCASE("complete grid equals the Kronecker product") {
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::Index tasks = g.integer(2, 4), n = g.integer(2, 5);
            const Matrix grid = g.matrix(n, 3);
            StackedData d;
            for (int j = 0; j < tasks; ++j) d.append(j, grid, g.vector(n));
            const KernelParams p = g.params();
            const CoregMatrix c = random_coreg(g, tasks);
            KernelParams noiseless = p;
            noiseless.noise_var = 0.0;
            const Matrix kron = Eigen::kroneckerProduct(c.covariance(), gp::gram(grid, noiseless)).eval() +
                                p.noise_var * Matrix::Identity(tasks * n, tasks * n);
            CHECK((mtgp::stacked_cov(d, p, c) - kron).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("bad task label") {
        StackedData d = random_stack(g, {2, 2}, 1);
        CHECK_THROWS_AS(mtgp::stacked_cov(d, KernelParams{}, CoregMatrix::identity(1)), InvalidArgument);
        d.task[1] = -1;
        CHECK_THROWS_AS(mtgp::stacked_cov(d, KernelParams{}, CoregMatrix::identity(2)), InvalidArgument);
    }
}

TEST_CASE("multi-task likelihood") {
    Gen g(3);
    SUBCASE("single task reduces to the GP likelihood") {
        for (int trial = 0; trial < 5; ++trial) {
            const StackedData d = random_stack(g, {7}, 3);
            const KernelParams p = g.params();
            CHECK(std::abs(mtgp::log_marginal_likelihood(d, p, CoregMatrix::identity(1)) -
                           gp::log_marginal_likelihood(d.inputs, d.targets, p)) < 1e-10);
        }
    }
    SUBCASE("identity K^f sums per-task likelihoods") {
        const StackedData d = random_stack(g, {5, 3, 4}, 2);
        const KernelParams p = g.params();
        double sum = 0.0;
        for (auto [b, n] : {std::pair{0, 5}, std::pair{5, 3}, std::pair{8, 4}})
            sum += gp::log_marginal_likelihood(d.inputs.middleRows(b, n), d.targets.segment(b, n), p);
        CHECK(std::abs(mtgp::log_marginal_likelihood(d, p, CoregMatrix::identity(3)) - sum) < 1e-8);
    }
    SUBCASE("dense oracle") {
        for (int trial = 0; trial < 10; ++trial) {
            const StackedData d = random_stack(g, {3, 3}, 2);
            const KernelParams p = g.params();
            const CoregMatrix c = random_coreg(g, 2);
            const double oracle = testing::dense_log_likelihood(mtgp::stacked_cov(d, p, c), d.targets);
            CHECK(testing::rel_err(mtgp::log_marginal_likelihood(d, p, c), oracle) < 1e-8);
        }
    }
    SUBCASE("gradient matches central differences") {
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::Index tasks = g.integer(2, 4);
            std::vector<Eigen::Index> sizes;
            for (Eigen::Index j = 0; j < tasks; ++j) sizes.push_back(g.integer(2, 6));
            const Eigen::Index dim = g.integer(1, 3);
            const StackedData d = random_stack(g, sizes, dim);
            const Eigen::Index nl = trial % 2 ? dim : 1;
            const KernelParams p = g.params(nl > 1 ? nl : 0);
            const CoregMatrix c = random_coreg(g, tasks);
            auto f = [&](const Vector& z) {
                KernelParams q;
                CoregMatrix e;
                mtgp::unpack(z, nl, tasks, q, e);
                return mtgp::log_marginal_likelihood(d, q, e);
            };
            const Vector x = mtgp::pack(p, c);
            const Vector an = mtgp::evaluate_log_likelihood(d, p, c).grad;
            REQUIRE(an.size() == x.size());
            CHECK(testing::grad_close(an, testing::finite_diff(f, x), 1e-4));
        }
    }
}

TEST_CASE("multi-task prediction") {
    Gen g(4);
    SUBCASE("identity K^f matches independent GPs") {
        for (int trial = 0; trial < 10; ++trial) {
            const StackedData d = random_stack(g, {4, 6}, 2);
            const KernelParams p = g.params();
            const auto m = mtgp::condition(d, p, CoregMatrix::identity(2));
            const Matrix q = g.matrix(3, 2);
            for (auto [task, b, n] : {std::tuple{0, 0, 4}, std::tuple{1, 4, 6}}) {
                const auto mt = mtgp::predict(m, task, q);
                const auto st = gp::predict(gp::condition(d.inputs.middleRows(b, n), d.targets.segment(b, n), p), q);
                CHECK((mt.mean - st.mean).cwiseAbs().maxCoeff() < 1e-6);
                CHECK((mt.var - st.var).cwiseAbs().maxCoeff() < 1e-6);
            }
        }
    }
    SUBCASE("dense oracle, 3+2 points") {
        for (int trial = 0; trial < 10; ++trial) {
            const StackedData d = random_stack(g, {3, 2}, 2);
            const KernelParams p = g.params();
            const CoregMatrix c = random_coreg(g, 2);
            const auto m = mtgp::condition(d, p, c);
            const Matrix q = g.matrix(1, 2);
            const Matrix sinv = mtgp::stacked_cov(d, p, c).inverse();
            const Matrix kf = c.covariance();
            for (int task = 0; task < 2; ++task) {
                Vector cross(5);
                for (int i = 0; i < 5; ++i)
                    cross[i] = kf(task, d.task[i]) * gp::kernel_eval(q.row(0).transpose(), d.inputs.row(i).transpose(), false, p);
                const double mean = cross.dot(sinv * d.targets);
                const double var = kf(task, task) * p.signal_var - cross.dot(sinv * cross);
                const auto pr = mtgp::predict(m, task, q);
                CHECK(testing::rel_err(pr.mean[0], mean) < 1e-8);
                CHECK(testing::rel_err(pr.var[0], std::max(0.0, var)) < 1e-8);
            }
            CHECK_THROWS_AS(mtgp::predict(m, 2, q), InvalidArgument);
        }
    }
    SUBCASE("task permutation") {
        const StackedData d = random_stack(g, {4, 3}, 2);
        const KernelParams p = g.params();
        const CoregMatrix c = random_coreg(g, 2);
        StackedData swapped;
        swapped.append(0, d.inputs.bottomRows(3), d.targets.tail(3));
        swapped.append(1, d.inputs.topRows(4), d.targets.head(4));
        Matrix perm(2, 2);
        perm << 0, 1, 1, 0;
        const CoregMatrix cs = CoregMatrix::from_covariance(perm * c.covariance() * perm.transpose());
        const auto a = mtgp::condition(d, p, c);
        const auto b = mtgp::condition(swapped, p, cs);
        const Matrix q = g.matrix(4, 2);
        for (int task = 0; task < 2; ++task) {
            const auto pa = mtgp::predict(a, task, q);
            const auto pb = mtgp::predict(b, 1 - task, q);
            CHECK((pa.mean - pb.mean).cwiseAbs().maxCoeff() < 1e-9);
            CHECK((pa.var - pb.var).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("multi-task fit") {
    Gen g(5);
    const gp::OptimConfig config;
    SUBCASE("single task agrees with gp::fit") {
        for (int trial = 0; trial < 3; ++trial) {
            const StackedData d = random_stack(g, {10}, 2);
            const auto mt = mtgp::fit(d, config, 40 + trial);
            const auto st = gp::fit(d.inputs, d.targets, config, 40 + trial);
            CHECK((gp::to_log(mt.params) - gp::to_log(st.params)).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
    SUBCASE("duplicated tasks are strongly correlated") {
        const Matrix in = g.matrix(10, 2);
        Vector y(10);
        for (int i = 0; i < 10; ++i) y[i] = std::sin(in(i, 0)) + 0.5 * in(i, 1);
        StackedData d;
        d.append(0, in, y);
        d.append(1, in, y);
        const auto m = mtgp::fit(d, config, 0);
        CHECK(m.coreg.correlation(0, 1) > 0.5);
    }
    SUBCASE("restarts never lose ground, fits are deterministic") {
        const StackedData d = random_stack(g, {6, 5, 4}, 3);
        const auto a = mtgp::fit(d, config, 9);
        const auto b = mtgp::fit(d, config, 9);
        CHECK(mtgp::pack(a.params, a.coreg) == mtgp::pack(b.params, b.coreg));
        for (const auto& r : a.fit.restarts) {
            if (r.failed) continue;
            CHECK(r.final_log_likelihood >= r.initial_log_likelihood);
            CHECK(a.fit.log_likelihood >= r.final_log_likelihood);
        }
    }
}

TEST_CASE("stack_block follows the mapping rows") {
    const sti::StiProblem p(2, 6, 0, 6, 3);
    const auto blocks = p.partition_blocks(3);
    Matrix inputs(6, 2);
    Vector target(6);
    for (int t = 0; t < 6; ++t) {
        inputs(t, 0) = t;
        inputs(t, 1) = -t;
        target[t] = 100 + t;
    }
    const StackedData d = mtgp::stack_block(blocks[0], inputs, target);
    CHECK(d.num_tasks == 3);
    CHECK(d.size() == 6 + 5 + 4);
    // Row 3 (task 2) pairs X(t_1) with y(t_3).
    CHECK(d.task[11] == 2);
    CHECK(d.inputs(11, 0) == 0.0);
    CHECK(d.targets[11] == 102.0);
}
