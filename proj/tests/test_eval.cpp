#include <doctest.h>

#include <cmath>

#include "stigp/error.hpp"
#include "stigp/eval.hpp"
#include "support.hpp"

using namespace stigp;
using V = std::vector<double>;

TEST_CASE("metric examples") {
    const auto perfect = eval::metrics({1, 2, 3}, {1, 2, 3});
    CHECK(perfect.mae == 0.0);
    CHECK(perfect.rmse == 0.0);
    REQUIRE(perfect.pcc);
    CHECK(*perfect.pcc == 1.0);

    const auto r = eval::metrics({0, 0}, {3, 4});
    CHECK(r.mae == 3.5);
    CHECK(r.rmse == doctest::Approx(std::sqrt(12.5)));
    CHECK_FALSE(r.pcc);
    CHECK(r.per_step_abs_err == V{3, 4});

    CHECK(*eval::metrics({1, 2, 3}, {3, 2, 1}).pcc == -1.0);
    CHECK_THROWS_AS(eval::metrics({1, 2}, {1}), InvalidArgument);
    CHECK_THROWS_AS(eval::metrics({1}, {1}), InvalidArgument);
}

TEST_CASE("metric properties on random vectors") {
    testing::Gen g(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = g.integer(2, 40);
        V a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = g.normal() * 5.0;
            b[i] = g.normal() * 5.0 + 1.0;
        }
        const auto m = eval::metrics(a, b);
        CHECK(m.mae <= m.rmse * (1.0 + 1e-15));
        REQUIRE(m.pcc);
        CHECK(std::abs(*m.pcc - *eval::pearson(b, a)) < 1e-12);
        const double s = g.uniform(0.1, 10.0), c = g.uniform(-10.0, 10.0);
        V as(n), bs(n), at(n), bt(n);
        for (int i = 0; i < n; ++i) {
            as[i] = s * a[i] + c;
            bs[i] = s * b[i] + c;
            at[i] = a[i] + c;
            bt[i] = b[i] + c;
        }
        CHECK(std::abs(*eval::pearson(as, b) - *m.pcc) < 1e-10);
        const auto scaled = eval::metrics(as, bs);
        CHECK(scaled.mae == doctest::Approx(s * m.mae).epsilon(1e-10));
        CHECK(scaled.rmse == doctest::Approx(s * m.rmse).epsilon(1e-10));
        CHECK(eval::metrics(at, bt).mae == doctest::Approx(m.mae).epsilon(1e-10));
    }
}

TEST_CASE("pcc is undefined for flat series") {
    CHECK_FALSE(eval::pearson({0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1}, {1, 2, 3, 4, 5, 6, 7}));
    CHECK_FALSE(eval::pearson({1, 2, 3}, {-7.3, -7.3, -7.3}));
}

TEST_CASE("baselines") {
    CHECK(eval::baseline_persistence({1, 4, 7}, 3) == V{7, 7, 7});
    CHECK(eval::baseline_persistence({1}, 0).empty());
    CHECK_THROWS_AS(eval::baseline_persistence({}, 2), InvalidArgument);
    CHECK(eval::metrics({7, 7, 7}, eval::baseline_persistence({1, 7}, 3)).mae == 0.0);

    CHECK(eval::baseline_drift({0, 10}, 2) == V{20, 30});
    CHECK(eval::baseline_drift({0, 1, 2, 3}, 1) == V{4});
    CHECK(eval::baseline_drift({2, 2, 2}, 4) == eval::baseline_persistence({2, 2, 2}, 4));
    CHECK_THROWS_AS(eval::baseline_drift({1}, 2), InvalidArgument);
}
