#include <doctest.h>

#include <cmath>
#include <vector>

#include "gwgflow/metrics.hpp"
#include "gwgflow/rng.hpp"
#include "gwgflow/target.hpp"

using namespace gwg;

TEST_CASE("standard gaussian score") {
    GaussianMixtureTarget t({1.0}, {0.0, 0.0}, 2, 1.0);
    std::vector<double> s(2);
    t.score(std::vector<double>{2.0, -1.0}, s);
    CHECK(s[0] == doctest::Approx(-2.0));
    CHECK(s[1] == doctest::Approx(1.0));
}

TEST_CASE("symmetric two-component mixture has exactly zero score at the center") {
    GaussianMixtureTarget t({0.5, 0.5}, {-1.0, 1.0}, 1, 1.0);
    std::vector<double> s(1);
    t.score(std::vector<double>{0.0}, s);
    CHECK(s[0] == 0.0);
}

TEST_CASE("monomial gamma score at (1,1)") {
    MonomialGammaTarget t(0.3, 0.9, 0.0);
    std::vector<double> s(2);
    t.score(std::vector<double>{1.0, 1.0}, s);
    CHECK(s[0] == doctest::Approx(-0.27).epsilon(1e-12));
    CHECK(s[1] == doctest::Approx(-0.27).epsilon(1e-12));
}

TEST_CASE("monomial gamma score magnitude is non-increasing in |x|") {
    MonomialGammaTarget t;
    std::vector<double> s(2);
    double prev = 1e300;
    for (double v = 0.01; v < 20.0; v *= 1.7) {
        t.score(std::vector<double>{v, v}, s);
        CHECK(std::fabs(s[0]) <= prev + 1e-15);
        prev = std::fabs(s[0]);
    }
}

TEST_CASE("score matches finite differences of log density on all targets") {
    RngState rng{31337, 0};

    auto check_target = [&](const Target& t, double lo, double hi, double min_abs) {
        const int d = t.dim();
        std::vector<double> x(d), s(d);
        auto logd = [&](std::span<const double> pt) { return t.log_density_unnorm(pt); };
        for (int trial = 0; trial < 100; ++trial) {
            for (auto& v : x) {
                do {
                    v = rng.next_uniform(lo, hi);
                } while (std::fabs(v) < min_abs);
            }
            t.score(x, s);
            const auto rep = finite_diff_check(logd, x, s, 1e-5, 1e-5, 1e-4);
            CHECK(rep.pass);
        }
    };

    GaussianMixtureTarget mix({0.3, 0.7}, {-2.0, 0.5, 1.5, -1.0}, 2, 0.5);
    check_target(mix, -4.0, 4.0, 0.0);

    // keep clear of the |x|^{b-1} singularity at the origin
    MonomialGammaTarget mono;
    check_target(mono, -6.0, 6.0, 0.05);

    auto obs = ConditionedDiffusionTarget::generate_observations(20, 5, 0.01, 0.1, RngState{99, 0});
    ConditionedDiffusionTarget cd(20, 5, 0.01, 0.1, obs);
    check_target(cd, -0.3, 0.3, 0.0);
}

TEST_CASE("cd forward: zero increments stay at zero") {
    auto obs = std::vector<double>(4, 0.0);
    ConditionedDiffusionTarget cd(20, 5, 0.01, 0.1, obs);
    std::vector<double> x(20, 0.0), out(4);
    cd.forward(x, out);
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("cd forward: two-step hand recursion") {
    ConditionedDiffusionTarget cd(2, 2, 0.01, 0.1, {0.0});
    std::vector<double> x{0.1, 0.0}, out(1);
    cd.forward(x, out);
    // u1 = 0.1; u2 = 0.1 + 0.01 * (10*0.1*0.99/1.01)
    const double expect = 0.1 + 0.01 * (10.0 * 0.1 * (1.0 - 0.01) / (1.0 + 0.01));
    CHECK(out[0] == doctest::Approx(expect).epsilon(1e-15));
    CHECK(out[0] == doctest::Approx(0.10980198).epsilon(1e-7));
}

TEST_CASE("cd forward: drift vanishes quadratically at small amplitudes") {
    auto obs = std::vector<double>(4, 0.0);
    ConditionedDiffusionTarget cd(20, 5, 0.01, 0.1, obs);
    RngState rng{4, 0};
    std::vector<double> x(20), scaled(20), out(4);
    for (auto& v : x) v = rng.next_uniform(-1.0, 1.0);
    const double eps = 1e-8;
    for (int j = 0; j < 20; ++j) scaled[j] = eps * x[j];
    cd.forward(scaled, out);
    for (int m = 0; m < 4; ++m) {
        double partial = 0.0;
        for (int j = 0; j <= 5 * m + 4; ++j) partial += x[j];
        CHECK(out[m] / eps == doctest::Approx(partial).epsilon(1e-6));
    }
}

TEST_CASE("cd forward with zero drift hook is a cumulative sum") {
    auto obs = std::vector<double>(4, 0.0);
    ConditionedDiffusionTarget cd(20, 5, 0.01, 0.1, obs);
    cd.drift_scale = 0.0;
    RngState rng{5, 0};
    std::vector<double> x(20), out(4);
    for (auto& v : x) v = rng.next_uniform(-1.0, 1.0);
    cd.forward(x, out);
    for (int m = 0; m < 4; ++m) {
        double partial = 0.0;
        for (int j = 0; j <= 5 * m + 4; ++j) partial += x[j];
        CHECK(out[m] == doctest::Approx(partial).epsilon(1e-15));
    }
}

TEST_CASE("cd score special cases") {
    const int K = 20;
    auto obs = std::vector<double>(4, 0.0);
    ConditionedDiffusionTarget cd(K, 5, 0.01, 0.1, obs);

    std::vector<double> x(K, 0.0), s(K);
    cd.score(x, s);
    for (double v : s) CHECK(v == 0.0); // x = 0, y = 0

    // y = F(x) exactly: likelihood term drops, score = -x/dt
    RngState rng{6, 0};
    for (auto& v : x) v = 0.05 * rng.next_gaussian();
    std::vector<double> y(4);
    cd.forward(x, y);
    ConditionedDiffusionTarget cd2(K, 5, 0.01, 0.1, y);
    cd2.score(x, s);
    for (int j = 0; j < K; ++j) CHECK(s[j] == doctest::Approx(-x[j] / 0.01).epsilon(1e-9));
}

TEST_CASE("drift derivative matches finite differences") {
    for (double u : {-2.0, -0.7, 0.0, 0.3, 1.5, 4.0}) {
        const double delta = 1e-6;
        const double fd = (ConditionedDiffusionTarget::drift(u + delta) -
                           ConditionedDiffusionTarget::drift(u - delta)) /
                          (2.0 * delta);
        CHECK(ConditionedDiffusionTarget::drift_deriv(u) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("target construction validates inputs") {
    CHECK_THROWS(GaussianMixtureTarget({0.6, 0.6}, {0.0, 1.0}, 1, 1.0)); // weights off simplex
    CHECK_THROWS(GaussianMixtureTarget({1.0}, {0.0}, 1, 0.0));           // zero variance
    CHECK_THROWS(MonomialGammaTarget(0.3, 1.5, 0.0));                    // b outside (0,1)
    CHECK_THROWS(ConditionedDiffusionTarget(21, 5, 0.01, 0.1, {0.0}));   // stride mismatch
}

TEST_CASE("observation generation is deterministic in the seed") {
    const auto a = ConditionedDiffusionTarget::generate_observations(20, 5, 0.01, 0.1, RngState{11, 0});
    const auto b = ConditionedDiffusionTarget::generate_observations(20, 5, 0.01, 0.1, RngState{11, 0});
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
