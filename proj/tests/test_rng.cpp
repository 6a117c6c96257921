#include <doctest.h>

#include <cmath>

#include "gwgflow/rng.hpp"

using gwg::RngState;

TEST_CASE("equal seeds give bit-identical sequences") {
    RngState a{42, 0}, b{42, 0};
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    RngState c{42, 0}, e{43, 0};
    int same = 0;
    for (int i = 0; i < 64; ++i) same += c.next_u64() == e.next_u64();
    CHECK(same == 0);
}

TEST_CASE("state resumes from (seed, counter)") {
    RngState a{7, 0};
    for (int i = 0; i < 17; ++i) a.next_u64();
    RngState resumed{7, a.counter};
    RngState fresh{7, 0};
    for (int i = 0; i < 17; ++i) fresh.next_u64();
    for (int i = 0; i < 100; ++i) CHECK(resumed.next_u64() == fresh.next_u64());
}

TEST_CASE("split streams key off the seed only and do not collide") {
    RngState a{9, 0};
    const RngState child_before = a.split(3);
    for (int i = 0; i < 50; ++i) a.next_u64();
    const RngState child_after = a.split(3);
    CHECK(child_before.seed == child_after.seed);

    RngState c0 = a.split(0), c1 = a.split(1);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += c0.next_u64() == c1.next_u64();
    CHECK(same == 0);
}

TEST_CASE("uniforms land in [0,1) and gaussians have sane moments") {
    RngState r{12345, 0};
    const int n = 100000;
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = r.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double g = r.next_gaussian();
        mean += g;
        var += g * g;
    }
    mean /= n;
    var = var / n - mean * mean;
    CHECK(std::fabs(mean) < 0.02);
    CHECK(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("rademacher draws are +-1 and roughly balanced") {
    RngState r{77, 0};
    int pos = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const double v = r.next_rademacher();
        CHECK((v == 1.0 || v == -1.0));
        pos += v > 0;
    }
    CHECK(pos > n / 2 - 300);
    CHECK(pos < n / 2 + 300);
}
