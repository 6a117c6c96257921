#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "gwgflow/samplers.hpp"
#include "gwgflow/target.hpp"

using namespace gwg;

namespace {

GaussianMixtureTarget std_normal_1d() { return {{1.0}, {0.0}, 1, 1.0}; }

Mlp constant_field_net(int d, double c) {
    RngState rng{100, 0};
    Mlp net = Mlp::init(d, {4, 4}, Activation::Tanh, rng);
    net.fill(0.0);
    for (auto& b : net.layers.back().b) b = c;
    return net;
}

FlowOptions quick_opts(int outer, int inner) {
    FlowOptions o;
    o.outer_iters = outer;
    o.inner_iters = inner;
    o.step_size = 0.05;
    o.checkpoint_every = 1;
    o.optimizer.kind = OptimizerSpec::Kind::SgdMomentum;
    o.optimizer.lr = 1e-3;
    o.divergence.kind = DivergenceSpec::Kind::Hutchinson;
    o.divergence.probes = 1;
    return o;
}

} // namespace

TEST_CASE("gwg with a pre-set constant field moves every particle by h*c") {
    auto target = std_normal_1d();
    ParticleSystem ps = ParticleSystem::init_gaussian(6, 1, {}, 1.0, RngState{3, 0});
    const auto before = ps.x;
    Mlp net = constant_field_net(1, 0.3);
    auto young = YoungFunction::lp(2.0);
    FlowOptions opts = quick_opts(1, 0);
    opts.step_size = 0.1;
    const auto log = gwg_run(opts, target, ps, net, young);
    CHECK_FALSE(log.diverged);
    for (int i = 0; i < ps.n; ++i) {
        CHECK(ps.x[static_cast<std::size_t>(i)] == before[static_cast<std::size_t>(i)] + 0.1 * 0.3);
    }
}

TEST_CASE("lp(p=2) and quadratic(H=I) produce bit-identical trajectories") {
    auto target = std_normal_1d();
    auto run_with = [&](YoungFunction young) {
        ParticleSystem ps = ParticleSystem::init_gaussian(16, 1, {}, 1.0, RngState{4, 0});
        RngState nrng{5, 0};
        Mlp net = Mlp::init(1, {6, 6}, Activation::Tanh, nrng);
        const auto log = gwg_run(quick_opts(5, 3), target, ps, net, young);
        REQUIRE_FALSE(log.diverged);
        return ps.x;
    };
    const auto a = run_with(YoungFunction::lp(2.0));
    const auto b = run_with(YoungFunction::quadratic({1.0}));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("seeded reruns are bit-identical for every sampler") {
    auto target = std_normal_1d();

    auto gwg_once = [&] {
        ParticleSystem ps = ParticleSystem::init_gaussian(12, 1, {}, 1.0, RngState{6, 0});
        RngState nrng{7, 0};
        Mlp net = Mlp::init(1, {6}, Activation::Tanh, nrng);
        auto young = YoungFunction::lp(2.0);
        gwg_run(quick_opts(4, 2), target, ps, net, young);
        return ps.x;
    };
    auto a = gwg_once(), b = gwg_once();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    auto lmc_once = [&] {
        ParticleSystem ps = ParticleSystem::init_gaussian(12, 1, {}, 1.0, RngState{8, 0});
        lmc_run(ps, target, 1e-2, 25);
        return ps.x;
    };
    a = lmc_once();
    b = lmc_once();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    auto svgd_once = [&] {
        ParticleSystem ps = ParticleSystem::init_gaussian(12, 1, {}, 1.0, RngState{9, 0});
        for (int s = 0; s < 10; ++s) svgd_step(ps, target, 0.1);
        return ps.x;
    };
    a = svgd_once();
    b = svgd_once();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("ada with zero p learning rate reproduces plain gwg bit-for-bit") {
    MonomialGammaTarget target;
    auto run = [&](bool adaptive) {
        ParticleSystem ps = ParticleSystem::init_gaussian(10, 2, {}, 1.0, RngState{10, 0});
        RngState nrng{11, 0};
        Mlp net = Mlp::init(2, {6}, Activation::Tanh, nrng);
        auto young = YoungFunction::lp(1.5);
        FlowOptions opts = quick_opts(5, 2);
        opts.step_size = 1e-3;
        if (adaptive) {
            opts.adaptive = true;
            opts.ada_p_lr = 0.0;
        }
        const auto log = adaptive ? ada_gwg_run(opts, target, ps, net, young)
                                  : gwg_run(opts, target, ps, net, young);
        REQUIRE_FALSE(log.diverged);
        return ps.x;
    };
    const auto a = run(false), b = run(true);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("ada p updates clip at the bounds and the trace stays inside them") {
    CHECK(clip(3.9 + 0.2, 1.1, 4.0) == 4.0);
    CHECK(clip(1.15 - 0.2, 1.1, 4.0) == 1.1);

    MonomialGammaTarget target;
    ParticleSystem ps = ParticleSystem::init_gaussian(40, 2, {}, 1.0, RngState{12, 0});
    RngState nrng{13, 0};
    Mlp net = Mlp::init(2, {8}, Activation::Tanh, nrng);
    auto young = YoungFunction::lp(1.5);
    FlowOptions opts = quick_opts(30, 3);
    opts.step_size = 1e-3;
    opts.adaptive = true;
    opts.ada_p_lr = 50.0; // exaggerated so the trace actually hits the clip range
    opts.ada_lb = 1.2;
    opts.ada_ub = 2.5;
    std::vector<double> trace;
    const auto log = ada_gwg_run(opts, target, ps, net, young,
                                 [&](const TrajectoryRecord& r, const ParticleSystem&) {
                                     trace.push_back(r.p);
                                 });
    REQUIRE_FALSE(log.diverged);
    REQUIRE(trace.size() > 10);
    for (double p : trace) {
        CHECK(p >= 1.2);
        CHECK(p <= 2.5);
    }
}

TEST_CASE("a_hat_grad pinned values and finite-difference consistency") {
    const double e = std::exp(1.0);
    auto r = a_hat_grad(2.0, std::vector<double>{e}, 1, 1);
    CHECK(r.value == doctest::Approx(e * e / 2.0).epsilon(1e-14));
    CHECK(r.d_dp == doctest::Approx(e * e / 4.0).epsilon(1e-14));

    for (double p : {1.3, 2.0, 3.5}) {
        r = a_hat_grad(p, std::vector<double>{1.0}, 1, 1);
        CHECK(r.value == doctest::Approx(1.0 / p).epsilon(1e-14));
        CHECK(r.d_dp == doctest::Approx(-1.0 / (p * p)).epsilon(1e-14));
    }

    RngState rng{14, 0};
    std::vector<double> field(24);
    for (auto& v : field) v = rng.next_uniform(-2.0, 2.0);
    for (double p : {1.4, 2.0, 3.0}) {
        const double delta = 1e-6;
        const double fd = (a_hat_grad(p + delta, field, 6, 4).value -
                           a_hat_grad(p - delta, field, 6, 4).value) /
                          (2.0 * delta);
        const double an = a_hat_grad(p, field, 6, 4).d_dp;
        CHECK(std::fabs(fd - an) <= 1e-7 * std::max(std::fabs(fd), 1.0));
    }
}

TEST_CASE("svgd single particle reduces to plain gradient ascent on log density") {
    auto target = std_normal_1d();
    ParticleSystem ps;
    ps.n = 1;
    ps.d = 1;
    ps.x = {2.0};
    svgd_step(ps, target, 0.1);
    CHECK(ps.x[0] == doctest::Approx(2.0 + 0.1 * (-2.0)).epsilon(1e-15));
}

TEST_CASE("svgd coincident particles receive identical pure-gradient updates") {
    auto target = std_normal_1d();
    ParticleSystem ps;
    ps.n = 2;
    ps.d = 1;
    ps.x = {1.5, 1.5};
    svgd_step(ps, target, 0.2);
    CHECK(ps.x[0] == ps.x[1]);
    CHECK(ps.x[0] == doctest::Approx(1.5 + 0.2 * (-1.5)).epsilon(1e-12));
}

TEST_CASE("svgd update is permutation-equivariant") {
    GaussianMixtureTarget target({0.5, 0.5}, {-1.0, 0.5, 1.0, -0.5}, 2, 0.8);
    ParticleSystem ps = ParticleSystem::init_gaussian(7, 2, {}, 1.0, RngState{15, 0});
    ParticleSystem rev = ps;
    for (int i = 0; i < ps.n; ++i) {
        for (int j = 0; j < 2; ++j) {
            rev.x[static_cast<std::size_t>(ps.n - 1 - i) * 2 + j] = ps.x[static_cast<std::size_t>(i) * 2 + j];
        }
    }
    svgd_step(ps, target, 0.1);
    svgd_step(rev, target, 0.1);
    for (int i = 0; i < ps.n; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double a = ps.x[static_cast<std::size_t>(i) * 2 + j];
            const double b = rev.x[static_cast<std::size_t>(ps.n - 1 - i) * 2 + j];
            CHECK(std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(a)));
        }
    }
}

TEST_CASE("lmc step arithmetic with injected noise") {
    auto target = std_normal_1d();
    ParticleSystem ps;
    ps.n = 1;
    ps.d = 1;
    ps.x = {1.0};
    lmc_step_with_noise(ps, target, 0.01, std::vector<double>{0.5});
    CHECK(ps.x[0] == doctest::Approx(1.0 - 0.01 + std::sqrt(0.02) * 0.5).epsilon(1e-12));
    CHECK(ps.x[0] == doctest::Approx(1.0607107).epsilon(1e-7));

    ps.x = {1.0};
    lmc_step_with_noise(ps, target, 1e-300, std::vector<double>{0.0});
    CHECK(ps.x[0] == 1.0);
}

TEST_CASE("gwg preserves mirror symmetry for a symmetric target and odd net") {
    GaussianMixtureTarget target({0.5, 0.5}, {-1.0, 1.0}, 1, 1.0);
    const int half = 6;
    ParticleSystem ps = ParticleSystem::init_gaussian(2 * half, 1, {}, 1.0, RngState{16, 0});
    for (int i = 0; i < half; ++i) ps.x[static_cast<std::size_t>(half + i)] = -ps.x[static_cast<std::size_t>(i)];

    RngState nrng{17, 0};
    Mlp net = Mlp::init(1, {8, 8}, Activation::Tanh, nrng);
    for (auto& l : net.layers) std::fill(l.b.begin(), l.b.end(), 0.0); // odd field hook

    auto young = YoungFunction::lp(2.0);
    FlowOptions opts = quick_opts(5, 2);
    opts.divergence.kind = DivergenceSpec::Kind::Exact;
    bool symmetric = true;
    gwg_run(opts, target, ps, net, young,
            [&](const TrajectoryRecord&, const ParticleSystem& sys) {
                for (int i = 0; i < half; ++i) {
                    if (std::fabs(sys.x[static_cast<std::size_t>(half + i)] +
                                  sys.x[static_cast<std::size_t>(i)]) > 1e-9) {
                        symmetric = false;
                    }
                }
            });
    CHECK(symmetric);
}

TEST_CASE("divergent run aborts with an iteration index and particle dump") {
    auto target = std_normal_1d();
    ParticleSystem ps = ParticleSystem::init_gaussian(3, 1, {}, 1.0, RngState{18, 0});
    Mlp net = constant_field_net(1, 1e308);
    auto young = YoungFunction::lp(2.0);
    FlowOptions opts = quick_opts(1, 0);
    opts.step_size = 10.0;
    const auto log = gwg_run(opts, target, ps, net, young);
    CHECK(log.diverged);
    CHECK(log.failure.find("iteration") != std::string::npos);
    CHECK(log.failure.find("particle") != std::string::npos);
}

TEST_CASE("pfg refresh keeps the quadratic young valid and the run finite") {
    GaussianMixtureTarget target({1.0}, {0.0, 0.0}, 2, 1.0);
    ParticleSystem ps = ParticleSystem::init_gaussian(30, 2, {}, 1.0, RngState{19, 0});
    RngState nrng{20, 0};
    Mlp net = Mlp::init(2, {6}, Activation::Tanh, nrng);
    auto young = YoungFunction::quadratic({1.0, 1.0});
    FlowOptions opts = quick_opts(6, 2);
    opts.pfg = true;
    opts.pfg_alpha = 1.0;
    opts.pfg_refresh_every = 2;
    const auto log = gwg_run(opts, target, ps, net, young);
    CHECK_FALSE(log.diverged);
    for (double h : young.h_diag()) CHECK(h > 0.0);
}

TEST_CASE("warm start persists parameters across outer iterations") {
    auto target = std_normal_1d();
    ParticleSystem ps = ParticleSystem::init_gaussian(10, 1, {}, 1.0, RngState{21, 0});
    RngState nrng{22, 0};
    Mlp net = Mlp::init(1, {6}, Activation::Tanh, nrng);
    const auto w0 = flatten(net);
    auto young = YoungFunction::lp(2.0);
    gwg_run(quick_opts(3, 2), target, ps, net, young);
    const auto w1 = flatten(net);
    int changed = 0;
    for (std::size_t i = 0; i < w0.size(); ++i) changed += w0[i] != w1[i];
    CHECK(changed > 0); // parameters carried and trained across the whole run
}
